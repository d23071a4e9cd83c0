"""Image primitives: validation, inner-product geometry, rescaling, quality metrics.

An image is a 2-D float64 numpy array indexed (row, col), stored row-major.
Intensities nominally live in [0, 1] for display purposes but are never
clamped; the one hard rule is that every public operation returns finite
entries only.
"""

from __future__ import annotations

import math

import numpy as np

# Reported instead of +inf for a zero-MSE comparison.
PSNR_CAP_DB = 999.0


def as_image(data) -> np.ndarray:
    """Coerce ``data`` to a validated 2-D float64 image array."""
    u = np.asarray(data, dtype=np.float64)
    if u.ndim != 2 or u.size == 0:
        raise ValueError(f"image must be a non-empty 2-D array, got shape {u.shape}")
    if not np.isfinite(u).all():
        raise ValueError("image contains non-finite entries")
    return u


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")


def l2_norm(u) -> float:
    """Euclidean norm over all pixels."""
    v = np.ravel(np.asarray(u, dtype=np.float64))
    return float(math.sqrt(np.dot(v, v)))


def inner(a, b) -> float:
    """l2 inner product of two same-sized images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b)
    return float(np.dot(a.ravel(), b.ravel()))


def center_and_scale(u, target_norm: float) -> np.ndarray:
    """Remove the mean, then rescale so the result has norm ``target_norm``.

    Raises ValueError for a (numerically) constant input, where nothing is
    left after mean removal and the rescale would divide by zero.
    """
    if not (target_norm > 0 and math.isfinite(target_norm)):
        raise ValueError(f"target_norm must be positive and finite, got {target_norm}")
    u = as_image(u)
    centered = u - u.mean()
    centered -= centered.mean()  # second pass shaves the rounding residue off the mean
    norm = l2_norm(centered)
    if norm <= 1e-12 * max(1.0, float(np.abs(u).max())):
        raise ValueError("constant image: nothing left after mean removal")
    return centered * (target_norm / norm)


def mse(reference, test) -> float:
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    check_same_shape(reference, test)
    diff = reference - test
    return float(np.mean(diff * diff))


def psnr(reference, test, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE) in dB; identical inputs report ``PSNR_CAP_DB``."""
    if not (peak > 0 and math.isfinite(peak)):
        raise ValueError(f"peak must be positive and finite, got {peak}")
    err = mse(reference, test)
    if err == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(peak * peak / err), PSNR_CAP_DB)
