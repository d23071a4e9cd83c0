"""Hiding a small binary message inside an eigenfunction.

An eigenfunction is robust to small additive perturbations: re-running power
iterations under the operator that produced it pulls the carrier back to the
eigenfunction, and the difference image exposes the perturbation. Whoever
knows the operator's exact parameters (the shared secret, documented by the
descriptor digest) can therefore recover the message; anyone iterating with
the wrong parameters converges somewhere else entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image import as_image, l2_norm
from .solver import (
    DEFAULT_ZERO_MEAN_TOL_FACTOR,
    SolverConfig,
    power_iteration_zero_mean,
)


@dataclass(frozen=True)
class StegoPackage:
    """Carrier image (eigenfunction + message) plus the embedding geometry."""

    carrier: np.ndarray
    amplitude: float
    placement: tuple[int, int]
    message_dims: tuple[int, int]


@dataclass
class StegoDecodeResult:
    recovered: np.ndarray
    difference: np.ndarray
    message_estimate: np.ndarray
    converged: bool
    iterations_run: int


def steg_encode(eigenfunction, message, amplitude: float, row: int, col: int) -> StegoPackage:
    """Add amplitude * message at (row, col); the message must be binary {0, 1}.

    The eigenfunction is expected to have passed validation (small
    eigen-residual) under the operator both parties share.
    """
    u = as_image(eigenfunction)
    msg = as_image(message)
    if not np.isin(msg, (0.0, 1.0)).all():
        raise ValueError("message must contain only 0 and 1")
    if not (amplitude >= 0 and math.isfinite(amplitude)):
        raise ValueError(f"amplitude must be >= 0 and finite, got {amplitude}")
    mh, mw = msg.shape
    if row < 0 or col < 0 or row + mh > u.shape[0] or col + mw > u.shape[1]:
        raise ValueError(
            f"message of size {(mh, mw)} at ({row}, {col}) does not fit inside {u.shape}"
        )
    carrier = u.copy()
    carrier[row : row + mh, col : col + mw] += amplitude * msg
    return StegoPackage(carrier, amplitude, (row, col), (mh, mw))


def steg_decode(
    carrier,
    op,
    iters: int,
    threshold_frac: float = 0.5,
    region: tuple[int, int, int, int] | None = None,
) -> StegoDecodeResult:
    """Re-run zero-mean power iterations from the carrier and expose the message.

    The difference recovered - carrier is binarized at threshold_frac times
    its peak magnitude, over the declared (row, col, height, width) region if
    given, else the whole image. A difference indistinguishable from the
    solver tolerance yields an all-zero estimate. A non-convergent run is not
    an error; the flag is reported and the caller decides.
    """
    u0 = as_image(carrier)
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if not (0 < threshold_frac <= 1):
        raise ValueError(f"threshold_frac must lie in (0, 1], got {threshold_frac}")
    cfg = SolverConfig(max_iters=iters, record_trace=False)
    result = power_iteration_zero_mean(op, u0, cfg)
    recovered = result.eigenfunction
    difference = recovered - u0
    if region is None:
        window = np.abs(difference)
    else:
        r, c, h, w = region
        if r < 0 or c < 0 or h < 1 or w < 1 or r + h > u0.shape[0] or c + w > u0.shape[1]:
            raise ValueError(f"region {region} does not fit inside {u0.shape}")
        window = np.abs(difference[r : r + h, c : c + w])
    # Solver tolerance scale for this run.
    f0 = u0 - u0.mean()
    tol = DEFAULT_ZERO_MEAN_TOL_FACTOR * l2_norm(f0)
    peak = float(window.max())
    if peak == 0 or l2_norm(difference) < 10 * tol:
        estimate = np.zeros_like(window)
    else:
        estimate = (window >= threshold_frac * peak).astype(np.float64)
    return StegoDecodeResult(recovered, difference, estimate, result.converged, result.iterations_run)
