"""Validation measures for candidate eigenfunctions.

A converged pair (u, T(u)) must look proportional in every way we can
measure: globally (Rayleigh quotient equal to the operator-norm gain, angle
cosine at +-1), pointwise (the ratio map T(u)/u constant over pixels where u
is meaningfully nonzero), and dynamically (step residual ratios whose
cumulative product collapses toward zero). Iterated un-normalized
application gives the per-pixel decay profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image import check_same_shape, inner, l2_norm
from .operators import as_callable
from .pgmio import write_pgm


def rayleigh_quotient(u, tu) -> float:
    """<u, T(u)> / ||u||^2; equals the eigenvalue at an eigenfunction."""
    u = np.asarray(u, dtype=np.float64)
    tu = np.asarray(tu, dtype=np.float64)
    check_same_shape(u, tu)
    n2 = float(np.dot(u.ravel(), u.ravel()))
    if n2 == 0:
        raise ValueError("Rayleigh quotient undefined at u = 0")
    return inner(u, tu) / n2


def cos_angle(u, tu) -> float:
    """Cosine of the angle between u and T(u), clamped into [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    tu = np.asarray(tu, dtype=np.float64)
    nu = l2_norm(u)
    ntu = l2_norm(tu)
    if nu == 0 or ntu == 0:
        raise ValueError("cos_angle undefined for a zero image")
    return min(1.0, max(-1.0, inner(u, tu) / (nu * ntu)))


def eigen_residual(u, tu) -> float:
    """||T(u) - R(u) u|| / ||u||, the scalar violation of proportionality."""
    u = np.asarray(u, dtype=np.float64)
    tu = np.asarray(tu, dtype=np.float64)
    lam = rayleigh_quotient(u, tu)
    return l2_norm(tu - lam * u) / l2_norm(u)


@dataclass
class RatioMap:
    """Pointwise T(u)/u over the mask of meaningfully nonzero pixels."""

    ratios: np.ndarray
    mask: np.ndarray
    mean: float
    std: float
    fraction_within: float
    mask_eps: float
    rel_tol: float

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("row,col,ratio,masked\n")
            for r in range(self.ratios.shape[0]):
                for c in range(self.ratios.shape[1]):
                    fh.write(f"{r},{c},{float(self.ratios[r, c])!r},{int(self.mask[r, c])}\n")

    def write_pgm(self, path) -> None:
        """Render the masked ratios to 8-bit, unmasked pixels mapped to black."""
        vals = self.ratios[self.mask]
        lo, hi = float(vals.min()), float(vals.max())
        img = np.zeros_like(self.ratios)
        if hi > lo:
            img[self.mask] = (self.ratios[self.mask] - lo) / (hi - lo)
        else:
            img[self.mask] = 1.0
        write_pgm(path, img)


def ratio_map(u, tu, mask_eps: float = 1e-3, rel_tol: float = 0.02) -> RatioMap:
    """Pointwise ratios T(u)/u with statistics over |u| >= mask_eps * max|u|.

    fraction_within is the share of masked pixels whose ratio lies within
    rel_tol (relative) of the masked mean.
    """
    u = np.asarray(u, dtype=np.float64)
    tu = np.asarray(tu, dtype=np.float64)
    check_same_shape(u, tu)
    if not (mask_eps > 0):
        raise ValueError(f"mask_eps must be positive, got {mask_eps}")
    peak = float(np.abs(u).max())
    if peak == 0:
        raise ValueError("ratio map undefined: u is zero everywhere")
    mask = np.abs(u) >= mask_eps * peak
    ratios = np.zeros_like(u)
    np.divide(tu, u, out=ratios, where=mask)
    vals = ratios[mask]
    mean = float(vals.mean())
    std = float(vals.std())
    within = np.abs(vals - mean) <= rel_tol * abs(mean)
    return RatioMap(ratios, mask, mean, std, float(within.mean()), mask_eps, rel_tol)


@dataclass
class ContractionTrace:
    """Step-residual ratios L_k = r_k / r_{k-1} and their running products."""

    ratios: list[float]
    products: list[float]
    weak_condition_met: bool
    threshold: float


def contraction_trace(residuals, threshold: float = 1e-3) -> ContractionTrace:
    """Ratios and cumulative products of a residual sequence.

    A zero denominator yields an inf sentinel that is excluded from the
    running product. The weak condition holds when the final product drops
    below ``threshold``.
    """
    res = [float(r) for r in residuals]
    if len(res) < 3:
        raise ValueError(f"need at least 3 residuals, got {len(res)}")
    ratios: list[float] = []
    products: list[float] = []
    prod = 1.0
    for prev, cur in zip(res, res[1:]):
        if prev == 0:
            ratios.append(math.inf)
        else:
            ratio = cur / prev
            ratios.append(ratio)
            prod *= ratio
        products.append(prod)
    return ContractionTrace(ratios, products, products[-1] < threshold, threshold)


@dataclass
class DecayProfiles:
    """Per-pixel value trajectories under repeated, un-normalized application.

    raw has shape (n+1, H, W) including the initial image; normalized divides
    each pixel trajectory by its first entry (NaN where it is zero);
    truncated drops the first ``truncate`` entries of raw.
    """

    raw: np.ndarray
    normalized: np.ndarray
    truncated: np.ndarray
    truncate: int

    def write_csv(self, path, variant: str = "raw", pixel_stride: int = 1) -> None:
        data = {"raw": self.raw, "normalized": self.normalized, "truncated": self.truncated}[
            variant
        ]
        first_step = self.truncate if variant == "truncated" else 0
        rows = range(0, data.shape[1], pixel_stride)
        cols = range(0, data.shape[2], pixel_stride)
        with open(path, "w", encoding="utf-8") as fh:
            header = ["step"] + [f"px_{r}_{c}" for r in rows for c in cols]
            fh.write(",".join(header) + "\n")
            for s in range(data.shape[0]):
                vals = [str(first_step + s)] + [
                    repr(float(data[s, r, c])) for r in rows for c in cols
                ]
                fh.write(",".join(vals) + "\n")


def decay_profiles(op, u, n: int, truncate: int = 0) -> DecayProfiles:
    """Apply op n times with no normalization, recording every pixel each step."""
    if n < 1:
        raise ValueError(f"need n >= 1 applications, got {n}")
    if not (0 <= truncate <= n):
        raise ValueError(f"truncate must lie in [0, n], got {truncate}")
    step = as_callable(op)
    u = np.asarray(u, dtype=np.float64)
    frames = [u.copy()]
    for _ in range(n):
        frames.append(step(frames[-1]))
    raw = np.stack(frames)
    first = raw[0]
    normalized = np.full_like(raw, np.nan)
    np.divide(raw, first[None, :, :], out=normalized, where=first[None, :, :] != 0)
    return DecayProfiles(raw, normalized, raw[truncate:].copy(), truncate)


def monotonicity_violations(values, slack: float = 0.0) -> list[int]:
    """Indices i where values[i+1] < values[i] - slack (soft diagnostic, not an error)."""
    vals = [float(v) for v in values]
    return [i for i, (a, b) in enumerate(zip(vals, vals[1:])) if b < a - slack]
