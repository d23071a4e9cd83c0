"""Reproducible image degradations: noise, blur, wraparound shift, message overlay.

Stochastic kinds draw from numpy's seeded PCG64 generator (normal variates
via the ziggurat method), so a given (image, spec) pair reproduces
bit-identical output on a given numpy build, and statistically identical
output everywhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image import as_image
from .operators import gaussian_blur

KINDS = ("gaussian-noise", "gaussian-blur", "circular-shift", "message-overlay")


@dataclass(frozen=True)
class DegradationSpec:
    """One named degradation plus its kind-specific parameters.

    sigma serves gaussian-noise (std) and gaussian-blur (kernel width);
    (dx, dy) the circular shift; (amplitude, row, col, message) the overlay.
    """

    kind: str
    sigma: float = 0.0
    dx: int = 0
    dy: int = 0
    amplitude: float = 0.0
    row: int = 0
    col: int = 0
    message: np.ndarray | None = None
    seed: int = 0

    def validate(self, shape: tuple[int, int]) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown degradation kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("gaussian-noise", "gaussian-blur"):
            if self.sigma < 0 or not math.isfinite(self.sigma):
                raise ValueError(f"sigma must be >= 0 and finite, got {self.sigma}")
        if self.kind == "message-overlay":
            if not math.isfinite(self.amplitude):
                raise ValueError(f"amplitude must be finite, got {self.amplitude}")
            if self.message is None:
                raise ValueError("message-overlay needs a message image")
            mh, mw = np.asarray(self.message).shape
            if self.row < 0 or self.col < 0 or self.row + mh > shape[0] or self.col + mw > shape[1]:
                raise ValueError(
                    f"message of size {(mh, mw)} at ({self.row}, {self.col}) "
                    f"does not fit inside image {shape}"
                )

    def label(self) -> str:
        """Short description, comma-free so it can sit in a CSV field."""
        if self.kind == "gaussian-noise":
            return f"gaussian-noise(sigma={self.sigma:g};seed={self.seed})"
        if self.kind == "gaussian-blur":
            return f"gaussian-blur(sigma={self.sigma:g})"
        if self.kind == "circular-shift":
            return f"circular-shift(dx={self.dx};dy={self.dy})"
        return f"message-overlay(amplitude={self.amplitude:g};row={self.row};col={self.col})"


def degrade(u, spec: DegradationSpec) -> np.ndarray:
    """Apply one degradation; deterministic given (u, spec) including the seed."""
    u = as_image(u)
    spec.validate(u.shape)
    if spec.kind == "gaussian-noise":
        rng = np.random.default_rng(spec.seed)
        return u + spec.sigma * rng.standard_normal(u.shape)
    if spec.kind == "gaussian-blur":
        return gaussian_blur(u, spec.sigma, boundary="reflect")
    if spec.kind == "circular-shift":
        return np.roll(u, (spec.dy, spec.dx), axis=(0, 1))
    # message-overlay
    out = u.copy()
    msg = np.asarray(spec.message, dtype=np.float64)
    out[spec.row : spec.row + msg.shape[0], spec.col : spec.col + msg.shape[1]] += (
        spec.amplitude * msg
    )
    return out
