"""Total-variation denoising via the dual projection scheme.

Solves  min_u  eta/2 ||f - u||^2 + TV(u)  on the pixel grid. The dual
variable p = (px, py) is driven by the fixed-step projected iteration

    p <- (p + tau * grad(div p - eta * f)) / (1 + tau * |grad(div p - eta * f)|)

and the denoised image is read off as  u = f - div(p) / eta.  The gradient
uses forward differences with a Neumann boundary (last row/column of each
component is zero); the divergence below is its exact negative adjoint, so
<grad u, p> = -<u, div p> holds to machine precision. tau must stay in
(0, 1/8] for the iteration to be non-expansive.

The solver runs a fixed number of inner iterations per call (no warm start,
no tolerance), so one call is a deterministic map of its inputs.
"""

from __future__ import annotations

import math

import numpy as np


def gradient(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward-difference gradient with Neumann boundary."""
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    if u.shape[1] > 1:
        gx[:, :-1] = u[:, 1:] - u[:, :-1]
    if u.shape[0] > 1:
        gy[:-1, :] = u[1:, :] - u[:-1, :]
    return gx, gy


def divergence(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Discrete divergence, the exact negative adjoint of ``gradient``."""
    div = np.zeros_like(px)
    if px.shape[1] > 1:
        div[:, 0] += px[:, 0]
        div[:, 1:-1] += px[:, 1:-1] - px[:, :-2]
        div[:, -1] += -px[:, -2]
    if py.shape[0] > 1:
        div[0, :] += py[0, :]
        div[1:-1, :] += py[1:-1, :] - py[:-2, :]
        div[-1, :] += -py[-2, :]
    return div


def tv_denoise(f, eta: float, inner_iters: int = 200, tau: float = 0.125) -> np.ndarray:
    """Run ``inner_iters`` dual steps and return the denoised image.

    eta weighs the fidelity term: large eta pins the output to f, small eta
    smooths aggressively.
    """
    if not (eta > 0 and math.isfinite(eta)):
        raise ValueError(f"eta must be positive and finite, got {eta}")
    if inner_iters < 1:
        raise ValueError(f"inner_iters must be >= 1, got {inner_iters}")
    if not (0.0 < tau <= 0.125):
        raise ValueError(f"tau must lie in (0, 1/8], got {tau}")
    f = np.asarray(f, dtype=np.float64)
    px = np.zeros_like(f)
    py = np.zeros_like(f)
    target = eta * f
    for _ in range(inner_iters):
        w = divergence(px, py) - target
        gx, gy = gradient(w)
        denom = 1.0 + tau * np.sqrt(gx * gx + gy * gy)
        px = (px + tau * gx) / denom
        py = (py + tau * gy) / denom
    return f - divergence(px, py) / eta
