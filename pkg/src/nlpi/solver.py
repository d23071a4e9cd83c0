"""Generalized power iteration for black-box image operators.

Three variants:

* `power_iteration` — the plain scheme. Every iterate is the sign-corrected,
  norm-one image  u <- sign(<u, T(u)>) * T(u) / ||T(u)||;  at a fixed point
  the eigenvalue is sign(<u, T(u)>) * ||T(u)||.
* `power_iteration_zero_mean` — removes the mean and rescales each iterate
  back to the initializer's norm, which keeps the process away from the
  trivial constant mode and preserves contrast. The eigenvalue is reported
  as the Rayleigh quotient at exit.
* `deflated_power_iteration` — projects each iterate orthogonal to a basis
  of previously found eigenfunctions, yielding the next mode. The output is
  flagged as a pseudo-eigenfunction unless its residual passes muster.

Operators may be `OperatorDescriptor`s or any Image -> Image callable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .image import inner, l2_norm
from .operators import as_callable

# Default stopping thresholds on the post-normalization step residual.
DEFAULT_PLAIN_TOL = 1e-9
DEFAULT_ZERO_MEAN_TOL_FACTOR = 1e-7  # times ||f0||, the mean-removed initializer norm


@dataclass
class SolverConfig:
    """Iteration budget and stopping rule.

    tol is the threshold on the post-normalization step residual
    ||u_{k+1} - u_k||. Leave it None for the defaults: 1e-9 in plain mode,
    1e-7 * ||f0|| in zero-mean mode (f0 = the mean-removed initializer).
    """

    max_iters: int = 20000
    tol: float | None = None
    record_trace: bool = True
    trace_stride: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol is not None and not (self.tol > 0):
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.trace_stride < 1:
            raise ValueError(f"trace_stride must be >= 1, got {self.trace_stride}")


@dataclass
class IterationTrace:
    """Per-iteration scalars recorded along a run (subject to trace_stride)."""

    iterations: list[int] = field(default_factory=list)
    rayleigh: list[float] = field(default_factory=list)
    cos_angle: list[float] = field(default_factory=list)
    residual: list[float] = field(default_factory=list)
    lipschitz_ratio: list[float] = field(default_factory=list)
    operator_norm: list[float] = field(default_factory=list)

    def append(self, k, rayleigh, cos_angle, residual, ratio, op_norm) -> None:
        self.iterations.append(int(k))
        self.rayleigh.append(float(rayleigh))
        self.cos_angle.append(float(cos_angle))
        self.residual.append(float(residual))
        self.lipschitz_ratio.append(float(ratio))
        self.operator_norm.append(float(op_norm))

    def __len__(self) -> int:
        return len(self.iterations)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("iter,rayleigh,cos_angle,residual,lipschitz_ratio,operator_norm\n")
            for row in zip(
                self.iterations,
                self.rayleigh,
                self.cos_angle,
                self.residual,
                self.lipschitz_ratio,
                self.operator_norm,
            ):
                fh.write(",".join(repr(v) for v in row) + "\n")


@dataclass
class EigenResult:
    eigenfunction: np.ndarray
    eigenvalue: float
    converged: bool
    iterations_run: int
    trace: IterationTrace
    pseudo: bool = False


class LambdaEstimate(float):
    """Eigenvalue estimate; ``zero_output`` flags T(u) = 0 (value forced to 0)."""

    zero_output: bool

    def __new__(cls, value: float, zero_output: bool):
        obj = super().__new__(cls, value)
        obj.zero_output = zero_output
        return obj


def estimate_eigenvalue(op, u) -> LambdaEstimate:
    """sign(<u, T(u)>) * ||T(u)|| / ||u||; returns 0 with a flag when T(u) = 0."""
    u = np.asarray(u, dtype=np.float64)
    norm_u = l2_norm(u)
    if norm_u == 0:
        raise ValueError("cannot estimate an eigenvalue at u = 0")
    tu = as_callable(op)(u)
    norm_tu = l2_norm(tu)
    if norm_tu == 0:
        return LambdaEstimate(0.0, True)
    return LambdaEstimate(float(np.sign(inner(u, tu))) * norm_tu / norm_u, False)


def _trace_due(k: int, stride: int) -> bool:
    return k == 1 or k % stride == 0


def power_iteration(op, f, cfg: SolverConfig | None = None) -> EigenResult:
    """Plain power iteration from initializer f (Algorithm-1 style)."""
    cfg = cfg or SolverConfig()
    step = as_callable(op)
    tol = DEFAULT_PLAIN_TOL if cfg.tol is None else cfg.tol
    f = np.asarray(f, dtype=np.float64)
    norm_f = l2_norm(f)
    if norm_f == 0:
        raise ValueError("initializer must be nonzero")
    u = f / norm_f
    trace = IterationTrace()
    prev_residual = None
    converged = False
    k = 0
    for k in range(1, cfg.max_iters + 1):
        tu = step(u)
        norm_tu = l2_norm(tu)
        if norm_tu == 0:
            raise RuntimeError(f"operator returned the zero image at iteration {k}")
        corr = inner(u, tu)
        if corr == 0:
            raise RuntimeError(f"zero correlation <u, T(u)> at iteration {k}")
        u_next = (math.copysign(1.0, corr) / norm_tu) * tu
        residual = l2_norm(u_next - u)
        ratio = 0.0 if (prev_residual is None or prev_residual == 0) else residual / prev_residual
        if cfg.record_trace and (_trace_due(k, cfg.trace_stride) or residual < tol):
            # u has unit norm, so the Rayleigh quotient is just the correlation.
            trace.append(k, corr, corr / norm_tu, residual, ratio, norm_tu)
        prev_residual = residual
        u = u_next
        if residual < tol:
            converged = True
            break
    eigenvalue = float(estimate_eigenvalue(step, u))
    return EigenResult(u, eigenvalue, converged, k, trace)


def power_iteration_zero_mean(op, f, cfg: SolverConfig | None = None) -> EigenResult:
    """Mean-free power iteration: avoids the trivial constant eigenfunction.

    Each iterate is mean-removed and rescaled to the norm of the mean-removed
    initializer; the eigenvalue is the Rayleigh quotient at exit.
    """
    cfg = cfg or SolverConfig()
    step = as_callable(op)
    f = np.asarray(f, dtype=np.float64)
    f0 = f - f.mean()
    f0 -= f0.mean()
    norm0 = l2_norm(f0)
    if norm0 <= 1e-12 * max(1.0, float(np.abs(f).max())):
        raise ValueError("initializer is constant: nothing left after mean removal")
    tol = DEFAULT_ZERO_MEAN_TOL_FACTOR * norm0 if cfg.tol is None else cfg.tol
    u = f0
    trace = IterationTrace()
    prev_residual = None
    converged = False
    k = 0
    for k in range(1, cfg.max_iters + 1):
        tu = step(u)
        norm_tu = l2_norm(tu)
        centered = tu - tu.mean()
        norm_c = l2_norm(centered)
        if norm_c == 0:
            raise RuntimeError(f"operator output became constant at iteration {k}")
        u_next = centered * (norm0 / norm_c)
        residual = l2_norm(u_next - u)
        ratio = 0.0 if (prev_residual is None or prev_residual == 0) else residual / prev_residual
        if cfg.record_trace and (_trace_due(k, cfg.trace_stride) or residual < tol):
            corr = inner(u, tu)
            cos = 0.0 if norm_tu == 0 else corr / (norm0 * norm_tu)
            trace.append(k, corr / norm0**2, cos, residual, ratio, norm_tu)
        prev_residual = residual
        u = u_next
        if residual < tol:
            converged = True
            break
    tu = step(u)
    eigenvalue = inner(u, tu) / norm0**2
    return EigenResult(u, eigenvalue, converged, k, trace)


def project_orthogonal(f, basis, orthonormal: bool = True) -> np.ndarray:
    """Remove the basis components from f.

    With ``orthonormal`` the single-projection formula f - sum <f, v_i> v_i is
    used after checking pairwise <v_i, v_j> = delta_ij to 1e-8. Otherwise the
    components are removed sequentially (Gram-Schmidt style), each scaled by
    1/||v_i||^2.
    """
    basis = [np.asarray(v, dtype=np.float64) for v in basis]
    if not basis:
        raise ValueError("basis must be non-empty")
    f = np.asarray(f, dtype=np.float64)
    if orthonormal:
        check_orthonormal(basis)
        g = f.copy()
        for v in basis:
            g = g - inner(f, v) * v
    else:
        g = f.copy()
        for v in basis:
            nv2 = inner(v, v)
            if nv2 == 0:
                raise ValueError("basis contains a zero image")
            g = g - (inner(g, v) / nv2) * v
    if l2_norm(g) <= 1e-12 * max(1.0, l2_norm(f)):
        raise ValueError("projection annihilated the image (it lies in the basis span)")
    return g


def check_orthonormal(basis, tol: float = 1e-8) -> None:
    """Raise if any pair violates <v_i, v_j> = delta_ij beyond tol."""
    for i, vi in enumerate(basis):
        for j in range(i, len(basis)):
            g = inner(vi, basis[j])
            expected = 1.0 if i == j else 0.0
            if abs(g - expected) > tol:
                raise ValueError(
                    f"basis pair ({i}, {j}) violates orthonormality: <v{i}, v{j}> = {g!r}"
                )


def deflated_power_iteration(
    op,
    basis,
    f,
    cfg: SolverConfig | None = None,
    orthonormal: bool = True,
    refine_iters: int = 0,
    pseudo_tol: float = 1e-6,
) -> EigenResult:
    """Power iteration kept orthogonal to previously found eigenfunctions.

    Each step applies the operator, projects the output orthogonal to the
    basis, and renormalizes (with the plain scheme's sign correction, so
    negative eigenvalues converge too). Optionally ``refine_iters`` extra
    plain iterations run afterwards without projection, trading orthogonality
    for a smaller eigen-residual. The result is flagged ``pseudo`` when its
    relative eigen-residual exceeds ``pseudo_tol``.
    """
    cfg = cfg or SolverConfig()
    step = as_callable(op)
    tol = DEFAULT_PLAIN_TOL if cfg.tol is None else cfg.tol
    basis = [np.asarray(v, dtype=np.float64) for v in basis]
    u = project_orthogonal(np.asarray(f, dtype=np.float64), basis, orthonormal)
    u = u / l2_norm(u)
    trace = IterationTrace()
    prev_residual = None
    converged = False
    k = 0
    for k in range(1, cfg.max_iters + 1):
        z = step(u)
        norm_z = l2_norm(z)
        if norm_z == 0:
            raise RuntimeError(f"operator returned the zero image at iteration {k}")
        try:
            y = project_orthogonal(z, basis, orthonormal)
        except ValueError as exc:
            raise RuntimeError(f"projection annihilated the iterate at iteration {k}") from exc
        norm_y = l2_norm(y)
        corr = inner(u, y)
        sign = math.copysign(1.0, corr) if corr != 0 else 1.0
        u_next = (sign / norm_y) * y
        residual = l2_norm(u_next - u)
        ratio = 0.0 if (prev_residual is None or prev_residual == 0) else residual / prev_residual
        if cfg.record_trace and (_trace_due(k, cfg.trace_stride) or residual < tol):
            trace.append(k, inner(u, z), inner(u, z) / norm_z, residual, ratio, norm_z)
        prev_residual = residual
        u = u_next
        if residual < tol:
            converged = True
            break
    for _ in range(refine_iters):
        z = step(u)
        corr = inner(u, z)
        sign = math.copysign(1.0, corr) if corr != 0 else 1.0
        u = (sign / l2_norm(z)) * z
    tu = step(u)
    lam = inner(u, tu)  # u has unit norm
    eigen_residual = l2_norm(tu - lam * u)
    eigenvalue = float(np.sign(lam)) * l2_norm(tu) if lam != 0 else l2_norm(tu)
    return EigenResult(u, eigenvalue, converged, k, trace, pseudo=eigen_residual > pseudo_tol)
