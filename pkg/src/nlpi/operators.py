"""Black-box image operators and induced constructions.

An operator is a named, parameterized map Image -> Image. ``apply`` turns an
`OperatorDescriptor` into the actual action; the engine only ever sees a
callable, so anything that maps images to images of the same shape can be
analyzed. Induced wrappers (complement / enhance / shifted) compose
descriptors without touching the wrapped implementation, which is why the
eigenvalue identities they promise hold to machine precision.

Every descriptor carries a 64-bit digest of its canonicalized name and
parameters. For the message-hiding application the digest documents exactly
what the two parties must share.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .epll import GMM, epll_denoise
from .tv import tv_denoise

BOUNDARY_MODES = ("periodic", "reflect")


@dataclass(frozen=True)
class OperatorDescriptor:
    """A named operator plus its flat parameter map.

    ``params`` is a sorted tuple of (key, value) pairs so descriptors stay
    hashable and canonical. Wrappers keep the wrapped operator in ``base``;
    bulky data (an explicit matrix, a fitted mixture) rides in ``payload``.
    """

    name: str
    params: tuple[tuple[str, Any], ...] = ()
    base: "OperatorDescriptor | None" = None
    payload: Any = None

    def param(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    def canonical(self) -> str:
        parts = [self.name]
        if self.params:
            parts.append(",".join(f"{k}={_canon_value(v)}" for k, v in self.params))
        if self.payload is not None:
            parts.append(_payload_fingerprint(self.payload))
        if self.base is not None:
            parts.append("(" + self.base.canonical() + ")")
        return "|".join(parts)

    @property
    def digest(self) -> int:
        """64-bit hash of the canonicalized name + parameters."""
        raw = hashlib.blake2b(self.canonical().encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(raw, "big")


def _canon_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return "[" + ";".join(_canon_value(x) for x in v) + "]"
    return str(v)


def _payload_fingerprint(payload) -> str:
    h = hashlib.blake2b(digest_size=8)
    if isinstance(payload, np.ndarray):
        h.update(str(payload.shape).encode())
        h.update(np.ascontiguousarray(payload, dtype=np.float64).tobytes())
        return "nd:" + h.hexdigest()
    if isinstance(payload, GMM):
        for arr in (payload.weights, payload.means, payload.covs):
            h.update(str(arr.shape).encode())
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return "gmm:" + h.hexdigest()
    raise TypeError(f"cannot fingerprint payload of type {type(payload)!r}")


# ---------------------------------------------------------------------------
# Concrete operators


def identity_op() -> OperatorDescriptor:
    return OperatorDescriptor("identity")


def matrix_op(matrix) -> OperatorDescriptor:
    """Linear operator acting on the row-major flattening of the image."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix operator needs a square matrix, got {m.shape}")
    return OperatorDescriptor("matrix", payload=m)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Gaussian taps truncated at ceil(3*sigma) per side, renormalized to sum 1."""
    if sigma == 0:
        return np.ones(1)
    radius = int(math.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(u, sigma: float, boundary: str = "reflect") -> np.ndarray:
    """Separable Gaussian blur; sigma = 0 is the identity."""
    u = np.asarray(u, dtype=np.float64)
    if sigma < 0 or not math.isfinite(sigma):
        raise ValueError(f"sigma must be >= 0 and finite, got {sigma}")
    if boundary not in BOUNDARY_MODES:
        raise ValueError(f"boundary must be one of {BOUNDARY_MODES}, got {boundary!r}")
    if sigma == 0:
        return u.copy()
    kernel = gaussian_kernel(sigma)
    radius = len(kernel) // 2
    mode = "wrap" if boundary == "periodic" else "symmetric"
    out = u
    for axis in (0, 1):
        pad = [(radius, radius) if ax == axis else (0, 0) for ax in (0, 1)]
        padded = np.pad(out, pad, mode=mode)
        acc = np.zeros_like(u)
        for i, w in enumerate(kernel):
            sl = [slice(None), slice(None)]
            sl[axis] = slice(i, i + out.shape[axis])
            acc += w * padded[tuple(sl)]
        out = acc
    return out


def gaussian_blur_op(sigma: float, boundary: str = "periodic") -> OperatorDescriptor:
    """Linear mass-preserving blur; with the periodic boundary, Fourier modes
    are exact eigenfunctions with eigenvalue given by the kernel cosine sums."""
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ValueError(f"sigma must be positive, got {sigma}")
    if boundary not in BOUNDARY_MODES:
        raise ValueError(f"boundary must be one of {BOUNDARY_MODES}, got {boundary!r}")
    return OperatorDescriptor(
        "gaussian-blur", (("boundary", boundary), ("sigma", float(sigma)))
    )


def tv_op(eta: float, inner_iters: int = 200, tau: float = 0.125) -> OperatorDescriptor:
    if not (eta > 0 and math.isfinite(eta)):
        raise ValueError(f"eta must be positive, got {eta}")
    if inner_iters < 1:
        raise ValueError(f"inner_iters must be >= 1, got {inner_iters}")
    if not (0.0 < tau <= 0.125):
        raise ValueError(f"tau must lie in (0, 1/8], got {tau}")
    return OperatorDescriptor(
        "tv",
        (("eta", float(eta)), ("inner_iters", int(inner_iters)), ("tau", float(tau))),
    )


DEFAULT_BETA_FACTORS = (1.0, 4.0, 8.0, 16.0, 32.0)


def epll_op(prior: GMM, eta: float, betas=None, patch: int = 6) -> OperatorDescriptor:
    """Patch-GMM denoiser descriptor; default beta schedule is eta * {1,4,8,16,32}."""
    if not (eta > 0 and math.isfinite(eta)):
        raise ValueError(f"eta must be positive, got {eta}")
    if betas is None:
        betas = tuple(eta * b for b in DEFAULT_BETA_FACTORS)
    betas = tuple(float(b) for b in betas)
    if any(b <= 0 for b in betas) or any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError(f"beta schedule must be positive and strictly increasing: {betas}")
    if prior.dim != patch * patch:
        raise ValueError(f"prior dimension {prior.dim} != patch^2 = {patch * patch}")
    return OperatorDescriptor(
        "epll",
        (("betas", betas), ("eta", float(eta)), ("patch", int(patch))),
        payload=prior,
    )


# ---------------------------------------------------------------------------
# Induced operators


def complement(op: OperatorDescriptor) -> OperatorDescriptor:
    """T_dag(u) = u - T(u); swaps eigenvalue lambda for 1 - lambda."""
    return OperatorDescriptor("complement", base=op)


def enhance(op: OperatorDescriptor, alpha: float) -> OperatorDescriptor:
    """T_E(u) = u + alpha*(u - T(u)); eigenvalue lambda maps to 1 + alpha - alpha*lambda."""
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be positive, got {alpha}")
    return OperatorDescriptor("enhance", (("alpha", float(alpha)),), base=op)


def shifted(op: OperatorDescriptor, alpha: float, lambda_max: float) -> OperatorDescriptor:
    """I - alpha*T with caller-declared eigenvalue bound; lambda maps to 1 - alpha*lambda."""
    if not (lambda_max > 0 and math.isfinite(lambda_max)):
        raise ValueError(f"lambda_max must be positive, got {lambda_max}")
    if not (0.0 < alpha <= 1.0 / lambda_max):
        raise ValueError(f"alpha must lie in (0, 1/lambda_max] = (0, {1.0 / lambda_max}], got {alpha}")
    return OperatorDescriptor(
        "shifted", (("alpha", float(alpha)), ("lambda_max", float(lambda_max))), base=op
    )


# ---------------------------------------------------------------------------
# Application


def apply(op: OperatorDescriptor, u) -> np.ndarray:
    """Apply a described operator; output has the input's shape, finite entries."""
    u = np.asarray(u, dtype=np.float64)
    out = _dispatch(op, u)
    if out.shape != u.shape:
        raise RuntimeError(f"operator '{op.name}' changed the image shape")
    if not np.isfinite(out).all():
        raise RuntimeError(f"operator '{op.name}' produced non-finite output")
    return out


def _dispatch(op: OperatorDescriptor, u: np.ndarray) -> np.ndarray:
    if op.name == "identity":
        return u.copy()
    if op.name == "matrix":
        m = op.payload
        if m.shape[1] != u.size:
            raise ValueError(f"matrix of size {m.shape} cannot act on image {u.shape}")
        return (m @ u.ravel()).reshape(u.shape)
    if op.name == "gaussian-blur":
        return gaussian_blur(u, op.param("sigma"), op.param("boundary"))
    if op.name == "tv":
        return tv_denoise(u, op.param("eta"), op.param("inner_iters"), op.param("tau"))
    if op.name == "epll":
        return epll_denoise(u, op.payload, op.param("eta"), op.param("betas"), op.param("patch"))
    if op.name == "complement":
        return u - apply(op.base, u)
    if op.name == "enhance":
        return u + op.param("alpha") * (u - apply(op.base, u))
    if op.name == "shifted":
        return u - op.param("alpha") * apply(op.base, u)
    raise ValueError(f"unknown operator name: {op.name!r}")


def as_callable(op) -> Callable[[np.ndarray], np.ndarray]:
    """Accept a descriptor or any Image -> Image callable."""
    if isinstance(op, OperatorDescriptor):
        return lambda u: apply(op, u)
    if callable(op):
        return op
    raise TypeError(f"expected an OperatorDescriptor or callable, got {type(op)!r}")
