"""Patch-prior denoising with a Gaussian mixture over image patches.

The restoration is a half-quadratic split over an increasing beta schedule.
For each beta, every overlapping patch of the current estimate is stripped
of its DC mean, assigned the mixture component with the highest evidence
under noise variance 1/beta, Wiener-filtered toward that component, and the
filtered patches (DC re-added) are averaged back into the image together
with the data term:

    u = (eta * f + beta * sum_i P_i^T zhat_i) / (eta + beta * m)

where m counts how many patches overlap each pixel. eta = 0 is allowed and
gives the pure prior flow (no data term), which is handy for analysing the
denoiser in isolation.

The mixture itself can be fitted from patches with a small EM loop
(`fit_gmm_em`) or loaded from the plain-text model format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class GMM:
    """Gaussian mixture over patch space: weights (K,), means (K, d), covs (K, d, d)."""

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    # Mean log-likelihood per EM iteration, populated by fit_gmm_em.
    fit_log_likelihood: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.covs = np.asarray(self.covs, dtype=np.float64)
        if self.weights.ndim != 1 or self.means.ndim != 2 or self.covs.ndim != 3:
            raise ValueError("GMM arrays must have shapes (K,), (K, d), (K, d, d)")
        k, d = self.means.shape
        if self.weights.shape != (k,) or self.covs.shape != (k, d, d):
            raise ValueError("inconsistent GMM component count or dimension")

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def validate(self, floor: float = 0.0) -> None:
        """Check weight normalization, symmetry, and the covariance spectrum floor."""
        if not np.all(self.weights > 0):
            raise ValueError("mixture weights must all be positive")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        for k in range(self.n_components):
            c = self.covs[k]
            if np.max(np.abs(c - c.T)) > 1e-12:
                raise ValueError(f"covariance {k} is not symmetric")
            smallest = float(np.linalg.eigvalsh(c)[0])
            if smallest < floor - 1e-12:
                raise ValueError(
                    f"covariance {k} has eigenvalue {smallest} below floor {floor}"
                )


def save_gmm(path, gmm: GMM) -> None:
    """Write a mixture as plain text: header 'K d', weights, means, covariances."""
    lines = [f"{gmm.n_components} {gmm.dim}"]
    lines.append(" ".join(f"{w:.17g}" for w in gmm.weights))
    for k in range(gmm.n_components):
        lines.append(" ".join(f"{v:.17g}" for v in gmm.means[k]))
    for k in range(gmm.n_components):
        for row in gmm.covs[k]:
            lines.append(" ".join(f"{v:.17g}" for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_gmm(path) -> GMM:
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: truncated GMM file")
    k, d = int(tokens[0]), int(tokens[1])
    expected = 2 + k + k * d + k * d * d
    if len(tokens) != expected:
        raise ValueError(f"{path}: expected {expected} tokens, found {len(tokens)}")
    vals = np.array([float(t) for t in tokens[2:]])
    weights = vals[:k]
    means = vals[k : k + k * d].reshape(k, d)
    covs = vals[k + k * d :].reshape(k, d, d)
    return GMM(weights, means, covs)


def extract_patches(u: np.ndarray, patch: int) -> np.ndarray:
    """All overlapping patch x patch windows of u, flattened row-major to (N, patch^2)."""
    u = np.asarray(u, dtype=np.float64)
    if patch < 1 or patch > min(u.shape):
        raise ValueError(f"patch size {patch} does not fit image {u.shape}")
    windows = sliding_window_view(u, (patch, patch))
    return windows.reshape(-1, patch * patch)


def _overlap_counts(shape: tuple[int, int], patch: int) -> np.ndarray:
    """Per-pixel count of overlapping patches (outer product of 1-D counts)."""
    def counts_1d(n: int) -> np.ndarray:
        i = np.arange(n)
        return np.minimum(i, n - patch) - np.maximum(0, i - patch + 1) + 1.0

    return np.outer(counts_1d(shape[0]), counts_1d(shape[1]))


def _scatter_patches(zhat: np.ndarray, shape: tuple[int, int], patch: int) -> np.ndarray:
    """Sum P_i^T zhat_i over all patch positions, in a fixed accumulation order."""
    nh = shape[0] - patch + 1
    nw = shape[1] - patch + 1
    blocks = zhat.reshape(nh, nw, patch, patch)
    acc = np.zeros(shape)
    for di in range(patch):
        for dj in range(patch):
            acc[di : di + nh, dj : dj + nw] += blocks[:, :, di, dj]
    return acc


def _component_scores(zc: np.ndarray, gmm: GMM, noise_var: float) -> np.ndarray:
    """log(weight_k) + log N(zc | mean_k, cov_k + noise_var*I) for every patch/component."""
    n, d = zc.shape
    scores = np.empty((n, gmm.n_components))
    eye = np.eye(d)
    for k in range(gmm.n_components):
        cov = gmm.covs[k] + noise_var * eye
        sign, logdet = np.linalg.slogdet(cov)
        if sign <= 0:
            raise ValueError(f"component {k} covariance is not positive definite")
        diff = zc - gmm.means[k]
        maha = np.sum(diff * np.linalg.solve(cov, diff.T).T, axis=1)
        scores[:, k] = math.log(gmm.weights[k]) - 0.5 * (d * _LOG_2PI + logdet + maha)
    return scores


def epll_denoise(f, prior: GMM, eta: float, beta_schedule, patch: int) -> np.ndarray:
    """Half-quadratic patch-GMM restoration of f.

    beta_schedule must be strictly increasing and positive; an empty schedule
    returns f unchanged. The prior dimension must equal patch^2.
    """
    f = np.asarray(f, dtype=np.float64)
    betas = [float(b) for b in beta_schedule]
    if any(b <= 0 for b in betas) or any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError(f"beta schedule must be positive and strictly increasing: {betas}")
    if not (eta >= 0 and math.isfinite(eta)):
        raise ValueError(f"eta must be non-negative and finite, got {eta}")
    if patch < 1 or patch > min(f.shape):
        raise ValueError(f"patch size {patch} does not fit image {f.shape}")
    if prior.dim != patch * patch:
        raise ValueError(f"prior dimension {prior.dim} != patch^2 = {patch * patch}")

    u = f.copy()
    if not betas:
        return u
    counts = _overlap_counts(f.shape, patch)
    for beta in betas:
        z = extract_patches(u, patch)
        dc = z.mean(axis=1, keepdims=True)
        zc = z - dc
        best = np.argmax(_component_scores(zc, prior, 1.0 / beta), axis=1)
        zhat = np.empty_like(zc)
        eye = np.eye(patch * patch)
        for k in range(prior.n_components):
            sel = best == k
            if not np.any(sel):
                continue
            cov = prior.covs[k]
            diff = zc[sel] - prior.means[k]
            x = np.linalg.solve(cov + (1.0 / beta) * eye, diff.T)
            zhat[sel] = prior.means[k] + (cov @ x).T
        zhat += dc
        acc = _scatter_patches(zhat, f.shape, patch)
        u = (eta * f + beta * acc) / (eta + beta * counts)
    return u


def _kmeanspp_seeds(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ style seeding: spread initial means by squared distance."""
    n = data.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((data - data[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((data - data[idx]) ** 2, axis=1))
    return data[chosen].copy()


def fit_gmm_em(patches, k: int, iters: int, seed: int, reg: float) -> GMM:
    """Fit a K-component mixture to patch vectors by EM.

    Means are seeded k-means++ style from ``seed``; each M-step covariance
    gets ``+reg*I`` so the spectrum never collapses. The mean log-likelihood
    of the parameters entering each iteration is recorded on the result as
    ``fit_log_likelihood`` (length ``iters``).
    """
    data = np.asarray(patches, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("patches must be a non-empty (N, d) array")
    if k < 1:
        raise ValueError(f"component count must be >= 1, got {k}")
    if data.shape[0] < k:
        raise ValueError(f"need at least {k} patches, got {data.shape[0]}")
    if not (reg > 0 and math.isfinite(reg)):
        raise ValueError(f"reg must be positive and finite, got {reg}")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")

    n, d = data.shape
    rng = np.random.default_rng(seed)
    eye = np.eye(d)
    means = _kmeanspp_seeds(data, k, rng)
    base_cov = np.cov(data, rowvar=False, bias=True).reshape(d, d) + reg * eye
    covs = np.repeat(base_cov[None, :, :], k, axis=0)
    weights = np.full(k, 1.0 / k)
    history = []

    for _ in range(iters):
        gmm = GMM(weights, means, covs)
        scores = _component_scores(data, gmm, 0.0)
        top = scores.max(axis=1, keepdims=True)
        log_norm = top[:, 0] + np.log(np.sum(np.exp(scores - top), axis=1))
        history.append(float(log_norm.mean()))
        resp = np.exp(scores - log_norm[:, None])

        bulk = resp.sum(axis=0)
        new_weights = np.empty(k)
        new_means = means.copy()
        new_covs = covs.copy()
        for j in range(k):
            if bulk[j] <= n * 1e-12:
                # Dead component: keep its parameters, give it a token weight.
                new_weights[j] = 1e-12
                continue
            r = resp[:, j]
            new_weights[j] = bulk[j] / n
            mu = (r @ data) / bulk[j]
            diff = data - mu
            new_covs[j] = (diff.T * r) @ diff / bulk[j] + reg * eye
            new_means[j] = mu
        weights = new_weights / new_weights.sum()
        means = new_means
        covs = new_covs

    return GMM(weights, means, covs, fit_log_likelihood=np.array(history))
