"""Run configuration files: UTF-8 key=value lines, '#' comments.

Paths are resolved relative to the config file's directory. Each command
validates the key set it accepts and rejects anything it does not know, so a
typo fails loudly instead of silently using a default.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .epll import GMM, extract_patches, fit_gmm_em, load_gmm
from .operators import (
    OperatorDescriptor,
    complement,
    enhance,
    epll_op,
    gaussian_blur_op,
    identity_op,
    matrix_op,
    shifted,
    tv_op,
)
from .pgmio import load_image


class ConfigError(ValueError):
    pass


class RunConfig:
    """Parsed key=value config plus typed accessors."""

    def __init__(self, values: dict[str, str], base_dir: Path):
        self.values = values
        self.base_dir = base_dir

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        values: dict[str, str] = {}
        for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value
        return cls(values, path.parent)

    def check_keys(self, exact: set[str], prefixes: tuple[str, ...] = ()) -> None:
        unknown = [
            k
            for k in self.values
            if k not in exact and not any(k.startswith(p) for p in prefixes)
        ]
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    def has(self, key: str) -> bool:
        return key in self.values

    def get_str(self, key: str, default: str | None = None) -> str:
        if key in self.values:
            return self.values[key]
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def get_float(self, key: str, default: float | None = None) -> float:
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return default
        try:
            return float(self.values[key])
        except ValueError as exc:
            raise ConfigError(f"{key}: not a number: {self.values[key]!r}") from exc

    def get_int(self, key: str, default: int | None = None) -> int:
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return default
        try:
            return int(self.values[key])
        except ValueError as exc:
            raise ConfigError(f"{key}: not an integer: {self.values[key]!r}") from exc

    def get_bool(self, key: str, default: bool) -> bool:
        if key not in self.values:
            return default
        text = self.values[key].lower()
        if text in ("true", "yes", "on", "1"):
            return True
        if text in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {self.values[key]!r}")

    def get_path(self, key: str, default: str | None = None) -> Path:
        return self.base_dir / self.get_str(key, default)


OP_KEY_PREFIX = "op."
OP_KEYS = {
    "op",
    "op.eta",
    "op.inner_iters",
    "op.tau",
    "op.sigma",
    "op.boundary",
    "op.alpha",
    "op.lambda_max",
    "op.patch",
    "op.betas",
    "op.matrix",
    "op.prior",
    "op.components",
    "op.em_iters",
    "op.reg",
    "op.seed",
}


def build_operator(cfg: RunConfig, input_image: np.ndarray | None = None) -> OperatorDescriptor:
    """Construct the operator named by ``op`` (wrappers allowed, e.g.
    complement(tv), enhance(tv), shifted(gaussian-blur)).

    The EPLL prior comes from ``op.prior``: a .gmm file path, or the word
    ``input`` to fit a mixture from the input image's own patches.
    """
    spec = cfg.get_str("op")
    return _parse_op(spec, cfg, input_image)


def _parse_op(spec: str, cfg: RunConfig, input_image) -> OperatorDescriptor:
    spec = spec.strip()
    for wrapper in ("complement", "enhance", "shifted"):
        if spec.startswith(wrapper + "(") and spec.endswith(")"):
            base = _parse_op(spec[len(wrapper) + 1 : -1], cfg, input_image)
            if wrapper == "complement":
                return complement(base)
            if wrapper == "enhance":
                return enhance(base, cfg.get_float("op.alpha"))
            return shifted(base, cfg.get_float("op.alpha"), cfg.get_float("op.lambda_max"))
    if spec == "identity":
        return identity_op()
    if spec == "matrix":
        path = cfg.get_path("op.matrix")
        rows = [
            [float(tok) for tok in line.split()]
            for line in path.read_text().splitlines()
            if line.strip()
        ]
        return matrix_op(np.array(rows))
    if spec == "gaussian-blur":
        return gaussian_blur_op(
            cfg.get_float("op.sigma"), cfg.get_str("op.boundary", "periodic")
        )
    if spec == "tv":
        return tv_op(
            cfg.get_float("op.eta"),
            cfg.get_int("op.inner_iters", 200),
            cfg.get_float("op.tau", 0.125),
        )
    if spec == "epll":
        patch = cfg.get_int("op.patch", 6)
        eta = cfg.get_float("op.eta")
        betas = None
        if cfg.has("op.betas"):
            betas = tuple(float(b) for b in cfg.get_str("op.betas").split(","))
        prior_spec = cfg.get_str("op.prior")
        if prior_spec == "input":
            if input_image is None:
                raise ConfigError("op.prior=input requires an input image")
            prior = fit_gmm_em(
                extract_patches(input_image, patch),
                cfg.get_int("op.components", 10),
                cfg.get_int("op.em_iters", 30),
                cfg.get_int("op.seed", 0),
                cfg.get_float("op.reg", 1e-6),
            )
        else:
            prior = load_gmm(cfg.base_dir / prior_spec)
        return epll_op(prior, eta, betas, patch)
    raise ConfigError(f"unknown operator {spec!r}")


def load_config_image(cfg: RunConfig, key: str) -> np.ndarray:
    return load_image(cfg.get_path(key))
