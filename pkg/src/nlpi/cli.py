"""Command-line surface: config-driven runs that write images, CSV, and figures.

Usage: nlpi <command> <config-file>

Commands: eigen, deflate, diagnose, decay, robustness, steg-encode,
steg-decode, fit-gmm. Configs are key=value text files ('#' comments); paths
resolve relative to the config file. Every command writes its outputs under
the directory named by ``output_dir`` and prints one machine-readable
summary line (also saved as summary.txt). Exit code 0 means every requested
output was written.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import figures
from .config import OP_KEYS, ConfigError, RunConfig, build_operator
from .degrade import DegradationSpec, degrade
from .diagnostics import (
    contraction_trace,
    cos_angle,
    decay_profiles,
    eigen_residual,
    monotonicity_violations,
    ratio_map,
    rayleigh_quotient,
)
from .epll import extract_patches, fit_gmm_em, save_gmm
from .image import center_and_scale, l2_norm, psnr
from .operators import apply
from .pgmio import load_binary_message, load_image, write_pgm, write_raw
from .solver import (
    SolverConfig,
    check_orthonormal,
    deflated_power_iteration,
    power_iteration,
    power_iteration_zero_mean,
)
from .stego import steg_decode, steg_encode

COMMON_KEYS = {"output_dir", "figures"}
SOLVER_KEYS = {"mode", "max_iters", "tol", "trace_stride", "initial_norm"}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _summarize(outdir: Path, command: str, pairs: list[tuple[str, object]]) -> None:
    line = " ".join([f"command={command}"] + [f"{k}={_fmt(v)}" for k, v in pairs])
    (outdir / "summary.txt").write_text(line + "\n", encoding="utf-8")
    print(line)


def _outdir(cfg: RunConfig) -> Path:
    out = cfg.get_path("output_dir")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_image(outdir: Path, stem: str, image) -> None:
    write_raw(outdir / f"{stem}.raw", image)
    write_pgm(outdir / f"{stem}.pgm", image)


def _solver_config(cfg: RunConfig) -> SolverConfig:
    return SolverConfig(
        max_iters=cfg.get_int("max_iters", 20000),
        tol=cfg.get_float("tol") if cfg.has("tol") else None,
        trace_stride=cfg.get_int("trace_stride", 1),
    )


def _load_input(cfg: RunConfig) -> np.ndarray:
    u = load_image(cfg.get_path("input"))
    if cfg.has("initial_norm"):
        u = center_and_scale(u, cfg.get_float("initial_norm"))
    return u


def cmd_eigen(cfg: RunConfig) -> None:
    cfg.check_keys(COMMON_KEYS | SOLVER_KEYS | {"input", "mask_eps", "rel_tol"} | OP_KEYS)
    outdir = _outdir(cfg)
    f = _load_input(cfg)
    op = build_operator(cfg, f)
    mode = cfg.get_str("mode", "zero-mean")
    solver = {"plain": power_iteration, "zero-mean": power_iteration_zero_mean}.get(mode)
    if solver is None:
        raise ConfigError(f"mode must be plain or zero-mean, got {mode!r}")
    result = solver(op, f, _solver_config(cfg))
    u = result.eigenfunction
    tu = apply(op, u)
    rm = ratio_map(u, tu, cfg.get_float("mask_eps", 1e-3), cfg.get_float("rel_tol", 0.02))
    _write_image(outdir, "eigenfunction", u)
    result.trace.write_csv(outdir / "trace.csv")
    rm.write_csv(outdir / "ratio_map.csv")
    rm.write_pgm(outdir / "ratio_map.pgm")
    if cfg.get_bool("figures", True):
        figures.save_trace_figure(result.trace, outdir / "trace.png", f"eigen ({mode})")
        figures.save_image_figure(u, outdir / "eigenfunction.png", "eigenfunction")
        figures.save_ratio_map_figure(rm, outdir / "ratio_map.png")
    _summarize(
        outdir,
        "eigen",
        [
            ("lambda", result.eigenvalue),
            ("converged", result.converged),
            ("iterations", result.iterations_run),
            ("eigen_residual", eigen_residual(u, tu)),
            ("cos_angle", cos_angle(u, tu)),
            ("ratio_mean", rm.mean),
            ("ratio_std", rm.std),
            ("ratio_fraction_within", rm.fraction_within),
            ("operator_digest", op.digest),
            ("rayleigh_monotone_violations", len(monotonicity_violations(result.trace.rayleigh, 1e-12))),
        ],
    )


def cmd_deflate(cfg: RunConfig) -> None:
    cfg.check_keys(
        COMMON_KEYS | SOLVER_KEYS | {"input", "orthonormal", "refine_iters"} | OP_KEYS,
        prefixes=("basis.",),
    )
    outdir = _outdir(cfg)
    f = _load_input(cfg)
    op = build_operator(cfg, f)
    indices = sorted(int(k.split(".", 1)[1]) for k in cfg.values if k.startswith("basis."))
    if not indices:
        raise ConfigError("deflate needs at least one basis.N image")
    basis = [load_image(cfg.get_path(f"basis.{i}")) for i in indices]
    orthonormal = cfg.get_bool("orthonormal", True)
    if orthonormal:
        check_orthonormal(basis)
    result = deflated_power_iteration(
        op,
        basis,
        f,
        _solver_config(cfg),
        orthonormal=orthonormal,
        refine_iters=cfg.get_int("refine_iters", 0),
    )
    u = result.eigenfunction
    tu = apply(op, u)
    overlap = max(abs(float(np.vdot(v, u))) for v in basis)
    _write_image(outdir, "eigenfunction", u)
    result.trace.write_csv(outdir / "trace.csv")
    if cfg.get_bool("figures", True):
        figures.save_trace_figure(result.trace, outdir / "trace.png", "deflated run")
        figures.save_image_figure(u, outdir / "eigenfunction.png", "deflated eigenfunction")
    _summarize(
        outdir,
        "deflate",
        [
            ("lambda", result.eigenvalue),
            ("converged", result.converged),
            ("iterations", result.iterations_run),
            ("pseudo", result.pseudo),
            ("eigen_residual", eigen_residual(u, tu)),
            ("max_basis_overlap", overlap),
            ("operator_digest", op.digest),
        ],
    )


def cmd_diagnose(cfg: RunConfig) -> None:
    cfg.check_keys(COMMON_KEYS | {"input", "mask_eps", "rel_tol"} | OP_KEYS)
    outdir = _outdir(cfg)
    u = load_image(cfg.get_path("input"))
    op = build_operator(cfg, u)
    tu = apply(op, u)
    rm = ratio_map(u, tu, cfg.get_float("mask_eps", 1e-3), cfg.get_float("rel_tol", 0.02))
    rm.write_csv(outdir / "ratio_map.csv")
    rm.write_pgm(outdir / "ratio_map.pgm")
    _write_image(outdir, "operator_output", tu)
    if cfg.get_bool("figures", True):
        figures.save_ratio_map_figure(rm, outdir / "ratio_map.png")
    _summarize(
        outdir,
        "diagnose",
        [
            ("rayleigh", rayleigh_quotient(u, tu)),
            ("cos_angle", cos_angle(u, tu)),
            ("eigen_residual", eigen_residual(u, tu)),
            ("ratio_mean", rm.mean),
            ("ratio_std", rm.std),
            ("ratio_fraction_within", rm.fraction_within),
            ("operator_digest", op.digest),
        ],
    )


def cmd_decay(cfg: RunConfig) -> None:
    cfg.check_keys(COMMON_KEYS | {"input", "steps", "truncate", "pixel_stride"} | OP_KEYS)
    outdir = _outdir(cfg)
    u = load_image(cfg.get_path("input"))
    op = build_operator(cfg, u)
    profiles = decay_profiles(op, u, cfg.get_int("steps", 10), cfg.get_int("truncate", 0))
    stride = cfg.get_int("pixel_stride", 1)
    for variant in ("raw", "normalized", "truncated"):
        profiles.write_csv(outdir / f"decay_{variant}.csv", variant, stride)
    _write_image(outdir, "final", profiles.raw[-1])
    if cfg.get_bool("figures", True):
        figures.save_decay_figure(profiles, outdir / "decay.png")
    _summarize(
        outdir,
        "decay",
        [
            ("steps", profiles.raw.shape[0] - 1),
            ("truncate", profiles.truncate),
            ("final_norm", l2_norm(profiles.raw[-1])),
            ("operator_digest", op.digest),
        ],
    )


def _collect_degradations(cfg: RunConfig) -> list[tuple[int, DegradationSpec]]:
    indices = sorted(
        {int(k.split(".")[1]) for k in cfg.values if k.startswith("degradation.")}
    )
    specs = []
    for i in indices:
        prefix = f"degradation.{i}."
        kind = cfg.get_str(prefix + "kind")
        message = None
        if cfg.has(prefix + "message"):
            message = load_binary_message(cfg.get_path(prefix + "message"))
        specs.append(
            (
                i,
                DegradationSpec(
                    kind,
                    sigma=cfg.get_float(prefix + "sigma", 0.0),
                    dx=cfg.get_int(prefix + "dx", 0),
                    dy=cfg.get_int(prefix + "dy", 0),
                    amplitude=cfg.get_float(prefix + "amplitude", 0.0),
                    row=cfg.get_int(prefix + "row", 0),
                    col=cfg.get_int(prefix + "col", 0),
                    message=message,
                    seed=cfg.get_int(prefix + "seed", 0),
                ),
            )
        )
    return specs


def cmd_robustness(cfg: RunConfig) -> None:
    cfg.check_keys(
        COMMON_KEYS
        | {"input", "mode", "iters", "psnr_peak", "natural", "small", "noise_divisor", "seed"}
        | OP_KEYS,
        prefixes=("degradation.",),
    )
    outdir = _outdir(cfg)
    u = load_image(cfg.get_path("input"))
    op = build_operator(cfg, u)
    peak = cfg.get_float("psnr_peak", 1.0)
    mode = cfg.get_str("mode", "degradations")
    if mode == "psnr-gain":
        _psnr_gain(cfg, outdir, op, u, peak)
        return
    if mode != "degradations":
        raise ConfigError(f"mode must be degradations or psnr-gain, got {mode!r}")
    iters = cfg.get_int("iters", 500)
    rows = []
    for i, spec in _collect_degradations(cfg):
        degraded = degrade(u, spec)
        pre = eigen_residual(degraded, apply(op, degraded))
        result = power_iteration_zero_mean(op, degraded, SolverConfig(max_iters=iters))
        corrected = result.eigenfunction
        post = eigen_residual(corrected, apply(op, corrected))
        quality = psnr(u, corrected, peak)
        _write_image(outdir, f"degraded_{i}", degraded)
        _write_image(outdir, f"corrected_{i}", corrected)
        _write_image(outdir, f"difference_{i}", corrected - degraded)
        rows.append((spec.label(), pre, post, quality))
    with open(outdir / "robustness.csv", "w", encoding="utf-8") as fh:
        fh.write("degradation,pre_eigen_residual,post_eigen_residual,psnr_to_original\n")
        for label, pre, post, quality in rows:
            fh.write(f"{label},{pre!r},{post!r},{quality!r}\n")
    if cfg.get_bool("figures", True):
        figures.save_bar_figure(
            [r[0] for r in rows],
            [r[2] for r in rows],
            outdir / "robustness.png",
            "post-correction eigen residual",
            "degradation robustness",
        )
    _summarize(
        outdir,
        "robustness",
        [
            ("entries", len(rows)),
            ("max_post_residual", max((r[2] for r in rows), default=0.0)),
            ("operator_digest", op.digest),
        ],
    )


def _psnr_gain(cfg: RunConfig, outdir: Path, op, large: np.ndarray, peak: float) -> None:
    divisor = cfg.get_float("noise_divisor", 5.0)
    seed = cfg.get_int("seed", 0)
    entries = [
        ("large_eigenfunction", large),
        ("natural_image", load_image(cfg.get_path("natural"))),
        ("small_eigenfunction", load_image(cfg.get_path("small"))),
    ]
    rows = []
    for offset, (label, img) in enumerate(entries):
        var = float(img.var())
        sigma = math.sqrt(var / divisor)
        noisy = degrade(img, DegradationSpec("gaussian-noise", sigma=sigma, seed=seed + offset))
        denoised = apply(op, noisy)
        p_noisy = psnr(img, noisy, peak)
        p_denoised = psnr(img, denoised, peak)
        rows.append((label, var, sigma, p_noisy, p_denoised, p_denoised - p_noisy))
    with open(outdir / "psnr_gain.csv", "w", encoding="utf-8") as fh:
        fh.write("image,variance,sigma,psnr_noisy,psnr_denoised,delta_psnr\n")
        for row in rows:
            fh.write(",".join([row[0]] + [repr(v) for v in row[1:]]) + "\n")
    if cfg.get_bool("figures", True):
        figures.save_bar_figure(
            [r[0] for r in rows],
            [r[5] for r in rows],
            outdir / "psnr_gain.png",
            "delta PSNR (dB)",
            f"denoising gain at var_noise = var_img/{divisor:g}",
        )
    _summarize(
        outdir,
        "robustness",
        [("mode", "psnr-gain")]
        + [(f"delta_psnr_{label}", delta) for label, *_, delta in rows]
        + [("operator_digest", op.digest)],
    )


def cmd_steg_encode(cfg: RunConfig) -> None:
    cfg.check_keys(
        COMMON_KEYS | {"input", "message", "amplitude", "amplitude_frac", "row", "col"}
    )
    outdir = _outdir(cfg)
    u = load_image(cfg.get_path("input"))
    message = load_binary_message(cfg.get_path("message"))
    if cfg.has("amplitude") == cfg.has("amplitude_frac"):
        raise ConfigError("give exactly one of amplitude, amplitude_frac")
    if cfg.has("amplitude"):
        amplitude = cfg.get_float("amplitude")
    else:
        amplitude = cfg.get_float("amplitude_frac") * float(np.abs(u).max())
    row = cfg.get_int("row")
    col = cfg.get_int("col")
    package = steg_encode(u, message, amplitude, row, col)
    _write_image(outdir, "carrier", package.carrier)
    if cfg.get_bool("figures", True):
        figures.save_image_figure(package.carrier, outdir / "carrier.png", "carrier")
    _summarize(
        outdir,
        "steg-encode",
        [
            ("amplitude", package.amplitude),
            ("row", row),
            ("col", col),
            ("message_height", package.message_dims[0]),
            ("message_width", package.message_dims[1]),
        ],
    )


def cmd_steg_decode(cfg: RunConfig) -> None:
    cfg.check_keys(
        COMMON_KEYS | {"input", "iters", "threshold_frac", "region", "truth"} | OP_KEYS
    )
    outdir = _outdir(cfg)
    carrier = load_image(cfg.get_path("input"))
    op = build_operator(cfg, carrier)
    region = None
    if cfg.has("region"):
        parts = [int(p) for p in cfg.get_str("region").split(",")]
        if len(parts) != 4:
            raise ConfigError("region must be row,col,height,width")
        region = tuple(parts)
    result = steg_decode(
        carrier,
        op,
        cfg.get_int("iters", 500),
        cfg.get_float("threshold_frac", 0.5),
        region,
    )
    _write_image(outdir, "recovered", result.recovered)
    _write_image(outdir, "difference", result.difference)
    write_pgm(outdir / "message_estimate.pgm", result.message_estimate)
    if cfg.get_bool("figures", True):
        figures.save_image_figure(result.difference, outdir / "difference.png", "difference")
        figures.save_image_figure(
            result.message_estimate, outdir / "message_estimate.png", "message estimate"
        )
    pairs = [
        ("converged", result.converged),
        ("iterations", result.iterations_run),
        ("difference_norm", l2_norm(result.difference)),
        ("message_pixels", int(result.message_estimate.sum())),
        ("operator_digest", op.digest),
    ]
    if cfg.has("truth"):
        truth = load_binary_message(cfg.get_path("truth"))
        if truth.shape != result.message_estimate.shape:
            raise ConfigError(
                f"truth shape {truth.shape} != estimate shape {result.message_estimate.shape}"
            )
        accuracy = float((truth == result.message_estimate).mean())
        pairs.append(("accuracy", accuracy))
    _summarize(outdir, "steg-decode", pairs)


def cmd_fit_gmm(cfg: RunConfig) -> None:
    cfg.check_keys(COMMON_KEYS | {"input", "patch", "components", "em_iters", "seed", "reg"})
    outdir = _outdir(cfg)
    u = load_image(cfg.get_path("input"))
    patch = cfg.get_int("patch", 6)
    gmm = fit_gmm_em(
        extract_patches(u, patch),
        cfg.get_int("components", 10),
        cfg.get_int("em_iters", 30),
        cfg.get_int("seed", 0),
        cfg.get_float("reg", 1e-6),
    )
    save_gmm(outdir / "model.gmm", gmm)
    ll = gmm.fit_log_likelihood
    with open(outdir / "log_likelihood.csv", "w", encoding="utf-8") as fh:
        fh.write("iter,mean_log_likelihood\n")
        for i, v in enumerate(ll, 1):
            fh.write(f"{i},{float(v)!r}\n")
    if cfg.get_bool("figures", True):
        figures.save_curve_figure(ll, outdir / "log_likelihood.png", "mean log-likelihood")
    _summarize(
        outdir,
        "fit-gmm",
        [
            ("components", gmm.n_components),
            ("dim", gmm.dim),
            ("patch", patch),
            ("final_log_likelihood", float(ll[-1])),
        ],
    )


COMMANDS = {
    "eigen": cmd_eigen,
    "deflate": cmd_deflate,
    "diagnose": cmd_diagnose,
    "decay": cmd_decay,
    "robustness": cmd_robustness,
    "steg-encode": cmd_steg_encode,
    "steg-decode": cmd_steg_decode,
    "fit-gmm": cmd_fit_gmm,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlpi",
        description="Eigenfunctions of black-box image operators via power iteration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} pipeline from a config file")
        p.add_argument("config", help="key=value config file")
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        COMMANDS[args.command](cfg)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
