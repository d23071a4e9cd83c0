"""Matplotlib renderings of run outputs, written next to the CSV data.

Everything here is presentation only: the CSVs and raw images stay the
ground truth, the PNGs are for eyeballing a run without further tooling.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_trace_figure(trace, path, title: str = "power iteration") -> None:
    fig, axes = plt.subplots(2, 2, figsize=(9, 6))
    it = trace.iterations
    axes[0, 0].plot(it, trace.rayleigh)
    axes[0, 0].set_ylabel("Rayleigh quotient")
    axes[0, 1].plot(it, trace.cos_angle)
    axes[0, 1].set_ylabel("cos(angle)")
    axes[1, 0].semilogy(it, np.maximum(trace.residual, 1e-300))
    axes[1, 0].set_ylabel("step residual")
    ratios = np.array(trace.lipschitz_ratio)
    axes[1, 1].plot(it, ratios)
    axes[1, 1].axhline(1.0, color="gray", lw=0.8, ls="--")
    axes[1, 1].set_ylabel("residual ratio L_k")
    for ax in axes.flat:
        ax.set_xlabel("iteration")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_image_figure(image, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    im = ax.imshow(image, cmap="gray")
    fig.colorbar(im, ax=ax, fraction=0.046)
    ax.set_title(title)
    ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_ratio_map_figure(ratio, path) -> None:
    shown = np.where(ratio.mask, ratio.ratios, np.nan)
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    im = ax.imshow(shown, cmap="viridis")
    fig.colorbar(im, ax=ax, fraction=0.046)
    ax.set_title(
        f"T(u)/u over mask: mean {ratio.mean:.5f}, "
        f"{100 * ratio.fraction_within:.1f}% within {100 * ratio.rel_tol:.0f}%"
    )
    ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_decay_figure(profiles, path, max_trajectories: int = 64) -> None:
    raw = profiles.raw
    steps = np.arange(raw.shape[0])
    flat = raw.reshape(raw.shape[0], -1)
    stride = max(1, flat.shape[1] // max_trajectories)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    axes[0].plot(steps, flat[:, ::stride], lw=0.7)
    axes[0].set_title("raw decay profiles")
    norm = profiles.normalized.reshape(raw.shape[0], -1)
    axes[1].plot(steps, norm[:, ::stride], lw=0.7)
    axes[1].set_title("normalized")
    for ax in axes:
        ax.set_xlabel("application")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_bar_figure(labels, values, path, ylabel: str, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(labels)), 3.6))
    ax.bar(range(len(labels)), values)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_curve_figure(values, path, ylabel: str, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(values)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
