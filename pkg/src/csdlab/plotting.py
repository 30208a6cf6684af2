"""Matplotlib figures written next to the CSV outputs."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .envs import observations  # noqa: E402

FIG_KWARGS = dict(figsize=(9, 3.2), dpi=110)


def _series(rows, key):
    return np.array([float(r[key]) for r in rows])


def plot_metrics(rows, path):
    """Coverage curves, the multiplier and the violation rate against epoch."""
    epochs = _series(rows, "epoch")
    fig, axes = plt.subplots(1, 3, **FIG_KWARGS)
    axes[0].plot(epochs, _series(rows, "coverage_agent"), label="agent")
    axes[0].plot(epochs, _series(rows, "coverage_block"), label="block")
    axes[0].set_ylabel("bins visited")
    axes[0].legend(loc="best", frameon=False)
    lam = _series(rows, "lambda")
    if np.all(np.isnan(lam)):
        axes[1].plot(epochs, _series(rows, "intrinsic_reward_mean"))
        axes[1].set_ylabel("intrinsic reward")
    else:
        axes[1].plot(epochs, lam)
        axes[1].set_ylabel(r"$\lambda$")
    axes[2].plot(epochs, _series(rows, "constraint_violation_rate"))
    axes[2].set_ylabel("violation rate")
    for ax in axes:
        ax.set_xlabel("epoch")
        ax.grid(alpha=0.3, linewidth=0.5)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_skill_trajectories(episodes, path, title: str | None = None):
    """Agent and block xy paths, one color per skill (colored by skill angle)."""
    fig, axes = plt.subplots(1, 2, figsize=(7, 3.5), dpi=110)
    cmap = plt.get_cmap("hsv")
    for ep in episodes:
        if not ep:
            continue
        obs = observations(ep)
        z = ep[0].z
        hue = (math.atan2(z[1], z[0]) / (2 * math.pi)) % 1.0 if len(z) >= 2 else 0.0
        color = cmap(hue)
        axes[0].plot(obs[:, 0], obs[:, 1], color=color, linewidth=0.8, alpha=0.8)
        axes[1].plot(obs[:, 2], obs[:, 3], color=color, linewidth=0.8, alpha=0.8)
    for ax, name in zip(axes, ("agent", "block")):
        ax.set_xlim(-1.05, 1.05)
        ax.set_ylim(-1.05, 1.05)
        ax.set_aspect("equal")
        ax.set_title(name)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_coverage_comparison(results: dict, path, key: str = "block"):
    """Bar chart of per-seed coverage for several methods; ``results[method] = [int, ...]``."""
    fig, ax = plt.subplots(figsize=(4, 3), dpi=110)
    for i, (method, values) in enumerate(sorted(results.items())):
        ax.scatter(np.full(len(values), i), values, color="black", s=12, zorder=3)
        ax.bar(i, np.median(values), color="0.8")
    ax.set_xticks(range(len(results)))
    ax.set_xticklabels(sorted(results))
    ax.set_ylabel(f"{key} bins")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
