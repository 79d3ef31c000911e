"""Matplotlib rendering for the report command.

Figures are rendered headless to PNG next to the delimited plot-data files;
metadata is pinned so identical inputs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_PNG_METADATA = {"Software": "resop"}


def save_monthly_traces(
    series_by_method: dict[str, np.ndarray],
    ylabel: str,
    title: str,
    path: Path,
) -> Path:
    """One line per method over the simulation months."""
    fig, ax = plt.subplots(figsize=(10, 4))
    for name, values in series_by_method.items():
        ax.plot(range(1, len(values) + 1), values, label=name, linewidth=1.0)
    ax.set_xlabel("simulation month")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def save_annual_bars(
    values_by_method: dict[str, np.ndarray],
    years: list[int],
    ylabel: str,
    title: str,
    path: Path,
) -> Path:
    """Grouped bars per water year, one group entry per method."""
    fig, ax = plt.subplots(figsize=(10, 4))
    n = len(values_by_method)
    width = 0.8 / max(n, 1)
    for k, (name, values) in enumerate(values_by_method.items()):
        offsets = [y + (k - (n - 1) / 2) * width for y in range(len(years))]
        ax.bar(offsets, values, width=width, label=name)
    ax.set_xticks(range(len(years)))
    step = max(1, len(years) // 16)
    ax.set_xticklabels([str(y) if i % step == 0 else "" for i, y in enumerate(years)],
                       rotation=90, fontsize=7)
    ax.set_xlabel("water year")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def save_reward_trace(episode_rewards, path: Path) -> Path:
    """Per-episode cumulative reward of one training run."""
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(range(1, len(episode_rewards) + 1), episode_rewards, linewidth=0.8)
    ax.set_xlabel("episode")
    ax.set_ylabel("cumulative reward")
    ax.set_title("training reward trace")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
    return path
