"""Figure rendering for the report commands.

All figures are written to files (Agg backend) with the PNG date metadata
stripped so repeated runs produce byte-identical output.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SAVE_KWARGS = {"dpi": 150, "metadata": {"Date": None}}


def save_window_figure(rows_by_metric: dict, path) -> None:
    """Line chart of windowed correlations, one panel per statistic."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharex=True)
    for name, rows in rows_by_metric.items():
        xs = [r.start_rank for r in rows]
        axes[0].plot(xs, [r.pearson for r in rows], marker="o", label=name)
        axes[1].plot(xs, [r.spearman for r in rows], marker="o", label=name)
    axes[0].set_ylabel("Pearson r")
    axes[1].set_ylabel("Spearman rho")
    for ax in axes:
        ax.set_xlabel("window start rank (human)")
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(Path(path), **_SAVE_KWARGS)
    plt.close(fig)


def save_pairwise_heatmap(matrix: np.ndarray, path, title: str = "",
                          symmetric: bool = False) -> None:
    """Heatmap of a (rank A, rank B) cell matrix; NaN cells stay blank."""
    n = matrix.shape[0]
    fig, ax = plt.subplots(figsize=(0.6 * n + 2.2, 0.6 * n + 1.8))
    if symmetric:
        bound = np.nanmax(np.abs(matrix)) if np.isfinite(matrix).any() else 1.0
        bound = max(bound, 1e-9)
        im = ax.imshow(matrix, cmap="RdBu_r", vmin=-bound, vmax=bound)
    else:
        im = ax.imshow(matrix, cmap="viridis", vmin=np.nanmin(matrix) if
                       np.isfinite(matrix).any() else 0.0,
                       vmax=np.nanmax(matrix) if np.isfinite(matrix).any() else 1.0)
    ax.set_xticks(range(n), labels=[str(i + 1) for i in range(n)])
    ax.set_yticks(range(n), labels=[str(i + 1) for i in range(n)])
    ax.set_xlabel("rank B")
    ax.set_ylabel("rank A")
    if title:
        ax.set_title(title)
    if n <= 16:
        for i in range(n):
            for j in range(n):
                if np.isfinite(matrix[i, j]):
                    ax.text(j, i, f"{matrix[i, j]:.2f}", ha="center", va="center",
                            fontsize=7)
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(Path(path), **_SAVE_KWARGS)
    plt.close(fig)
