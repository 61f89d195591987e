"""Figures for benchmark tables: mean runtime against n, one line per algorithm."""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

COLORS = {"lrsao": "tab:orange", "earl": "tab:blue"}
LABELS = {"lrsao": "LRSAO", "earl": "EA+RL"}


def plot_runtime(rows: Sequence, path, log: bool = False, title: str | None = None) -> None:
    """Mean T with its 95% band per algorithm. ``rows`` are harness rows."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for algo in dict.fromkeys(r.algo for r in rows):
        sel = sorted((r for r in rows if r.algo == algo and not math.isnan(r.mean_T)), key=lambda r: r.n)
        if not sel:
            continue
        n = [r.n for r in sel]
        ax.plot(n, [r.mean_T for r in sel], marker="o", ms=3, lw=1.2,
                color=COLORS.get(algo), label=LABELS.get(algo, algo))
        ax.fill_between(n, [r.ci95_lo_T for r in sel], [r.ci95_hi_T for r in sel],
                        color=COLORS.get(algo), alpha=0.25, lw=0)
    if log:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("mean runtime T")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
