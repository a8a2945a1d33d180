"""Figure rendering for the report paths.

All figures go through the Agg backend and are saved with a pinned
metadata block, so repeated runs produce byte-identical PNGs.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import CorrelationReport
from .pipeline import MedianReport, RunReport

_META = {"Software": "iqdistill"}

_RC = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
}


def _save(fig, path) -> None:
    fig.savefig(path, metadata=_META)
    plt.close(fig)


def save_loss_figure(report: RunReport, path) -> None:
    """Per-epoch losses on top, blend weight and learning rate below."""
    epochs = [r.epoch for r in report.rows]
    with plt.rc_context(_RC):
        fig, (ax_loss, ax_sched) = plt.subplots(2, 1, sharex=True, figsize=(7.0, 5.4))
        for name, series in (("soft", [r.soft for r in report.rows]), ("hard", [r.hard for r in report.rows])):
            pts = [(e, v) for e, v in zip(epochs, series) if not math.isnan(v)]
            if pts:
                ax_loss.plot([p[0] for p in pts], [p[1] for p in pts], label=f"{name} loss", linewidth=1.4)
        ax_loss.set_ylabel("loss")
        ax_loss.legend(loc="upper right")
        lam = [r.lam for r in report.rows]
        if any(not math.isnan(v) for v in lam):
            ax_sched.plot(epochs, lam, label="blend weight", linewidth=1.4)
        lr0 = report.rows[0].lr if report.rows[0].lr > 0 else 1.0
        ax_sched.plot(epochs, [r.lr / lr0 for r in report.rows], label="lr / lr0", linewidth=1.4, linestyle="--")
        ax_sched.set_xlabel("epoch")
        ax_sched.set_ylabel("schedule")
        ax_sched.set_ylim(-0.05, 1.05)
        ax_sched.legend(loc="upper right")
        fig.tight_layout()
        _save(fig, path)


def save_variant_figure(medians: dict[str, MedianReport], path) -> None:
    """Grouped bars of median PLCC/SRCC per variant with raw runs as dots."""
    labels = list(medians)
    x = np.arange(len(labels), dtype=float)
    width = 0.38
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.bar(x - width / 2, [medians[l].plcc for l in labels], width, label="PLCC")
        ax.bar(x + width / 2, [medians[l].srcc for l in labels], width, label="SRCC")
        for i, label in enumerate(labels):
            runs = medians[label].runs
            ax.plot([x[i] - width / 2] * len(runs), [r.plcc for r in runs], "k.", markersize=3)
            ax.plot([x[i] + width / 2] * len(runs), [r.srcc for r in runs], "k.", markersize=3)
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=12)
        ax.set_ylabel("test correlation")
        ax.set_ylim(0.0, 1.05)
        ax.legend(loc="lower right")
        fig.tight_layout()
        _save(fig, path)


def save_scatter_figure(predicted, subjective, path, rep: CorrelationReport | None = None) -> None:
    predicted = np.asarray(predicted, dtype=np.float64)
    subjective = np.asarray(subjective, dtype=np.float64)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.6, 4.4))
        ax.plot([1, 5], [1, 5], color="0.6", linewidth=1.0, linestyle="--")
        ax.plot(subjective, predicted, ".", markersize=3.5, alpha=0.6)
        ax.set_xlabel("subjective score")
        ax.set_ylabel("predicted score")
        if rep is not None:
            ax.set_title(f"PLCC {rep.plcc:.4f}  SRCC {rep.srcc:.4f}", fontsize=9)
        fig.tight_layout()
        _save(fig, path)
