"""Report figures written as PNG files.

Uses the non-interactive Agg backend and strips the PNG ``Software`` tag so
that reruns give byte-identical images.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import AblationRow, EvalReport, TypeBreakdown  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "axes.axisbelow": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 100,
}
_METRIC_COLORS = ("#4C72B0", "#DD8452", "#55A868")


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_prf(rows: Sequence[tuple[str, str, EvalReport]], path, title: str = "") -> Path:
    """Grouped precision/recall/F bars, one group per ``(technique, dataset)`` row."""
    labels = [t if d == "-" else f"{t}\n{d}" for t, d, _ in rows]
    vals = np.array([r.percentages() for _, _, r in rows]).reshape(len(rows), 3)
    x = np.arange(len(rows))
    width = 0.27
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(rows) + 1.5), 3.6))
        for k, (name, color) in enumerate(zip(("Precision", "Recall", "F-measure"),
                                              _METRIC_COLORS)):
            ax.bar(x + (k - 1) * width, vals[:, k], width, label=name, color=color)
        ax.set_xticks(x, labels, fontsize=7)
        ax.set_ylim(0, 105)
        ax.set_ylabel("%")
        if title:
            ax.set_title(title, pad=18)
        ax.legend(loc="lower left", bbox_to_anchor=(0, 1.0), ncols=3, fontsize=7, frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_type_recall(breakdowns: Mapping[str, TypeBreakdown], path) -> Path:
    """Per-type recall bars with the accumulative recall drawn as a line, one panel
    per approach."""
    names = list(breakdowns)
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, len(names), figsize=(3.2 * len(names), 3.2),
                                 sharey=True, squeeze=False)
        for ax, name in zip(axes[0], names):
            bd = breakdowns[name]
            types = [f"Type {r.holder_type}" for r in bd.rows]
            x = np.arange(len(types))
            ax.bar(x, [100 * r.recall for r in bd.rows], 0.6, color=_METRIC_COLORS[0],
                   label="type recall")
            ax.plot(x, [100 * r.accumulative_recall for r in bd.rows], "o-",
                    color=_METRIC_COLORS[1], label="accumulative")
            ax.set_xticks(x, types)
            ax.set_ylim(0, 105)
            ax.set_title(name)
        axes[0][0].set_ylabel("recall %")
        axes[0][0].legend(loc="lower left", fontsize=7, frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_ablation(rows: Sequence[AblationRow], path) -> Path:
    """Horizontal F-measure bars per disabled feature group, baseline first."""
    names = [r.disabled for r in rows]
    f = [100 * r.report.f_measure for r in rows]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 0.45 * len(rows) + 1.2))
        y = np.arange(len(rows))[::-1]
        colors = [_METRIC_COLORS[2] if i == 0 else _METRIC_COLORS[0] for i in range(len(rows))]
        ax.barh(y, f, 0.6, color=colors)
        ax.set_yticks(y, names)
        ax.set_xlim(0, 105)
        ax.set_xlabel("F-measure % (disabled group)")
        fig.tight_layout()
        return _save(fig, path)
