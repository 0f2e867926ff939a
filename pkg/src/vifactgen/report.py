"""Figure rendering for report outputs.

Figures land next to the delimited outputs; everything uses the Agg
backend so reports render on headless boxes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .annotation import CRITERIA
from .evalharness import ComparisonReport
from .lingstats import LinguisticReport


def render_lingstats_figure(report: LinguisticReport, path: str | Path) -> Path:
    """Grouped bars: new-word rate and Jaccard per (model, stage, label)."""
    path = Path(path)
    rows = report.rows
    labels = [f"{r.model}\n{r.stage}/{r.label}" for r in rows]
    x = list(range(len(rows)))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(rows)), 4.5))
    ax.bar([i - width / 2 for i in x], [100 * r.new_word_rate for r in rows],
           width, label="new word rate (%)")
    ax.bar([i + width / 2 for i in x], [100 * r.jaccard for r in rows],
           width, label="jaccard (%)")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("percent")
    ax.set_title(f"Claim/evidence linguistics (LCS unit: {report.unit})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_eval_figure(report: ComparisonReport, path: str | Path) -> Path:
    """Accuracy and macro-F1 per (classifier, test set, regime) row."""
    path = Path(path)
    rows = report.rows
    labels = [f"{r.test_set}\n{r.regime.value}" for r in rows]
    x = list(range(len(rows)))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(rows)), 4.5))
    ax.bar([i - width / 2 for i in x], [r.metrics.accuracy for r in rows],
           width, label="accuracy")
    ax.bar([i + width / 2 for i in x], [r.metrics.macro_f1 for r in rows],
           width, label="macro-F1")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylim(0, 1.0)
    ax.set_ylabel("score")
    classifiers = sorted({r.classifier for r in rows})
    ax.set_title("Verdict classifiers: " + ", ".join(classifiers))
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_criteria_figure(groups: Sequence[dict], path: str | Path) -> Path:
    """Human-evaluation criteria percentages per (model, stage) group."""
    path = Path(path)
    group_names = [
        "/".join(str(g[k]) for k in g if not k.endswith("_pct") and k != "n_judgments")
        for g in groups
    ]
    x = list(range(len(groups)))
    width = 0.2
    fig, ax = plt.subplots(figsize=(max(6.0, 1.4 * len(groups)), 4.5))
    for offset, criterion in enumerate(CRITERIA):
        positions = [i + (offset - 1.5) * width for i in x]
        ax.bar(positions, [g[f"{criterion}_pct"] for g in groups], width, label=criterion)
    ax.set_xticks(x)
    ax.set_xticklabels(group_names, fontsize=8)
    ax.set_ylim(0, 100)
    ax.set_ylabel("pass rate (%)")
    ax.set_title("Human evaluation criteria")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
