"""Matplotlib rendering for the report path.

Each report writer emits a PNG next to the delimited output: grouped bars
for score tables, signed bars for delta tables, mean +/- std bars for human
and trial reports. Rendering is headless (Agg) and deterministic.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analytics import SHORT_ITEM_LABELS, TABLE_ITEMS, DeltaTable, ScoreTable, TrialResult
from .human_eval import HumanReport


def render_score_table(table: ScoreTable, out_path: str | Path) -> Path:
    """Grouped bar chart: one group per table key, one bar per item mean."""
    out = Path(out_path)
    keys = [k for k in table.keys() if k in table.cells]
    labels = [" / ".join(k) for k in keys]
    items = list(TABLE_ITEMS)
    x = np.arange(len(keys))
    width = 0.8 / max(len(items), 1)

    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(keys) + 3), 4.5))
    for i, item in enumerate(items):
        values = [table.cells[k][item] for k in keys]
        ax.bar(x + i * width, values, width, label=SHORT_ITEM_LABELS[item])
    ax.set_xticks(x + width * (len(items) - 1) / 2)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("mean score")
    ax.set_title("Item means by " + ", ".join(table.axis))
    ax.legend(fontsize=7, ncol=4)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_delta_table(delta: DeltaTable, out_path: str | Path) -> Path:
    """Signed bars of per-item deltas for each non-benchmark model."""
    out = Path(out_path)
    models = [m for m in delta.models if m != delta.benchmark]
    items = list(TABLE_ITEMS)
    x = np.arange(len(items))
    width = 0.8 / max(len(models), 1)

    fig, ax = plt.subplots(figsize=(max(6.0, 1.0 * len(items) + 3), 4.5))
    for i, model in enumerate(models):
        values = [delta.rows[item][model] for item in items]
        ax.bar(x + i * width, values, width, label=model)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xticks(x + width * (len(models) - 1) / 2)
    ax.set_xticklabels([SHORT_ITEM_LABELS[i] for i in items], rotation=30,
                       ha="right", fontsize=8)
    ax.set_ylabel(f"score delta vs {delta.benchmark}")
    ax.set_title("Score differences against the benchmark")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_human_report(report: HumanReport, out_path: str | Path) -> Path:
    """Mean +/- std bars per (model, dimension), faceted by doctor."""
    out = Path(out_path)
    doctors = sorted({row.doctor for row in report.rows})
    if not doctors:
        fig, ax = plt.subplots(figsize=(6, 3))
        ax.set_axis_off()
        ax.text(0.5, 0.5, "no complete sessions", ha="center", va="center")
        fig.savefig(out, dpi=150)
        plt.close(fig)
        return out

    fig, axes = plt.subplots(len(doctors), 1,
                             figsize=(8, 3.2 * len(doctors)), squeeze=False)
    for ax, doctor in zip(axes[:, 0], doctors):
        rows = [r for r in report.rows if r.doctor == doctor]
        models = sorted({r.model for r in rows})
        dims = sorted({r.dimension for r in rows})
        x = np.arange(len(dims))
        width = 0.8 / max(len(models), 1)
        for i, model in enumerate(models):
            by_dim = {r.dimension: r for r in rows if r.model == model}
            means = [by_dim[d].mean if d in by_dim else 0.0 for d in dims]
            stds = [by_dim[d].std if d in by_dim else 0.0 for d in dims]
            ax.bar(x + i * width, means, width, yerr=stds, capsize=2, label=model)
        ax.set_xticks(x + width * (len(models) - 1) / 2)
        ax.set_xticklabels(dims, rotation=20, ha="right", fontsize=8)
        ax.set_title(f"Human ratings: {doctor}", fontsize=10)
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_trial_report(results: dict[str, TrialResult], out_path: str | Path) -> Path:
    """Mean +/- std overlap percent per model."""
    out = Path(out_path)
    models = sorted(results)
    means = [results[m].mean for m in models]
    stds = [results[m].std for m in models]

    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(models) + 2), 4.0))
    ax.bar(np.arange(len(models)), means, 0.6, yerr=stds, capsize=3)
    ax.set_xticks(np.arange(len(models)))
    ax.set_xticklabels(models, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("herb overlap (%)")
    ax.set_ylim(0, 100)
    ax.set_title("Trial prescription overlap, mean ± std")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
