"""Aggregate verdicts into report tables: per-axis means, benchmark deltas,
trial overlap percents, and mean/std summaries."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EmptyInput, EmptyLabel, UnknownBenchmark
from .herbs import Lexicon, match_prescriptions
from .parsing import Prescription
from .records import VerdictStore
from .rubric import (
    COMPLETENESS,
    ETIOLOGY,
    ITEM_MAXIMA,
    ITEM_NAMES,
    PRESCRIPTION,
    PRINCIPLE,
    SYNDROME,
    THEORY,
    TOTAL,
    validate_verdict,
)

AXES = ("doctor", "model", "judge")
TABLE_ITEMS = (*ITEM_NAMES, TOTAL)


@dataclass
class ScoreTable:
    """Per-cell item means over completed verdicts.

    Keys are tuples along ``axis``; failed triples are excluded from the
    means and surfaced in ``n_failed``. Cells with zero completed verdicts
    are flagged in ``empty_cells`` rather than erroring.
    """

    axis: tuple[str, ...]
    cells: dict[tuple[str, ...], dict[str, float]] = field(default_factory=dict)
    n_cases: dict[tuple[str, ...], int] = field(default_factory=dict)
    n_failed: dict[tuple[str, ...], int] = field(default_factory=dict)
    empty_cells: list[tuple[str, ...]] = field(default_factory=list)

    def keys(self) -> list[tuple[str, ...]]:
        return sorted(set(self.cells) | set(self.n_failed))


def score_table(store: VerdictStore, group_by: Sequence[str] = AXES) -> ScoreTable:
    """Average item scores per (doctor, model, judge) cell, or any sub-axis."""
    axis = tuple(group_by)
    for name in axis:
        if name not in AXES:
            raise ValueError(f"unknown axis {name!r}; expected a subset of {AXES}")
    if len(store) == 0:
        raise EmptyInput("verdict store is empty")

    sums: dict[tuple[str, ...], dict[str, float]] = {}
    counts: dict[tuple[str, ...], int] = {}
    failed: dict[tuple[str, ...], int] = {}
    for record in store.records():
        key = tuple(getattr(record, name) for name in axis)
        if record.status != "ok" or record.document is None:
            failed[key] = failed.get(key, 0) + 1
            continue
        verdict = validate_verdict(record.document, strict=False)
        scores = verdict.item_scores()
        scores[TOTAL] = verdict.total
        cell = sums.setdefault(key, {item: 0.0 for item in TABLE_ITEMS})
        for item in TABLE_ITEMS:
            cell[item] += scores[item]
        counts[key] = counts.get(key, 0) + 1

    table = ScoreTable(axis=axis, n_failed=failed)
    for key, cell in sums.items():
        n = counts[key]
        table.cells[key] = {item: cell[item] / n for item in TABLE_ITEMS}
        table.n_cases[key] = n
    table.empty_cells = sorted(k for k in failed if k not in sums)
    return table


@dataclass
class DeltaTable:
    """Item-by-model score differences against a benchmark model."""

    benchmark: str
    models: list[str]
    rows: dict[str, dict[str, float]]  # item -> model -> delta

    def rendered(self) -> dict[str, dict[str, str]]:
        return {
            item: {model: format_delta(value) for model, value in row.items()}
            for item, row in self.rows.items()
        }


def format_delta(value: float) -> str:
    """Render a delta at up to 5 decimals; negatives are parenthesized,
    without a minus sign."""
    text = f"{abs(value):.5f}".rstrip("0").rstrip(".")
    if text == "":
        text = "0"
    return f"({text})" if value < 0 else text


def delta_table(table: ScoreTable, benchmark: str) -> DeltaTable:
    """Per-item differences (model minus benchmark) over a model-axis table."""
    if table.axis != ("model",):
        raise ValueError("delta_table expects a table grouped by model only")
    models = [key[0] for key in sorted(table.cells)]
    if benchmark not in models:
        raise UnknownBenchmark(f"benchmark model {benchmark!r} not in table")
    rows: dict[str, dict[str, float]] = {}
    for item in TABLE_ITEMS:
        base = table.cells[(benchmark,)][item]
        rows[item] = {model: table.cells[(model,)][item] - base for model in models}
    return DeltaTable(benchmark=benchmark, models=models, rows=rows)


def trial_overlap_score(
    generated: Prescription, label: Prescription, lexicon: Lexicon
) -> float:
    """Percent of label herbs present in the generated prescription."""
    if not label.entries:
        raise EmptyLabel("label prescription has no entries")
    match = match_prescriptions(generated, label, lexicon)
    return 100.0 * match.rate


@dataclass(frozen=True)
class Stats:
    mean: float
    std: float
    n: int


def aggregate_stats(values: Sequence[float]) -> Stats:
    """Arithmetic mean and sample (n-1) standard deviation; std is 0 for n=1."""
    if not values:
        raise EmptyInput("no values to aggregate")
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return Stats(mean=mean, std=std, n=len(values))


def format_mean_std(stats: Stats) -> str:
    return f"{stats.mean:.2f} ± {stats.std:.2f}"


@dataclass
class TrialResult:
    """Overlap percents per trial sample with their summary statistics."""

    per_sample: dict[str, float]  # sample id -> percent
    mean: float
    std: float

    @classmethod
    def from_percents(cls, per_sample: dict[str, float]) -> "TrialResult":
        stats = aggregate_stats(list(per_sample.values()))
        return cls(per_sample=dict(per_sample), mean=stats.mean, std=stats.std)

    def summary(self) -> str:
        return format_mean_std(Stats(self.mean, self.std, len(self.per_sample)))


# ---------------------------------------------------------------------------
# Delimited output
# ---------------------------------------------------------------------------

def score_table_rows(table: ScoreTable) -> list[dict[str, object]]:
    """Flatten a ScoreTable for CSV/JSON emission."""
    rows: list[dict[str, object]] = []
    for key in table.keys():
        row: dict[str, object] = dict(zip(table.axis, key))
        cell = table.cells.get(key)
        row["n_cases"] = table.n_cases.get(key, 0)
        row["n_failed"] = table.n_failed.get(key, 0)
        for item in TABLE_ITEMS:
            row[item] = cell[item] if cell else None
        rows.append(row)
    return rows


def delta_table_rows(delta: DeltaTable) -> list[dict[str, object]]:
    rendered = delta.rendered()
    rows: list[dict[str, object]] = []
    for item in TABLE_ITEMS:
        row: dict[str, object] = {"item": item, "benchmark": delta.benchmark}
        for model in delta.models:
            row[model] = rendered[item][model]
        rows.append(row)
    return rows


SHORT_ITEM_LABELS = {
    COMPLETENESS: "completeness",
    ETIOLOGY: "etiology",
    SYNDROME: "syndrome",
    PRINCIPLE: "principle",
    PRESCRIPTION: "prescription",
    THEORY: "theory",
    TOTAL: "total",
}
