import random
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_document
from tcmeval.analytics import (
    TABLE_ITEMS,
    TrialResult,
    aggregate_stats,
    delta_table,
    delta_table_rows,
    format_delta,
    format_mean_std,
    score_table,
    score_table_rows,
    trial_overlap_score,
)
from tcmeval.errors import EmptyInput, EmptyLabel, UnknownBenchmark
from tcmeval.herbs import match_prescriptions, normalize_herb
from tcmeval.parsing import HerbEntry, Prescription
from tcmeval.records import VerdictRecord, VerdictStore
from tcmeval.rubric import TOTAL


def _record(case_id, model, judge="judge-a", doctor="doc-1", completeness=5,
            status="ok"):
    document = make_document(completeness=completeness) if status == "ok" else None
    return VerdictRecord(case_id=case_id, model=model, judge=judge, doctor=doctor,
                         status=status, document=document, ts="2026-01-01T00:00:00+00:00")


def test_single_verdict_cell_equals_the_verdict():
    store = VerdictStore()
    store.put(_record("c1", "m1", completeness=3))
    table = score_table(store, ("model",))
    expected_total = make_document(completeness=3)[TOTAL]
    assert table.cells[("m1",)][TOTAL] == expected_total
    assert table.n_cases[("m1",)] == 1


def test_two_verdict_mean():
    store = VerdictStore()
    store.put(_record("c1", "m1", completeness=1))
    store.put(_record("c2", "m1", completeness=5))
    table = score_table(store, ("model",))
    t1 = make_document(completeness=1)[TOTAL]
    t2 = make_document(completeness=5)[TOTAL]
    assert table.cells[("m1",)][TOTAL] == pytest.approx((t1 + t2) / 2)


def test_failed_triples_excluded_and_counted():
    store = VerdictStore()
    store.put(_record("c1", "m1", completeness=5))
    store.put(_record("c2", "m1", status="failed"))
    table = score_table(store, ("model",))
    assert table.n_cases[("m1",)] == 1
    assert table.n_failed[("m1",)] == 1
    assert table.cells[("m1",)][TOTAL] == make_document(completeness=5)[TOTAL]


def test_empty_cell_flagged_not_fatal():
    store = VerdictStore()
    store.put(_record("c1", "m1", status="failed"))
    table = score_table(store, ("model",))
    assert table.empty_cells == [("m1",)]
    assert ("m1",) not in table.cells


def test_thirty_verdict_store_matches_flat_loop_oracle():
    rng = random.Random(7)
    store = VerdictStore()
    raw: dict[tuple, list[float]] = {}
    for i in range(30):
        model = f"m{rng.randrange(3)}"
        judge = f"j{rng.randrange(2)}"
        completeness = rng.randrange(6)
        record = _record(f"c{i}", model, judge=judge, completeness=completeness)
        store.put(record)
        raw.setdefault((model, judge), []).append(
            make_document(completeness=completeness)[TOTAL]
        )
    table = score_table(store, ("model", "judge"))
    for key, values in raw.items():
        assert table.cells[key][TOTAL] == pytest.approx(sum(values) / len(values))
        assert table.n_cases[key] == len(values)


def test_score_table_permutation_invariant():
    records = [_record(f"c{i}", f"m{i % 2}", completeness=i % 6) for i in range(12)]
    store_a, store_b = VerdictStore(), VerdictStore()
    for record in records:
        store_a.put(record)
    for record in reversed(records):
        store_b.put(record)
    a = score_table(store_a, ("model",))
    b = score_table(store_b, ("model",))
    assert a.cells == b.cells


def test_empty_store_raises():
    with pytest.raises(EmptyInput):
        score_table(VerdictStore(), ("model",))


# ---------------------------------------------------------------------------
# Delta tables
# ---------------------------------------------------------------------------

def _model_table(totals: dict[str, int]):
    store = VerdictStore()
    for model, completeness in totals.items():
        store.put(_record(f"case-{model}", model, completeness=completeness))
    return score_table(store, ("model",))


def test_benchmark_vs_itself_is_zero():
    table = _model_table({"bench": 3, "other": 5})
    delta = delta_table(table, "bench")
    assert all(delta.rows[item]["bench"] == 0.0 for item in TABLE_ITEMS)


def test_unknown_benchmark():
    table = _model_table({"bench": 3})
    with pytest.raises(UnknownBenchmark):
        delta_table(table, "nope")


def test_delta_matches_elementwise_oracle():
    table = _model_table({"bench": 3, "m1": 0, "m2": 5, "m3": 2, "m4": 4})
    delta = delta_table(table, "bench")
    for item in TABLE_ITEMS:
        base = table.cells[("bench",)][item]
        for model in delta.models:
            assert delta.rows[item][model] == pytest.approx(
                table.cells[(model,)][item] - base, abs=1e-12
            )


def test_negative_rendering_parenthesized():
    assert format_delta(-0.59125) == "(0.59125)"
    assert format_delta(0.59125) == "0.59125"
    assert format_delta(-0.3) == "(0.3)"
    assert format_delta(0.0) == "0"
    assert format_delta(2.40675) == "2.40675"


def test_delta_rendering_idempotent_and_row_shape():
    table = _model_table({"bench": 3, "m1": 5})
    delta = delta_table(table, "bench")
    assert delta.rendered() == delta.rendered()
    rows = delta_table_rows(delta)
    assert rows[0]["benchmark"] == "bench"
    assert set(rows[0]) == {"item", "benchmark", "bench", "m1"}


# ---------------------------------------------------------------------------
# Trial metric
# ---------------------------------------------------------------------------

def _prescription(names, lexicon):
    return Prescription(entries=[
        HerbEntry(raw_name=n, canonical_name=normalize_herb(n, lexicon))
        for n in names
    ])


def test_trial_identical_and_disjoint(lexicon):
    p = _prescription(["黄芩", "甘草"], lexicon)
    assert trial_overlap_score(p, p, lexicon) == 100.0
    q = _prescription(["白芍", "葛根"], lexicon)
    assert trial_overlap_score(q, p, lexicon) == 0.0
    with pytest.raises(EmptyLabel):
        trial_overlap_score(p, Prescription(), lexicon)


def test_trial_worked_example_ratio(lexicon):
    from tcmeval.fixtures import worked_example_prescriptions

    generated, label = worked_example_prescriptions(lexicon)
    assert trial_overlap_score(generated, label, lexicon) == pytest.approx(
        5 / 12 * 100, abs=0.01
    )


def test_trial_equals_100x_rate_on_random_pairs(lexicon):
    pool = ["黄芩", "黄连", "甘草", "桂枝", "赤芍", "白芍", "柴胡", "葛根", "当归",
            "川芎", "茯苓", "白术", "陈皮", "半夏", "大枣", "生姜", "人参", "黄芪"]
    rng = random.Random(42)
    for _ in range(1000):
        label = _prescription(rng.sample(pool, rng.randint(1, 12)), lexicon)
        generated = _prescription(rng.sample(pool, rng.randint(0, 12)), lexicon)
        percent = trial_overlap_score(generated, label, lexicon)
        assert percent == 100.0 * match_prescriptions(generated, label, lexicon).rate


def test_trial_result_summary_format(lexicon):
    result = TrialResult.from_percents({"s1": 40.0, "s2": 45.0, "s3": 35.0})
    assert result.summary() == "40.00 ± 5.00"


# ---------------------------------------------------------------------------
# Aggregate stats
# ---------------------------------------------------------------------------

def test_stats_single_value():
    stats = aggregate_stats([7])
    assert stats.mean == 7
    assert stats.std == 0


def test_stats_textbook_example():
    stats = aggregate_stats([2, 4, 4, 4, 5, 5, 7, 9])
    assert stats.mean == 5
    # Two-pass oracle with the n-1 denominator.
    mean = sum([2, 4, 4, 4, 5, 5, 7, 9]) / 8
    var = sum((x - mean) ** 2 for x in [2, 4, 4, 4, 5, 5, 7, 9]) / 7
    assert stats.std == pytest.approx(var ** 0.5, abs=1e-9)
    assert stats.std == pytest.approx(2.138, abs=1e-3)


def test_stats_empty_raises():
    with pytest.raises(EmptyInput):
        aggregate_stats([])


def test_stats_matches_two_pass_oracle_on_1000_random_lists():
    rng = random.Random(99)
    for _ in range(1000):
        values = [rng.uniform(0, 10) for _ in range(rng.randint(1, 20))]
        stats = aggregate_stats(values)
        mean = sum(values) / len(values)
        assert stats.mean == pytest.approx(mean, abs=1e-9)
        if len(values) > 1:
            var = sum((x - mean) ** 2 for x in values) / (len(values) - 1)
            assert stats.std == pytest.approx(var ** 0.5, abs=1e-9)
        else:
            assert stats.std == 0.0


def test_mean_std_rendering():
    stats = aggregate_stats([7.0, 7.66, 7.33])
    text = format_mean_std(stats)
    assert text == f"{stats.mean:.2f} ± {stats.std:.2f}"
    assert "±" in text


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=0, max_value=10, allow_nan=False),
                min_size=2, max_size=15))
def test_stats_agrees_with_statistics_module(values):
    stats = aggregate_stats(values)
    assert stats.mean == pytest.approx(statistics.fmean(values), abs=1e-9)
    assert stats.std == pytest.approx(statistics.stdev(values), abs=1e-9)


def test_score_table_rows_shape():
    store = VerdictStore()
    store.put(_record("c1", "m1"))
    table = score_table(store, ("doctor", "model", "judge"))
    rows = score_table_rows(table)
    assert rows[0]["doctor"] == "doc-1"
    assert rows[0]["model"] == "m1"
    assert rows[0]["n_cases"] == 1
    assert TOTAL in rows[0]
