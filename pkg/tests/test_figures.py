from helpers import make_document
from tcmeval.analytics import TrialResult, delta_table, score_table
from tcmeval.figures import (
    render_delta_table,
    render_human_report,
    render_score_table,
    render_trial_report,
)
from tcmeval.human_eval import HumanReport, ReportRow
from tcmeval.records import VerdictRecord, VerdictStore


def _store():
    store = VerdictStore()
    for model, completeness in (("m1", 5), ("m2", 3)):
        store.put(VerdictRecord(case_id=f"c-{model}", model=model, judge="j",
                                doctor="d", status="ok",
                                document=make_document(completeness=completeness),
                                ts="t"))
    return store


def test_score_and_delta_figures(tmp_path):
    table = score_table(_store(), ("model",))
    out = render_score_table(table, tmp_path / "scores.png")
    assert out.exists() and out.stat().st_size > 0

    delta = delta_table(table, "m1")
    out = render_delta_table(delta, tmp_path / "delta.png")
    assert out.exists() and out.stat().st_size > 0


def test_human_figure_with_rows_and_empty(tmp_path):
    report = HumanReport(rows=[
        ReportRow("doc-1", "m1", "similarity", 6.1, 1.7, 3),
        ReportRow("doc-1", "m1", "safety", 7.0, 0.5, 3),
        ReportRow("doc-1", "m2", "similarity", 4.2, 2.0, 3),
    ])
    out = render_human_report(report, tmp_path / "human.png")
    assert out.exists() and out.stat().st_size > 0

    empty = render_human_report(HumanReport(rows=[]), tmp_path / "empty.png")
    assert empty.exists() and empty.stat().st_size > 0


def test_trial_figure(tmp_path):
    results = {"m1": TrialResult.from_percents({"s1": 40.0, "s2": 50.0}),
               "m2": TrialResult.from_percents({"s1": 10.0, "s2": 20.0})}
    out = render_trial_report(results, tmp_path / "trial.png")
    assert out.exists() and out.stat().st_size > 0
