import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import (
    as_json,
    drop,
    make_document,
    make_response_text,
    mutate,
    oracle_clamp,
    oracle_violations,
)
from tcmeval import rubric
from tcmeval.errors import (
    EmptyLabel,
    InvalidLogicPoints,
    ParseError,
    RangeError,
    SchemaError,
)
from tcmeval.fixtures import load_golden_verdict, worked_example_prescriptions
from tcmeval.herbs import MatchResult, match_prescriptions
from tcmeval.parsing import SectionKind, parse_structured_response
from tcmeval.rubric import (
    completeness_score,
    denormalize,
    herb_match_score,
    medicinal_match_score,
    recompute_local_fields,
    scorecard,
    validate_verdict,
)


def _match(n_matched: int, n_label: int, n_generated: int = 12) -> MatchResult:
    return MatchResult(matched=(), n_matched=n_matched, n_label=n_label,
                       n_generated=n_generated, rate=n_matched / n_label)


# ---------------------------------------------------------------------------
# Scalar scores
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("answered", [0, 1, 2, 3, 4, 5])
def test_completeness_identity_table(answered):
    assert completeness_score(answered) == answered


@pytest.mark.parametrize("bad", [-1, 6, 2.5, "3", True])
def test_completeness_rejects_out_of_domain(bad):
    with pytest.raises(RangeError):
        completeness_score(bad)


def test_herb_match_worked_example():
    assert medicinal_match_score(5, 12) == 3.75
    assert herb_match_score(_match(5, 12), 1) == 4.75


def test_herb_match_full_and_zero():
    assert herb_match_score(_match(12, 12), 1) == 10.0
    assert herb_match_score(_match(0, 12), 0) == 0.0


def test_herb_match_rounding_half_up():
    # 1/3 * 9 = 3.0; 4/7 * 9 = 36/7 = 5.142857... -> 5.14; 5/7*9 = 6.428571 -> 6.43
    assert medicinal_match_score(4, 7) == 5.14
    assert medicinal_match_score(5, 7) == 6.43
    # Exact .xx5 boundary rounds up: 3/8 * 9 = 3.375 -> 3.38
    assert medicinal_match_score(3, 8) == 3.38


def test_herb_match_guards():
    with pytest.raises(EmptyLabel):
        herb_match_score(MatchResult((), 0, 0, 0, None), 1)
    with pytest.raises(InvalidLogicPoints):
        herb_match_score(_match(5, 12), 0.7)


@settings(max_examples=80, deadline=None)
@given(
    n_label=st.integers(min_value=1, max_value=30),
    n_matched=st.integers(min_value=0, max_value=30),
    bump=st.integers(min_value=0, max_value=5),
    logic=st.sampled_from([0, 0.5, 1]),
)
def test_herb_match_monotone(n_label, n_matched, bump, logic):
    n_matched = min(n_matched, n_label)
    higher_match = min(n_matched + bump, n_label)
    base = herb_match_score(_match(n_matched, n_label), logic)
    assert herb_match_score(_match(higher_match, n_label), logic) >= base
    if logic < 1:
        assert herb_match_score(_match(n_matched, n_label), 1) >= base


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def test_golden_fixture_validates_strict():
    document = load_golden_verdict()
    verdict = validate_verdict(as_json(document), strict=True)
    assert verdict.total == 38.75
    assert verdict.prescription.match_score == 3.75
    assert verdict.completeness.answered == 5
    assert oracle_violations(document) == []
    assert verdict.to_document() == document


def test_structured_output_variant_keys_normalize():
    document = make_document()
    variant = {("Response Completeness" if k == rubric.COMPLETENESS else k.strip()): (
        {sk.strip(): sv for sk, sv in v.items()} if isinstance(v, dict) else v
    ) for k, v in document.items()}
    verdict = validate_verdict(variant, strict=True)
    assert verdict.to_document() == document


def test_missing_treatment_principle_names_the_path():
    document = drop(make_document(), (rubric.PRINCIPLE,))
    with pytest.raises(SchemaError) as exc_info:
        validate_verdict(as_json(document), strict=True)
    assert any(rubric.PRINCIPLE in path for path in exc_info.value.paths)


def test_malformed_json_is_parse_error():
    with pytest.raises(ParseError):
        validate_verdict("{not json", strict=True)


def test_lenient_clamps_out_of_range_syndrome():
    document = mutate(make_document(), (rubric.SYNDROME, "score"), 12)
    verdict = validate_verdict(as_json(document), strict=False)
    assert verdict.syndrome.score == oracle_clamp(12, 10) == 10.0
    assert any("clamped" in w for w in verdict.warnings)


def test_null_item_forces_zero_score():
    document = mutate(make_document(), (rubric.THEORY,), None)
    verdict = validate_verdict(as_json(document), strict=False)
    assert verdict.theory.score == 0.0
    assert verdict.total == sum(verdict.item_scores().values())


def test_lenient_total_recomputed():
    document = mutate(make_document(), (rubric.TOTAL,), 50)
    verdict = validate_verdict(as_json(document), strict=False)
    assert verdict.total == sum(verdict.item_scores().values())
    assert any(rubric.TOTAL in w for w in verdict.warnings)


def test_strict_rejects_sub_score_mismatch():
    document = mutate(make_document(), (rubric.ETIOLOGY, rubric.K_RECOGNITION), 2)
    with pytest.raises(SchemaError):
        validate_verdict(as_json(document), strict=True)
    verdict = validate_verdict(as_json(document), strict=False)
    # Item score wins over disagreeing sub-scores.
    assert verdict.etiology.score == 8.0


def test_twenty_fixture_conformance_matrix():
    """Valid, each-item-missing, and each-field-out-of-range fixtures classify
    identically under validate_verdict (strict) and the independent oracle."""
    valid = make_document()
    fixtures: list[tuple[str, dict, bool]] = [
        ("valid-baseline", valid, True),
        ("valid-golden", load_golden_verdict(), True),
    ]
    for item in (rubric.COMPLETENESS, rubric.ETIOLOGY, rubric.SYNDROME,
                 rubric.PRINCIPLE, rubric.PRESCRIPTION, rubric.THEORY,
                 rubric.TOTAL, rubric.MAX_SCORE):
        fixtures.append((f"missing-{item.strip()}", drop(valid, (item,)), False))
    fixtures.append(
        ("missing-principle-accuracy",
         drop(valid, (rubric.PRINCIPLE, rubric.K_PRINCIPLE_ACC)), False)
    )
    out_of_range: list[tuple[tuple[str, ...], float]] = [
        ((rubric.COMPLETENESS, "score"), 6),
        ((rubric.COMPLETENESS, rubric.K_ANSWERED), 7),
        ((rubric.ETIOLOGY, rubric.K_RECOGNITION), 5),
        ((rubric.ETIOLOGY, rubric.K_COHERENCE), 3),
        ((rubric.SYNDROME, "score"), 12),
        ((rubric.PRINCIPLE, rubric.K_SPECIFICITY), 4),
        ((rubric.PRESCRIPTION, rubric.K_MATCH_SCORE), 9.5),
        ((rubric.THEORY, rubric.K_THOUGHT_ACC), -1),
        ((rubric.TOTAL,), 60),
    ]
    for path, value in out_of_range:
        fixtures.append((f"range-{'.'.join(path).strip()}", mutate(valid, path, value), False))

    assert len(fixtures) == 20

    for name, document, expect_valid in fixtures:
        oracle_says_valid = oracle_violations(document) == []
        if expect_valid:
            verdict = validate_verdict(as_json(document), strict=True)
            assert verdict is not None, name
            assert oracle_says_valid, name
        else:
            with pytest.raises(SchemaError):
                validate_verdict(as_json(document), strict=True)
            # The oracle flags structural inconsistencies except pure
            # sum/total mismatches, which it does not model.
            if "range-Total Score" not in name:
                assert not oracle_says_valid, name
            # Lenient mode always yields a verdict with in-range fields.
            verdict = validate_verdict(as_json(document), strict=False)
            for item_name, score in verdict.item_scores().items():
                assert 0.0 <= score <= rubric.ITEM_MAXIMA[item_name], name


@settings(max_examples=60, deadline=None)
@given(
    raw=st.floats(min_value=-20, max_value=30, allow_nan=False),
    maximum=st.sampled_from([2.0, 4.0, 5.0, 10.0]),
)
def test_clamp_idempotent(raw, maximum):
    once = rubric.clamp(raw, 0.0, maximum)
    assert rubric.clamp(once, 0.0, maximum) == once
    assert once == oracle_clamp(raw, maximum)


# ---------------------------------------------------------------------------
# Scorecard
# ---------------------------------------------------------------------------

def test_scorecard_all_maxima():
    document = make_document(
        completeness=5, etiology=(4, 4, 2), syndrome=(6, 4), principle=(5, 3, 2),
        prescription=(9, 1, 12, 12, 12), theory=(5, 3, 2),
    )
    verdict = validate_verdict(as_json(document), strict=True)
    card = scorecard(verdict)
    assert verdict.total == 55
    assert all(v == 1.0 for v in card.normalized.values())
    assert card.normalized_mean == 1.0


def test_scorecard_all_zero():
    document = make_document(
        completeness=0, etiology=(0, 0, 0), syndrome=(0, 0), principle=(0, 0, 0),
        prescription=(0, 0, 0, 12, 0), theory=(0, 0, 0),
    )
    verdict = validate_verdict(as_json(document), strict=True)
    card = scorecard(verdict)
    assert verdict.total == 0
    assert card.normalized_mean == 0.0


def test_scorecard_prescription_normalization():
    document = make_document(
        completeness=0, etiology=(0, 0, 0), syndrome=(0, 0), principle=(0, 0, 0),
        prescription=(3.75, 1, 5, 12, 12), theory=(0, 0, 0),
    )
    verdict = validate_verdict(as_json(document), strict=True)
    card = scorecard(verdict)
    # Oracle: herb_match_score(5/12, logic 1) = 4.75 -> 4.75/10.
    assert card.normalized[rubric.PRESCRIPTION] == herb_match_score(_match(5, 12), 1) / 10
    assert card.normalized[rubric.PRESCRIPTION] == 0.475


def test_scorecard_denormalization_reproduces_raw_exactly():
    verdict = validate_verdict(as_json(load_golden_verdict()), strict=True)
    card = scorecard(verdict)
    assert denormalize(card) == verdict.item_scores()
    for name, value in card.normalized.items():
        assert value * rubric.ITEM_MAXIMA[name] == pytest.approx(
            verdict.item_scores()[name], abs=1e-9
        )


def test_scorecard_completeness_exclusion_flag():
    verdict = validate_verdict(as_json(make_document()), strict=True)
    with_completeness = scorecard(verdict, include_completeness=True)
    without = scorecard(verdict, include_completeness=False)
    pool = [v for k, v in with_completeness.normalized.items()
            if k != rubric.COMPLETENESS]
    assert without.normalized_mean == pytest.approx(sum(pool) / len(pool))


# ---------------------------------------------------------------------------
# Local cross-checks
# ---------------------------------------------------------------------------

def _worked_example_verdict_and_texts(lexicon):
    from tcmeval.fixtures import load_worked_example

    fixture = load_worked_example()
    label_resp = parse_structured_response(
        make_response_text(fixture["label_prescription_zh"])
    )
    model_resp = parse_structured_response(
        make_response_text(fixture["model_prescription_zh"])
    )
    return label_resp, model_resp


def test_audit_agreement_is_empty(lexicon):
    label_resp, model_resp = _worked_example_verdict_and_texts(lexicon)
    verdict = validate_verdict(as_json(load_golden_verdict()), strict=True)
    report = recompute_local_fields(verdict, model_resp, label_resp, lexicon)
    assert report.discrepancies == []


def test_audit_flags_wrong_match_count(lexicon):
    label_resp, model_resp = _worked_example_verdict_and_texts(lexicon)
    document = mutate(load_golden_verdict(), (rubric.PRESCRIPTION, rubric.K_N_MATCHED), 6)
    verdict = validate_verdict(as_json(document), strict=False)
    report = recompute_local_fields(verdict, model_resp, label_resp, lexicon)
    flagged = [d for d in report.discrepancies if rubric.K_N_MATCHED in d.field]
    assert len(flagged) == 1
    assert flagged[0].judge_value == 6
    assert flagged[0].local_value == 5


def test_audit_flags_wrong_answered_count(lexicon):
    label_resp, model_resp = _worked_example_verdict_and_texts(lexicon)
    model_resp.sections[SectionKind.SYNDROME_DIFFERENTIATION] = "无法回答"
    verdict = validate_verdict(as_json(load_golden_verdict()), strict=True)
    report = recompute_local_fields(verdict, model_resp, label_resp, lexicon)
    flagged = [d for d in report.discrepancies if "Answered" in d.field]
    assert len(flagged) == 1
    assert flagged[0].local_value == 4


def test_total_is_sum_of_items_for_every_validated_verdict():
    for document in (make_document(), load_golden_verdict(),
                     make_document(completeness=2, theory=(0, 0, 0))):
        verdict = validate_verdict(as_json(document), strict=False)
        assert abs(verdict.total - sum(verdict.item_scores().values())) <= 1e-9
