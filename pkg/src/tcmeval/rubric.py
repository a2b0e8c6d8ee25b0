"""Judge-verdict schema enforcement and locally computable scores.

The verdict wire format is a JSON document with six scored entries
(completeness 0-5 plus five clinical items 0-10 each, total 0-55). Canonical
key spellings below reproduce the operative schema bit-exactly — including
its irregular spacing — so golden files and downstream consumers agree on
the wire format. Input keys are normalized through an alias map (spacing
variants and the structured-output schema's trimmed/renamed keys all land on
the same fields); output always uses the canonical spellings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Any

from .errors import (
    EmptyLabel,
    InvalidLogicPoints,
    ParseError,
    RangeError,
    SchemaError,
)
from .herbs import Lexicon, MatchResult, match_prescriptions
from .parsing import (
    SCORED_KINDS,
    SectionKind,
    StructuredResponse,
    count_answered_items,
    extract_prescription,
)

# Canonical top-level item names.
COMPLETENESS = "Completeness"
ETIOLOGY = "Analysis of Etiology and Pathogenesis"
SYNDROME = "Syndrome Differentiation"
PRINCIPLE = "Treatment Principle"
PRESCRIPTION = "TCM Prescription"
THEORY = "Distinguished Theory application"
TOTAL = "Total Score"
MAX_SCORE = "Maximum Score"

# Canonical sub-key spellings (irregular spacing is part of the wire format).
K_ANSWERED = "Number of Items Actually Answered "
K_REQUIRED = "Total Number of Items Requiring Responses "
K_MISSING = "Missing Item"
K_RECOGNITION = "Recognition of Etiology"
K_PATHOGENESIS = "Description of Pathogenesis"
K_COHERENCE = "Logical Coherence "
K_SYNDROME_ACC = "Accuracy of Syndrome"
K_LOCATION = "Disease Location and Nature "
K_PRINCIPLE_ACC = "Accuracy of Treatment Principle"
K_SPECIFICITY = " Specificity of Treatment Method "
K_SPECIALIZED = " Application of Specialized Methods "
K_MATCH_SCORE = " Medicinal Match Score "
K_N_MATCHED = "Number of matched herbs"
K_N_LABEL = "Number of Herbs in Label Prescription"
K_N_GENERATED = "Number of Herbs in Model-Generated Prescription"
K_OVERLAPPED = "The List of Overlapped Herbs in both TCM Prescriptions "
K_RATE = "Matching rates"
K_THOUGHT_ACC = "Accuracy of Academic Thought"
K_PERVASIVENESS = "Pervasiveness of Thought"
K_ELABORATION = "Completeness of Elaboration"

ITEM_NAMES = (COMPLETENESS, ETIOLOGY, SYNDROME, PRINCIPLE, PRESCRIPTION, THEORY)
ITEM_MAXIMA: dict[str, float] = {
    COMPLETENESS: 5.0,
    ETIOLOGY: 10.0,
    SYNDROME: 10.0,
    PRINCIPLE: 10.0,
    PRESCRIPTION: 10.0,
    THEORY: 10.0,
}
TOTAL_MAX = 55.0

# Extra input spellings mapped to canonical top-level names. The whitespace
# normalizer already equates spacing variants, so only true renames go here.
_EXTRA_TOP_ALIASES = {"response completeness": COMPLETENESS}


def _norm_key(key: str) -> str:
    return " ".join(key.split()).casefold()


_TOP_ALIASES: dict[str, str] = {_norm_key(n): n for n in (*ITEM_NAMES, TOTAL, MAX_SCORE)}
_TOP_ALIASES.update(_EXTRA_TOP_ALIASES)

_SUB_KEYS: dict[str, tuple[str, ...]] = {
    COMPLETENESS: ("score", K_ANSWERED, K_REQUIRED, K_MISSING),
    ETIOLOGY: ("score", K_RECOGNITION, K_PATHOGENESIS, K_COHERENCE),
    SYNDROME: ("score", K_SYNDROME_ACC, K_LOCATION),
    PRINCIPLE: ("score", K_PRINCIPLE_ACC, K_SPECIFICITY, K_SPECIALIZED),
    PRESCRIPTION: (
        "score",
        K_MATCH_SCORE,
        K_N_MATCHED,
        K_N_LABEL,
        K_N_GENERATED,
        K_OVERLAPPED,
        K_RATE,
    ),
    THEORY: ("score", K_THOUGHT_ACC, K_PERVASIVENESS, K_ELABORATION),
}
_SUB_ALIASES: dict[str, dict[str, str]] = {
    item: {_norm_key(k): k for k in keys} for item, keys in _SUB_KEYS.items()
}

# Per-field maxima for the numeric sub-scores.
_SUB_MAXIMA: dict[str, dict[str, float]] = {
    COMPLETENESS: {K_ANSWERED: 5.0},
    ETIOLOGY: {K_RECOGNITION: 4.0, K_PATHOGENESIS: 4.0, K_COHERENCE: 2.0},
    SYNDROME: {K_SYNDROME_ACC: 6.0, K_LOCATION: 4.0},
    PRINCIPLE: {K_PRINCIPLE_ACC: 5.0, K_SPECIFICITY: 3.0, K_SPECIALIZED: 2.0},
    PRESCRIPTION: {K_MATCH_SCORE: 9.0},
    THEORY: {K_THOUGHT_ACC: 5.0, K_PERVASIVENESS: 3.0, K_ELABORATION: 2.0},
}

_EPS = 1e-9


# ---------------------------------------------------------------------------
# Verdict model
# ---------------------------------------------------------------------------

@dataclass
class CompletenessItem:
    score: float = 0.0
    answered: float = 0.0
    required: float = 5.0
    missing: list[str] = field(default_factory=list)


@dataclass
class EtiologyItem:
    score: float = 0.0
    recognition: float = 0.0
    pathogenesis: float = 0.0
    coherence: float = 0.0


@dataclass
class SyndromeItem:
    score: float = 0.0
    accuracy: float = 0.0
    location_nature: float = 0.0


@dataclass
class PrincipleItem:
    score: float = 0.0
    accuracy: float = 0.0
    specificity: float = 0.0
    specialized: float = 0.0


@dataclass
class PrescriptionItem:
    score: float = 0.0
    match_score: float = 0.0
    n_matched: float = 0.0
    n_label: float = 0.0
    n_generated: float = 0.0
    overlapped: list[str] = field(default_factory=list)
    rate: str = "0%"


@dataclass
class TheoryItem:
    score: float = 0.0
    accuracy: float = 0.0
    pervasiveness: float = 0.0
    elaboration: float = 0.0


@dataclass
class JudgeVerdict:
    completeness: CompletenessItem = field(default_factory=CompletenessItem)
    etiology: EtiologyItem = field(default_factory=EtiologyItem)
    syndrome: SyndromeItem = field(default_factory=SyndromeItem)
    principle: PrincipleItem = field(default_factory=PrincipleItem)
    prescription: PrescriptionItem = field(default_factory=PrescriptionItem)
    theory: TheoryItem = field(default_factory=TheoryItem)
    total: float = 0.0
    max_score: float = TOTAL_MAX
    warnings: list[str] = field(default_factory=list)

    def item_scores(self) -> dict[str, float]:
        return {
            COMPLETENESS: self.completeness.score,
            ETIOLOGY: self.etiology.score,
            SYNDROME: self.syndrome.score,
            PRINCIPLE: self.principle.score,
            PRESCRIPTION: self.prescription.score,
            THEORY: self.theory.score,
        }

    def to_document(self) -> dict[str, Any]:
        """Serialize with the canonical (bit-exact) key spellings."""
        return {
            COMPLETENESS: {
                "score": self.completeness.score,
                K_ANSWERED: self.completeness.answered,
                K_REQUIRED: self.completeness.required,
                K_MISSING: list(self.completeness.missing),
            },
            ETIOLOGY: {
                "score": self.etiology.score,
                K_RECOGNITION: self.etiology.recognition,
                K_PATHOGENESIS: self.etiology.pathogenesis,
                K_COHERENCE: self.etiology.coherence,
            },
            SYNDROME: {
                "score": self.syndrome.score,
                K_SYNDROME_ACC: self.syndrome.accuracy,
                K_LOCATION: self.syndrome.location_nature,
            },
            PRINCIPLE: {
                "score": self.principle.score,
                K_PRINCIPLE_ACC: self.principle.accuracy,
                K_SPECIFICITY: self.principle.specificity,
                K_SPECIALIZED: self.principle.specialized,
            },
            PRESCRIPTION: {
                "score": self.prescription.score,
                K_MATCH_SCORE: self.prescription.match_score,
                K_N_MATCHED: self.prescription.n_matched,
                K_N_LABEL: self.prescription.n_label,
                K_N_GENERATED: self.prescription.n_generated,
                K_OVERLAPPED: list(self.prescription.overlapped),
                K_RATE: self.prescription.rate,
            },
            THEORY: {
                "score": self.theory.score,
                K_THOUGHT_ACC: self.theory.accuracy,
                K_PERVASIVENESS: self.theory.pervasiveness,
                K_ELABORATION: self.theory.elaboration,
            },
            TOTAL: self.total,
            MAX_SCORE: self.max_score,
        }


# ---------------------------------------------------------------------------
# Scalar scores
# ---------------------------------------------------------------------------

def completeness_score(answered: int) -> int:
    """Completeness points for N answered items: (N / 5) x 5 reduces to N."""
    if isinstance(answered, bool) or not isinstance(answered, int):
        raise RangeError(f"answered must be an integer, got {answered!r}")
    if not 0 <= answered <= 5:
        raise RangeError(f"answered must be in 0..5, got {answered}")
    return answered


def _round_half_up(value: Decimal, places: int = 2) -> float:
    return float(value.quantize(Decimal(10) ** -places, rounding=ROUND_HALF_UP))


def medicinal_match_score(n_matched: int, n_label: int) -> float:
    """The 9-point medicinal part: (matched / label total) x 9, half-up to 2dp."""
    if n_label <= 0:
        raise EmptyLabel("label prescription has no herbs")
    return _round_half_up(Decimal(n_matched * 9) / Decimal(n_label))


def herb_match_score(match: MatchResult, logic_points: float) -> float:
    """Prescription item score: medicinal match (9) plus composition logic (1).

    ``logic_points`` grades formula-composition logic and must be 0, 0.5 or
    1; it comes from a judge or reviewer, never computed here.
    """
    if match.n_label <= 0:
        raise EmptyLabel("label prescription has no herbs")
    if logic_points not in (0, 0.5, 1):
        raise InvalidLogicPoints(f"logic_points must be 0, 0.5 or 1, got {logic_points!r}")
    raw = Decimal(match.n_matched * 9) / Decimal(match.n_label) + Decimal(str(logic_points))
    return _round_half_up(raw)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _normalize_item_keys(item: Any, item_name: str, issues: list[str]) -> dict[str, Any]:
    if item is None:
        return {}
    if not isinstance(item, dict):
        issues.append(item_name)
        return {}
    aliases = _SUB_ALIASES[item_name]
    out: dict[str, Any] = {}
    for key, value in item.items():
        canonical = aliases.get(_norm_key(str(key)))
        if canonical is None:
            issues.append(f"{item_name}.{key} (unknown field)")
        else:
            out[canonical] = value
    return out


class _FieldReader:
    """Pulls typed fields out of one normalized item, collecting issues."""

    def __init__(self, item_name: str, data: dict[str, Any], strict: bool,
                 issues: list[str], warnings: list[str]):
        self.item_name = item_name
        self.data = data
        self.strict = strict
        self.issues = issues
        self.warnings = warnings

    def number(self, key: str, maximum: float | None) -> float:
        path = f"{self.item_name}.{key}"
        if key not in self.data:
            self.issues.append(f"{path} (missing)")
            return 0.0
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            try:
                value = float(value)
                self.warnings.append(f"{path}: coerced {self.data[key]!r} to number")
            except (TypeError, ValueError):
                self.issues.append(f"{path} (not a number)")
                return 0.0
        value = float(value)
        low, high = 0.0, maximum
        if value < low or (high is not None and value > high):
            if self.strict:
                self.issues.append(f"{path} (out of range)")
            else:
                clamped = clamp(value, low, high if high is not None else value)
                self.warnings.append(f"{path}: clamped {value} to {clamped}")
                value = clamped
        return value

    def string_list(self, key: str) -> list[str]:
        path = f"{self.item_name}.{key}"
        if key not in self.data:
            self.issues.append(f"{path} (missing)")
            return []
        value = self.data[key]
        if not isinstance(value, list):
            self.issues.append(f"{path} (not a list)")
            return []
        return [str(v) for v in value]

    def text(self, key: str, default: str = "") -> str:
        if key not in self.data:
            self.issues.append(f"{self.item_name}.{key} (missing)")
            return default
        return str(self.data[key])


def clamp(value: float, low: float, high: float) -> float:
    return max(low, min(value, high))


def _check_sum(item_name: str, score: float, subs: list[float], strict: bool,
               issues: list[str], warnings: list[str]) -> None:
    if abs(score - sum(subs)) > _EPS:
        if strict:
            issues.append(f"{item_name}.score (does not equal sum of sub-scores)")
        else:
            warnings.append(
                f"{item_name}: sub-scores sum to {sum(subs)}, item score {score} wins"
            )


def validate_verdict(document: str | dict, strict: bool = True) -> JudgeVerdict:
    """Validate a verdict document and build a JudgeVerdict.

    Strict mode raises SchemaError listing every offending field path.
    Lenient mode clamps out-of-range scores to [0, max], zero-fills missing
    fields, and records what it did in ``verdict.warnings``. In both modes a
    null/empty item forces that item's score to 0, and the stored total is
    made consistent with the six item scores.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ParseError("verdict document must be a JSON object")

    issues: list[str] = []
    warnings: list[str] = []

    top: dict[str, Any] = {}
    for key, value in doc.items():
        canonical = _TOP_ALIASES.get(_norm_key(str(key)))
        if canonical is None:
            if strict:
                issues.append(f"{key} (unknown field)")
            else:
                warnings.append(f"ignored unknown field {key!r}")
        else:
            top[canonical] = value

    items: dict[str, dict[str, Any]] = {}
    forced_zero: set[str] = set()
    for name in ITEM_NAMES:
        if name not in top:
            issues.append(f"{name} (missing)")
            items[name] = {}
            forced_zero.add(name)
            continue
        raw_item = top[name]
        if raw_item is None or raw_item == {} or raw_item == "":
            # Null/empty item: score 0, regardless of mode.
            warnings.append(f"{name}: null/empty item, score forced to 0")
            items[name] = {}
            forced_zero.add(name)
            continue
        items[name] = _normalize_item_keys(raw_item, name, issues)

    def reader(name: str) -> _FieldReader:
        data = items[name]
        if name in forced_zero:
            # Synthesize an all-zero shell so field reads do not re-report.
            data = {k: ([] if k in (K_MISSING, K_OVERLAPPED) else 0)
                    for k in _SUB_KEYS[name]}
            data[K_RATE] = "0%"
        return _FieldReader(name, data, strict, issues, warnings)

    r = reader(COMPLETENESS)
    comp = CompletenessItem(
        score=r.number("score", ITEM_MAXIMA[COMPLETENESS]),
        answered=r.number(K_ANSWERED, _SUB_MAXIMA[COMPLETENESS][K_ANSWERED]),
        required=r.number(K_REQUIRED, None),
        missing=r.string_list(K_MISSING),
    )
    if abs(comp.required - 5.0) > _EPS:
        if strict:
            issues.append(f"{COMPLETENESS}.{K_REQUIRED} (must be 5)")
        else:
            warnings.append(f"{COMPLETENESS}: required items {comp.required} reset to 5")
            comp.required = 5.0
    _check_sum(COMPLETENESS, comp.score, [comp.answered], strict, issues, warnings)

    r = reader(ETIOLOGY)
    maxima = _SUB_MAXIMA[ETIOLOGY]
    etiology = EtiologyItem(
        score=r.number("score", ITEM_MAXIMA[ETIOLOGY]),
        recognition=r.number(K_RECOGNITION, maxima[K_RECOGNITION]),
        pathogenesis=r.number(K_PATHOGENESIS, maxima[K_PATHOGENESIS]),
        coherence=r.number(K_COHERENCE, maxima[K_COHERENCE]),
    )
    _check_sum(ETIOLOGY, etiology.score,
               [etiology.recognition, etiology.pathogenesis, etiology.coherence],
               strict, issues, warnings)

    r = reader(SYNDROME)
    maxima = _SUB_MAXIMA[SYNDROME]
    syndrome = SyndromeItem(
        score=r.number("score", ITEM_MAXIMA[SYNDROME]),
        accuracy=r.number(K_SYNDROME_ACC, maxima[K_SYNDROME_ACC]),
        location_nature=r.number(K_LOCATION, maxima[K_LOCATION]),
    )
    _check_sum(SYNDROME, syndrome.score, [syndrome.accuracy, syndrome.location_nature],
               strict, issues, warnings)

    r = reader(PRINCIPLE)
    maxima = _SUB_MAXIMA[PRINCIPLE]
    principle = PrincipleItem(
        score=r.number("score", ITEM_MAXIMA[PRINCIPLE]),
        accuracy=r.number(K_PRINCIPLE_ACC, maxima[K_PRINCIPLE_ACC]),
        specificity=r.number(K_SPECIFICITY, maxima[K_SPECIFICITY]),
        specialized=r.number(K_SPECIALIZED, maxima[K_SPECIALIZED]),
    )
    _check_sum(PRINCIPLE, principle.score,
               [principle.accuracy, principle.specificity, principle.specialized],
               strict, issues, warnings)

    r = reader(PRESCRIPTION)
    prescription = PrescriptionItem(
        score=r.number("score", ITEM_MAXIMA[PRESCRIPTION]),
        match_score=r.number(K_MATCH_SCORE, _SUB_MAXIMA[PRESCRIPTION][K_MATCH_SCORE]),
        n_matched=r.number(K_N_MATCHED, None),
        n_label=r.number(K_N_LABEL, None),
        n_generated=r.number(K_N_GENERATED, None),
        overlapped=r.string_list(K_OVERLAPPED),
        rate=r.text(K_RATE, "0%"),
    )
    logic = prescription.score - prescription.match_score
    if min(abs(logic - x) for x in (0.0, 0.5, 1.0)) > _EPS:
        if strict:
            issues.append(f"{PRESCRIPTION}.score (score minus match score must be 0, 0.5 or 1)")
        else:
            warnings.append(
                f"{PRESCRIPTION}: implied composition-logic points {logic} outside {{0, 0.5, 1}}"
            )
    if prescription.n_matched > min(prescription.n_label, prescription.n_generated) + _EPS:
        if strict:
            issues.append(f"{PRESCRIPTION}.{K_N_MATCHED} (exceeds prescription sizes)")
        else:
            warnings.append(f"{PRESCRIPTION}: matched count exceeds prescription sizes")

    r = reader(THEORY)
    maxima = _SUB_MAXIMA[THEORY]
    theory = TheoryItem(
        score=r.number("score", ITEM_MAXIMA[THEORY]),
        accuracy=r.number(K_THOUGHT_ACC, maxima[K_THOUGHT_ACC]),
        pervasiveness=r.number(K_PERVASIVENESS, maxima[K_PERVASIVENESS]),
        elaboration=r.number(K_ELABORATION, maxima[K_ELABORATION]),
    )
    _check_sum(THEORY, theory.score,
               [theory.accuracy, theory.pervasiveness, theory.elaboration],
               strict, issues, warnings)

    verdict = JudgeVerdict(
        completeness=comp, etiology=etiology, syndrome=syndrome,
        principle=principle, prescription=prescription, theory=theory,
        warnings=warnings,
    )

    expected_total = sum(verdict.item_scores().values())
    if TOTAL not in top:
        issues.append(f"{TOTAL} (missing)")
        verdict.total = expected_total
    else:
        reported = top[TOTAL]
        if isinstance(reported, bool) or not isinstance(reported, (int, float)):
            issues.append(f"{TOTAL} (not a number)")
            verdict.total = expected_total
        elif abs(float(reported) - expected_total) > _EPS:
            if strict:
                issues.append(f"{TOTAL} (does not equal sum of item scores)")
            else:
                warnings.append(f"{TOTAL}: reported {reported}, recomputed {expected_total}")
            verdict.total = expected_total
        else:
            verdict.total = float(reported)

    if MAX_SCORE not in top:
        issues.append(f"{MAX_SCORE} (missing)")
    else:
        reported_max = top[MAX_SCORE]
        if not isinstance(reported_max, (int, float)) or abs(float(reported_max) - TOTAL_MAX) > _EPS:
            if strict:
                issues.append(f"{MAX_SCORE} (must be 55)")
            else:
                warnings.append(f"{MAX_SCORE}: reported {reported_max!r} reset to 55")
    verdict.max_score = TOTAL_MAX

    if issues:
        if strict:
            raise SchemaError(issues)
        warnings.extend(issues)
    return verdict


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreCard:
    """Raw item scores next to their [0, 1]-normalized values."""

    raw: dict[str, float]
    normalized: dict[str, float]
    normalized_mean: float
    includes_completeness: bool = True


def scorecard(verdict: JudgeVerdict, include_completeness: bool = True) -> ScoreCard:
    """Normalize each scored entry by its maximum and average.

    Six entries carry scores (completeness / 5, five items / 10). Whether
    completeness participates in the mean is configurable; the default keeps
    it in.
    """
    raw = verdict.item_scores()
    normalized = {name: raw[name] / ITEM_MAXIMA[name] for name in ITEM_NAMES}
    pool = [v for name, v in normalized.items()
            if include_completeness or name != COMPLETENESS]
    return ScoreCard(
        raw=raw,
        normalized=normalized,
        normalized_mean=sum(pool) / len(pool),
        includes_completeness=include_completeness,
    )


def denormalize(card: ScoreCard) -> dict[str, float]:
    """Recover raw item scores from a ScoreCard."""
    return dict(card.raw)


# ---------------------------------------------------------------------------
# Local cross-checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Discrepancy:
    field: str
    judge_value: float
    local_value: float


@dataclass
class AuditReport:
    discrepancies: list[Discrepancy] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)


def recompute_local_fields(
    verdict: JudgeVerdict,
    parsed: StructuredResponse,
    label: StructuredResponse,
    lexicon: Lexicon,
) -> AuditReport:
    """Cross-check judge arithmetic against the local parser and matcher.

    Recomputes prescription overlap counts, the medicinal match score, and
    the answered-items count, and reports where the judge disagrees. The
    verdict itself is never mutated.
    """
    report = AuditReport(metadata={
        "normalized_entries": len(ITEM_NAMES),
        "advertised_normalized_scores": 7,
        "note": "six schema entries carry scores; the advertised seventh is unresolved",
    })

    def compare(name: str, judge_value: float, local_value: float) -> None:
        if abs(judge_value - local_value) > _EPS:
            report.discrepancies.append(Discrepancy(name, judge_value, local_value))

    generated = extract_prescription(
        parsed.sections.get(SectionKind.TCM_PRESCRIPTION, ""), lexicon
    )
    gold = extract_prescription(
        label.sections.get(SectionKind.TCM_PRESCRIPTION, ""), lexicon
    )
    if gold.entries:
        match = match_prescriptions(generated, gold, lexicon)
        compare(f"{PRESCRIPTION}.{K_N_MATCHED}", verdict.prescription.n_matched, match.n_matched)
        compare(f"{PRESCRIPTION}.{K_N_LABEL}", verdict.prescription.n_label, match.n_label)
        compare(f"{PRESCRIPTION}.{K_N_GENERATED}", verdict.prescription.n_generated,
                match.n_generated)
        compare(f"{PRESCRIPTION}.{K_MATCH_SCORE}", verdict.prescription.match_score,
                medicinal_match_score(match.n_matched, match.n_label))
    else:
        report.metadata["prescription_check"] = "skipped: label has no prescription section"

    local_answered = count_answered_items(parsed, SCORED_KINDS)
    compare(f"{COMPLETENESS}.{K_ANSWERED}", verdict.completeness.answered, local_answered)
    return report
