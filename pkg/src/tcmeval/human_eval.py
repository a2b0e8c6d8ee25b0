"""Blinded human rating: sessions, five-dimension 1-10 scores, weighted
totals, and unblinded aggregate reports.

Each rater gets an independent seed-deterministic permutation of the models
onto the labels Model1..ModelN, so position bias does not correlate across
raters. True model names never appear in anything a rater-facing surface
serializes; unblinding happens only in the aggregate report over complete
sessions.
"""

from __future__ import annotations

import hashlib
import random
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .analytics import aggregate_stats
from .errors import (
    Duplicate,
    InvalidPanel,
    OutOfRange,
    SessionClosed,
    UnknownCase,
    UnknownLabel,
)

DIMENSIONS = ("similarity", "philosophy", "safety", "completeness", "fluency")
WEIGHTED_TOTAL = "weighted_total"


@dataclass(frozen=True)
class DimensionWeights:
    similarity: float = 50.0
    philosophy: float = 20.0
    safety: float = 10.0
    completeness: float = 10.0
    fluency: float = 10.0

    def __post_init__(self) -> None:
        if abs(sum(self.as_dict().values()) - 100.0) > 1e-9:
            raise OutOfRange("dimension weights must sum to 100")

    def as_dict(self) -> dict[str, float]:
        return {d: getattr(self, d) for d in DIMENSIONS}


def hash_rater(name: str, salt: str = "tcmeval") -> str:
    """Salted digest of a rater identity; plaintext names are never persisted."""
    return hashlib.sha256(f"{salt}:{name}".encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Rater:
    name_hash: str
    title: str = ""
    group: str = ""


@dataclass
class RatingSession:
    id: str
    rater: Rater
    doctor: str
    cases: list[str]
    blinding: dict[str, str]  # true model -> blinded label
    seed: int
    status: str = "open"  # "open" | "complete"

    def labels(self) -> list[str]:
        return [f"Model{i + 1}" for i in range(len(self.blinding))]

    def true_model_for(self, label: str) -> str:
        inverse = {v: k for k, v in self.blinding.items()}
        return inverse[label]

    def expected_rating_count(self) -> int:
        return len(self.cases) * len(self.blinding)

    def to_public_dict(self) -> dict:
        """Rater-facing view: never includes the blinding map or true names."""
        return {
            "id": self.id,
            "rater": {"name_hash": self.rater.name_hash, "title": self.rater.title,
                      "group": self.rater.group},
            "doctor": self.doctor,
            "cases": list(self.cases),
            "labels": self.labels(),
            "status": self.status,
        }


@dataclass
class Rating:
    session_id: str
    case_id: str
    label: str
    scores: dict[str, int]
    supersede: bool = False
    ts: str = ""

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "case_id": self.case_id,
            "label": self.label,
            "scores": dict(self.scores),
            "supersede": self.supersede,
            "ts": self.ts,
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def create_session(
    rater: Rater,
    doctor: str,
    cases: list[str],
    models: list[str],
    seed: int,
    session_id: str | None = None,
) -> RatingSession:
    """Open a session with a seed-deterministic uniform blinding permutation."""
    if not cases or len(models) < 2:
        raise InvalidPanel("need at least 1 case and 2 models")
    if len(set(models)) != len(models):
        raise InvalidPanel("model names must be unique")
    order = list(models)
    random.Random(seed).shuffle(order)
    blinding = {model: f"Model{i + 1}" for i, model in enumerate(order)}
    return RatingSession(
        id=session_id or uuid.uuid4().hex,
        rater=rater,
        doctor=doctor,
        cases=list(cases),
        blinding=blinding,
        seed=seed,
    )


def validate_rating(
    session: RatingSession, existing: list[Rating], rating: Rating
) -> None:
    """Raise if the rating cannot be accepted into the session."""
    if session.status != "open":
        raise SessionClosed(f"session {session.id} is complete")
    if rating.case_id not in session.cases:
        raise UnknownCase(f"case {rating.case_id!r} not in session")
    if rating.label not in session.blinding.values():
        raise UnknownLabel(f"label {rating.label!r} not in session")
    missing = [d for d in DIMENSIONS if d not in rating.scores]
    if missing:
        raise OutOfRange(f"missing dimensions: {missing}")
    for dim in DIMENSIONS:
        value = rating.scores[dim]
        if isinstance(value, bool) or not isinstance(value, int) or not 1 <= value <= 10:
            raise OutOfRange(f"{dim} must be an integer in 1..10, got {value!r}")
    already = any(
        r.case_id == rating.case_id and r.label == rating.label for r in existing
    )
    if already and not rating.supersede:
        raise Duplicate(
            f"({rating.case_id}, {rating.label}) already rated; resubmit with supersede"
        )


def effective_ratings(ratings: list[Rating]) -> dict[tuple[str, str], Rating]:
    """Latest rating per (case, label); superseding submissions replace."""
    out: dict[tuple[str, str], Rating] = {}
    for rating in ratings:
        out[(rating.case_id, rating.label)] = rating
    return out


def session_complete(session: RatingSession, ratings: list[Rating]) -> bool:
    return len(effective_ratings(ratings)) == session.expected_rating_count()


class RatingBook:
    """In-memory session + rating store with append-only semantics."""

    def __init__(self) -> None:
        self.sessions: dict[str, RatingSession] = {}
        self.ratings: dict[str, list[Rating]] = {}

    def add_session(self, session: RatingSession) -> None:
        if session.id in self.sessions:
            raise Duplicate(f"session {session.id} already exists")
        self.sessions[session.id] = session
        self.ratings[session.id] = []

    def submit(self, rating: Rating) -> Rating:
        session = self.sessions.get(rating.session_id)
        if session is None:
            raise UnknownCase(f"no session {rating.session_id!r}")
        stored = self.ratings[session.id]
        validate_rating(session, stored, rating)
        if not rating.ts:
            rating.ts = _now()
        stored.append(rating)
        if session_complete(session, stored):
            session.status = "complete"
        return rating

    def pairs(self) -> list[tuple[RatingSession, list[Rating]]]:
        return [(self.sessions[sid], list(self.ratings[sid]))
                for sid in sorted(self.sessions)]


def weighted_total(rating: Rating, weights: DimensionWeights = DimensionWeights()) -> float:
    """Linear rescale of the 1-10 scores onto the dimension weights.

    Each dimension contributes score/10 of its weight, so the total spans
    [10, 100].
    """
    w = weights.as_dict()
    return sum(rating.scores[d] * w[d] / 10.0 for d in DIMENSIONS)


@dataclass(frozen=True)
class ReportRow:
    doctor: str
    model: str
    dimension: str
    mean: float
    std: float
    n: int


@dataclass
class HumanReport:
    rows: list[ReportRow]
    warnings: list[str] = field(default_factory=list)
    weighting: str = "per-rating weighted total (score/10 x weight), then averaged"


def unblind_report(
    pairs: list[tuple[RatingSession, list[Rating]]],
    weights: DimensionWeights = DimensionWeights(),
) -> HumanReport:
    """Invert blinding and aggregate complete sessions per model/dimension.

    Incomplete sessions are excluded with a warning. Weighted totals are
    computed per rating before averaging.
    """
    warnings: list[str] = []
    values: dict[tuple[str, str, str], list[float]] = {}
    for session, ratings in pairs:
        if not session_complete(session, ratings):
            warnings.append(f"session {session.id} incomplete, excluded")
            continue
        inverse = {v: k for k, v in session.blinding.items()}
        for rating in effective_ratings(ratings).values():
            model = inverse[rating.label]
            for dim in DIMENSIONS:
                values.setdefault((session.doctor, model, dim), []).append(
                    float(rating.scores[dim])
                )
            values.setdefault((session.doctor, model, WEIGHTED_TOTAL), []).append(
                weighted_total(rating, weights)
            )
    rows = []
    for (doctor, model, dim), samples in sorted(values.items()):
        stats = aggregate_stats(samples)
        rows.append(ReportRow(doctor, model, dim, stats.mean, stats.std, stats.n))
    return HumanReport(rows=rows, warnings=warnings)
