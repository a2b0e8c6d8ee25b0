"""Evaluation data records: cases, model responses, and stored verdicts."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import Duplicate
from .parsing import SectionKind, StructuredResponse, parse_structured_response


@dataclass
class CaseRecord:
    """One test clinical case with its gold answer."""

    id: str
    doctor: str
    instruction: str
    label: StructuredResponse
    source: str = ""

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "CaseRecord":
        for key in ("id", "doctor", "instruction", "label"):
            if key not in doc:
                raise KeyError(key)
        return cls(
            id=str(doc["id"]),
            doctor=str(doc["doctor"]),
            instruction=str(doc["instruction"]),
            label=parse_structured_response(str(doc["label"])),
            source=str(doc.get("source", "")),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "doctor": self.doctor,
            "instruction": self.instruction,
            "label": self.label.raw,
            "source": self.source,
        }

    def trial_eligible(self) -> bool:
        return bool(self.label.sections.get(SectionKind.TCM_PRESCRIPTION, "").strip())


class ResponseSet:
    """Model responses keyed by (case_id, model)."""

    def __init__(self) -> None:
        self._texts: dict[tuple[str, str], str] = {}

    def put(self, case_id: str, model: str, text: str) -> None:
        self._texts[(case_id, model)] = text

    def get(self, case_id: str, model: str) -> str | None:
        return self._texts.get((case_id, model))

    def models(self) -> list[str]:
        return sorted({model for _, model in self._texts})

    def __len__(self) -> int:
        return len(self._texts)

    def items(self) -> Iterator[tuple[tuple[str, str], str]]:
        return iter(sorted(self._texts.items()))


TripleKey = tuple[str, str, str]  # (case_id, model, judge)


@dataclass
class VerdictRecord:
    """Outcome of one (case, model, judge) evaluation triple."""

    case_id: str
    model: str
    judge: str
    doctor: str
    status: str  # "ok" | "failed"
    document: dict[str, Any] | None = None
    error: str = ""
    attempts: int = 0
    ts: str = ""

    @property
    def key(self) -> TripleKey:
        return (self.case_id, self.model, self.judge)

    def to_dict(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "model": self.model,
            "judge": self.judge,
            "doctor": self.doctor,
            "status": self.status,
            "document": self.document,
            "error": self.error,
            "attempts": self.attempts,
            "ts": self.ts,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "VerdictRecord":
        return cls(**doc)


class VerdictStore:
    """Append-only store of verdict records; a stored triple is final."""

    def __init__(self) -> None:
        self._records: dict[TripleKey, VerdictRecord] = {}
        self._lock = threading.Lock()

    def put(self, record: VerdictRecord) -> None:
        with self._lock:
            if record.key in self._records:
                raise Duplicate(f"triple already stored: {record.key}")
            self._records[record.key] = record

    def has(self, key: TripleKey) -> bool:
        with self._lock:
            return key in self._records

    def get(self, key: TripleKey) -> VerdictRecord | None:
        with self._lock:
            return self._records.get(key)

    def records(self) -> list[VerdictRecord]:
        with self._lock:
            return [self._records[k] for k in sorted(self._records)]

    def completed(self) -> list[VerdictRecord]:
        return [r for r in self.records() if r.status == "ok"]

    def failed(self) -> list[VerdictRecord]:
        return [r for r in self.records() if r.status == "failed"]

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)
