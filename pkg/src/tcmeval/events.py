"""Append-only JSONL event log and the stores reconstructed from it.

Every mutation of the evaluation state is an event: cases and responses
ingested, verdicts stored, sessions created, ratings submitted. Replaying
the log rebuilds the stores exactly, so the log is the single source of
persistence; live operation applies each event through the same code path
replay uses.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from .errors import CorruptLog
from .human_eval import Rater, Rating, RatingBook, RatingSession
from .records import CaseRecord, ResponseSet, VerdictRecord, VerdictStore

EVENT_TYPES = (
    "case_ingested",
    "response_ingested",
    "verdict_stored",
    "session_created",
    "rating_submitted",
)


@dataclass(frozen=True)
class Event:
    seq: int
    ts: str
    type: str
    data: dict[str, Any]

    def to_line(self) -> str:
        return json.dumps(
            {"seq": self.seq, "ts": self.ts, "type": self.type, "data": self.data},
            ensure_ascii=False,
        )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class EventLog:
    """Single-writer JSONL log with strictly increasing sequence numbers."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._memory: list[Event] = []
        self._handle = None
        self._seq = 0
        if self.path is not None and self.path.exists():
            self._seq = max((e.seq for e in self.read_all()), default=0)

    def append(self, type: str, data: dict[str, Any], ts: str | None = None) -> Event:
        if type not in EVENT_TYPES:
            raise ValueError(f"unknown event type {type!r}")
        with self._lock:
            self._seq += 1
            event = Event(seq=self._seq, ts=ts or _now(), type=type, data=data)
            if self.path is not None:
                if self._handle is None:
                    self.path.parent.mkdir(parents=True, exist_ok=True)
                    self._handle = self.path.open("a", encoding="utf-8")
                self._handle.write(event.to_line() + "\n")
                self._handle.flush()
            else:
                self._memory.append(event)
            return event

    def read_all(self) -> list[Event]:
        if self.path is None:
            return list(self._memory)
        if not self.path.exists():
            return []
        events: list[Event] = []
        for lineno, line in enumerate(
            self.path.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                events.append(Event(seq=int(doc["seq"]), ts=str(doc["ts"]),
                                    type=str(doc["type"]), data=doc["data"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorruptLog(f"unreadable event at line {lineno}: {exc}") from exc
        return events

    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.flush()
                self._handle.close()
                self._handle = None


class Stores:
    """All mutable evaluation state, reconstructible from the event log."""

    def __init__(self) -> None:
        self.cases: dict[str, CaseRecord] = {}
        self.responses = ResponseSet()
        self.verdicts = VerdictStore()
        self.book = RatingBook()

    def apply(self, event: Event) -> None:
        data = event.data
        if event.type == "case_ingested":
            case = CaseRecord.from_dict(data)
            self.cases[case.id] = case
        elif event.type == "response_ingested":
            self.responses.put(data["case_id"], data["model"], data["text"])
        elif event.type == "verdict_stored":
            self.verdicts.put(VerdictRecord.from_dict(data))
        elif event.type == "session_created":
            rater = Rater(**data["rater"])
            session = RatingSession(
                id=data["id"], rater=rater, doctor=data["doctor"],
                cases=list(data["cases"]), blinding=dict(data["blinding"]),
                seed=int(data["seed"]), status=data.get("status", "open"),
            )
            self.book.add_session(session)
        elif event.type == "rating_submitted":
            rating = Rating(
                session_id=data["session_id"], case_id=data["case_id"],
                label=data["label"], scores={k: int(v) for k, v in data["scores"].items()},
                supersede=bool(data.get("supersede", False)), ts=data.get("ts", ""),
            )
            self.book.submit(rating)
        else:
            raise CorruptLog(f"unknown event type {event.type!r}", seq=event.seq)

    def snapshot(self) -> dict[str, Any]:
        """Canonical, comparison-friendly view of all stores."""
        return {
            "cases": {cid: case.to_dict() for cid, case in sorted(self.cases.items())},
            "responses": [
                {"case_id": cid, "model": model, "text": text}
                for (cid, model), text in self.responses.items()
            ],
            "verdicts": [r.to_dict() for r in self.verdicts.records()],
            "sessions": {
                sid: {
                    **session.to_public_dict(),
                    "blinding": dict(sorted(session.blinding.items())),
                    "seed": session.seed,
                }
                for sid, session in sorted(self.book.sessions.items())
            },
            "ratings": {
                sid: [r.to_dict() for r in ratings]
                for sid, ratings in sorted(self.book.ratings.items())
            },
        }


def session_event_data(session: RatingSession) -> dict[str, Any]:
    return {
        "id": session.id,
        "rater": {"name_hash": session.rater.name_hash, "title": session.rater.title,
                  "group": session.rater.group},
        "doctor": session.doctor,
        "cases": list(session.cases),
        "blinding": dict(session.blinding),
        "seed": session.seed,
        "status": "open",
    }


def replay(events: Iterable[Event]) -> Stores:
    """Rebuild stores from an event sequence; sequence numbers must be
    strictly increasing and contiguous from 1."""
    stores = Stores()
    expected = 1
    for event in events:
        if event.seq != expected:
            raise CorruptLog(
                f"sequence gap: expected {expected}, found {event.seq}", seq=event.seq
            )
        expected += 1
        stores.apply(event)
    return stores
