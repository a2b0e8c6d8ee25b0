"""HTTP service and ingestion: case/response intake, judge-run orchestration,
blinded rating sessions, event-log persistence, and report endpoints.

All mutations validate first, then append exactly one event to the log
before acknowledging; the in-memory stores are updated by applying that
same event, so a restart replays the log into an identical state. Session
endpoints only ever serialize blinded labels: true model names appear
nowhere in any rater-facing response.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

from fastapi import Depends, FastAPI, HTTPException, Request
from pydantic import BaseModel, Field

from . import __version__
from .analytics import (
    TrialResult,
    delta_table,
    delta_table_rows,
    score_table,
    score_table_rows,
    trial_overlap_score,
)
from .config import RunConfig
from .errors import (
    Duplicate,
    EmptyInput,
    EmptyLabel,
    InvalidPanel,
    OutOfRange,
    SessionClosed,
    TcmEvalError,
    UnknownBenchmark,
    UnknownCase,
    UnknownLabel,
)
from .events import EventLog, Stores, replay, session_event_data
from .herbs import Lexicon, default_lexicon
from .human_eval import (
    DIMENSIONS,
    Rater,
    Rating,
    RatingSession,
    create_session,
    effective_ratings,
    hash_rater,
    unblind_report,
    validate_rating,
)
from .judges import JudgeConfig, run_evaluation
from .parsing import CANONICAL_HEADERS, SectionKind, extract_prescription, parse_structured_response
from .records import CaseRecord


class EvalService:
    """Owns the stores, the event log, and the single writer lock."""

    def __init__(self, config: RunConfig, log: EventLog | None = None):
        self.config = config
        data_dir = Path(config.data_dir)
        self.log = log if log is not None else EventLog(data_dir / "events.jsonl")
        self.stores: Stores = replay(self.log.read_all())
        self.lexicon: Lexicon = (
            Lexicon.load(config.lexicon) if config.lexicon else default_lexicon()
        )
        self._write_lock = threading.Lock()
        self.runs: dict[str, dict[str, Any]] = {}

    # -- persistence ------------------------------------------------------

    def record(self, type: str, data: dict[str, Any]) -> None:
        """Append one event and apply it; callers validate beforehand."""
        event = self.log.append(type, data)
        self.stores.apply(event)

    # -- ingestion --------------------------------------------------------

    def ingest_cases(self, path: str | Path) -> tuple[int, list[str]]:
        """Load a JSONL case file; invalid lines are reported, never fatal."""
        count = 0
        warnings: list[str] = []
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        with self._write_lock:
            for lineno, line in enumerate(lines, start=1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                    case = CaseRecord.from_dict(doc)
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    warnings.append(f"line {lineno}: invalid case record ({exc})")
                    continue
                if case.id in self.stores.cases:
                    warnings.append(f"line {lineno}: duplicate case id {case.id!r}, rejected")
                    continue
                self.record("case_ingested", case.to_dict())
                count += 1
        return count, warnings

    def ingest_responses(self, path: str | Path) -> tuple[int, list[str]]:
        count = 0
        warnings: list[str] = []
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        with self._write_lock:
            for lineno, line in enumerate(lines, start=1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                    case_id = str(doc["case_id"])
                    model = str(doc["model"])
                    text = str(doc["text"])
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    warnings.append(f"line {lineno}: invalid response record ({exc})")
                    continue
                if case_id not in self.stores.cases:
                    warnings.append(f"line {lineno}: unknown case id {case_id!r}, rejected")
                    continue
                if self.stores.responses.get(case_id, model) is not None:
                    warnings.append(
                        f"line {lineno}: duplicate response for ({case_id!r}, {model!r}), rejected"
                    )
                    continue
                self.record("response_ingested",
                            {"case_id": case_id, "model": model, "text": text})
                count += 1
        return count, warnings

    # -- rating sessions ----------------------------------------------------

    def open_session(self, rater_name: str, title: str, group: str, doctor: str,
                     cases: list[str], models: list[str], seed: int) -> RatingSession:
        unknown = [c for c in cases if c not in self.stores.cases]
        if unknown:
            raise UnknownCase(f"cases not ingested: {unknown}")
        rater = Rater(name_hash=hash_rater(rater_name), title=title, group=group)
        session = create_session(rater, doctor, cases, models, seed)
        with self._write_lock:
            self.record("session_created", session_event_data(session))
        return self.stores.book.sessions[session.id]

    def next_item(self, session_id: str) -> dict[str, Any]:
        session = self._session(session_id)
        ratings = self.stores.book.ratings[session_id]
        rated = set(effective_ratings(ratings))
        total = session.expected_rating_count()
        progress = {"rated": len(rated), "total": total}
        for case_id in session.cases:
            for label in session.labels():
                if (case_id, label) in rated:
                    continue
                case = self.stores.cases[case_id]
                true_model = session.true_model_for(label)
                response_text = self.stores.responses.get(case_id, true_model) or ""
                return {
                    "done": False,
                    "session_id": session_id,
                    "case_id": case_id,
                    "label": label,
                    "case_text": case.instruction,
                    "gold_sections": _section_views(case.label),
                    "response_sections": _section_views(
                        parse_structured_response(response_text)
                    ),
                    "progress": progress,
                    "dimensions": list(DIMENSIONS),
                }
        return {"done": True, "session_id": session_id, "progress": progress}

    def submit_rating(self, session_id: str, case_id: str, label: str,
                      scores: dict[str, int], supersede: bool) -> dict[str, Any]:
        # Stamp before logging so the event carries the authoritative time
        # and replay reproduces it bit-exactly.
        rating = Rating(session_id=session_id, case_id=case_id, label=label,
                        scores=scores, supersede=supersede,
                        ts=datetime.now(timezone.utc).isoformat())
        with self._write_lock:
            session = self._session(session_id)
            validate_rating(session, self.stores.book.ratings[session_id], rating)
            self.record("rating_submitted", rating.to_dict())
            session = self._session(session_id)
            ratings = self.stores.book.ratings[session_id]
        return {
            "stored": True,
            "session_status": session.status,
            "progress": {
                "rated": len(effective_ratings(ratings)),
                "total": session.expected_rating_count(),
            },
        }

    def export_session(self, session_id: str) -> str:
        """JSONL export: session header plus one line per stored rating.

        Labels stay blinded regardless of session status; unblinding is the
        aggregate report's job.
        """
        session = self._session(session_id)
        lines = [json.dumps({"session": session.to_public_dict()}, ensure_ascii=False)]
        for rating in self.stores.book.ratings[session_id]:
            lines.append(json.dumps({"rating": rating.to_dict()}, ensure_ascii=False))
        return "\n".join(lines) + "\n"

    def _session(self, session_id: str) -> RatingSession:
        session = self.stores.book.sessions.get(session_id)
        if session is None:
            raise UnknownCase(f"no session {session_id!r}")
        return session

    # -- judge runs ---------------------------------------------------------

    def record_verdict(self, record) -> None:
        """Serialized sink for run_evaluation results."""
        with self._write_lock:
            self.record("verdict_stored", record.to_dict())

    def start_judge_run(self, judge_names: list[str] | None = None,
                        max_requests: int | None = None) -> str:
        judges = self.select_judges(judge_names)
        run_id = uuid.uuid4().hex[:12]
        status = {"run_id": run_id, "state": "running", "total": 0,
                  "completed": 0, "failed": 0, "skipped": 0}
        self.runs[run_id] = status

        def work() -> None:
            try:
                summary = run_evaluation(
                    cases=list(self.stores.cases.values()),
                    responses=self.stores.responses,
                    judges=judges,
                    store=self.stores.verdicts,
                    emit=self.record_verdict,
                    max_requests=max_requests,
                )
                status.update(state="done", total=summary.total,
                              completed=summary.completed, failed=summary.failed,
                              skipped=summary.skipped)
            except Exception as exc:  # recorded, surfaced via status endpoint
                status.update(state="error", error=str(exc))

        threading.Thread(target=work, name=f"judge-run-{run_id}", daemon=True).start()
        return run_id

    def select_judges(self, names: list[str] | None) -> list[JudgeConfig]:
        if not self.config.judges:
            raise EmptyInput("no judges configured")
        if not names:
            return list(self.config.judges)
        by_name = {j.name: j for j in self.config.judges}
        missing = [n for n in names if n not in by_name]
        if missing:
            raise UnknownCase(f"judges not configured: {missing}")
        return [by_name[n] for n in names]

    # -- reports ------------------------------------------------------------

    def scores_report(self, group_by: tuple[str, ...] = ("doctor", "model", "judge")):
        return score_table(self.stores.verdicts, group_by)

    def delta_report(self, benchmark: str):
        return delta_table(self.scores_report(("model",)), benchmark)

    def human_report(self):
        return unblind_report(self.stores.book.pairs(), self.config.weights)

    def trial_report(self) -> dict[str, TrialResult]:
        """Per-model prescription overlap over trial-eligible cases."""
        per_model: dict[str, dict[str, float]] = {}
        for case in self.stores.cases.values():
            if not case.trial_eligible():
                continue
            label = extract_prescription(
                case.label.sections[SectionKind.TCM_PRESCRIPTION], self.lexicon
            )
            if not label.entries:
                continue
            for model in self.stores.responses.models():
                text = self.stores.responses.get(case.id, model)
                if text is None:
                    continue
                parsed = parse_structured_response(text)
                generated = extract_prescription(
                    parsed.sections.get(SectionKind.TCM_PRESCRIPTION, ""), self.lexicon
                )
                percent = trial_overlap_score(generated, label, self.lexicon)
                per_model.setdefault(model, {})[case.id] = percent
        return {
            model: TrialResult.from_percents(samples)
            for model, samples in sorted(per_model.items())
        }

    def close(self) -> None:
        self.log.close()


def _section_views(resp) -> list[dict[str, str]]:
    return [
        {"kind": kind.value, "header": CANONICAL_HEADERS[kind],
         "text": resp.sections[kind]}
        for kind in SectionKind
        if kind in resp.sections
    ]


# ---------------------------------------------------------------------------
# FastAPI wiring
# ---------------------------------------------------------------------------

class SessionRequest(BaseModel):
    rater_name: str
    title: str = ""
    group: str = ""
    doctor: str
    cases: list[str]
    models: list[str]
    seed: int = 0


class RatingRequest(BaseModel):
    case_id: str
    label: str
    scores: dict[str, int]
    supersede: bool = False


class JudgeRunRequest(BaseModel):
    judges: Optional[list[str]] = None
    max_requests: Optional[int] = Field(default=None, ge=1)


_ERROR_CODES = {
    UnknownCase: 404,
    UnknownLabel: 400,
    UnknownBenchmark: 404,
    Duplicate: 409,
    OutOfRange: 400,
    SessionClosed: 409,
    InvalidPanel: 400,
    EmptyInput: 409,
    EmptyLabel: 409,
}


def create_app(service: EvalService) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        service.close()

    app = FastAPI(title="tcmeval", version=__version__, lifespan=lifespan)
    app.state.service = service

    # Static bearer token (optional): when the configured env var carries a
    # value, every mutating endpoint requires it.
    token = (os.environ.get(service.config.api_token_env, "")
             if service.config.api_token_env else "")

    def require_token(request: Request) -> None:
        if token and request.headers.get("authorization", "") != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    mutating = [Depends(require_token)]

    @app.exception_handler(TcmEvalError)
    async def _handle(request: Request, exc: TcmEvalError):
        from fastapi.responses import JSONResponse

        status = _ERROR_CODES.get(type(exc), 400)
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/sessions", dependencies=mutating)
    def post_session(body: SessionRequest) -> dict:
        session = service.open_session(
            rater_name=body.rater_name, title=body.title, group=body.group,
            doctor=body.doctor, cases=body.cases, models=body.models, seed=body.seed,
        )
        return session.to_public_dict()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return service._session(session_id).to_public_dict()

    @app.get("/sessions/{session_id}/next-item")
    def get_next_item(session_id: str) -> dict:
        return service.next_item(session_id)

    @app.post("/sessions/{session_id}/ratings", dependencies=mutating)
    def post_rating(session_id: str, body: RatingRequest) -> dict:
        return service.submit_rating(
            session_id, body.case_id, body.label, body.scores, body.supersede
        )

    @app.get("/sessions/{session_id}/export")
    def get_export(session_id: str):
        from fastapi.responses import PlainTextResponse

        return PlainTextResponse(service.export_session(session_id),
                                 media_type="application/x-ndjson")

    @app.post("/judge-runs", dependencies=mutating)
    def post_judge_run(body: JudgeRunRequest) -> dict:
        run_id = service.start_judge_run(body.judges, body.max_requests)
        return {"run_id": run_id}

    @app.get("/judge-runs/{run_id}/status")
    def get_run_status(run_id: str) -> dict:
        status = service.runs.get(run_id)
        if status is None:
            raise HTTPException(status_code=404, detail=f"no run {run_id!r}")
        return status

    @app.get("/reports/scores")
    def get_scores(group_by: str = "doctor,model,judge") -> dict:
        axes = tuple(a.strip() for a in group_by.split(",") if a.strip())
        table = service.scores_report(axes)
        return {"axis": list(table.axis), "rows": score_table_rows(table)}

    @app.get("/reports/delta")
    def get_delta(benchmark: str) -> dict:
        delta = service.delta_report(benchmark)
        return {"benchmark": delta.benchmark, "models": delta.models,
                "rows": delta_table_rows(delta)}

    @app.get("/reports/human")
    def get_human() -> dict:
        report = service.human_report()
        return {
            "weighting": report.weighting,
            "warnings": report.warnings,
            "rows": [
                {"doctor": r.doctor, "model": r.model, "dimension": r.dimension,
                 "mean": r.mean, "std": r.std, "n": r.n}
                for r in report.rows
            ],
        }

    @app.get("/reports/trial")
    def get_trial() -> dict:
        results = service.trial_report()
        return {
            model: {"mean": tr.mean, "std": tr.std, "n": len(tr.per_sample),
                    "per_sample": tr.per_sample}
            for model, tr in results.items()
        }

    ui_dir = Path(service.config.ui_dir) if service.config.ui_dir else None
    if ui_dir and ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(config: RunConfig) -> None:
    """Run the service until interrupted; raises BindError on an occupied port."""
    import uvicorn

    from .errors import BindError

    service = EvalService(config)
    app = create_app(service)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    except OSError as exc:
        raise BindError(f"cannot bind {config.host}:{config.port}: {exc}") from exc
    except SystemExit as exc:
        # uvicorn exits(3) when it cannot bind instead of raising OSError.
        if exc.code:
            raise BindError(f"cannot bind {config.host}:{config.port}") from exc
    finally:
        service.close()
