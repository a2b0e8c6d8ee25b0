"""Judge LLM gateway: prompt assembly, OpenAI-compatible chat calls, retry
and rate-limit discipline, and whole-run orchestration with resume.

Transport and validation failures are handled differently: a transport
failure is retried as-is, while a response that fails schema validation is
re-requested with a one-line corrective suffix. Each judge's in-flight
requests are bounded by its ``max_in_flight``; results are persisted through
a single serialized sink.
"""

from __future__ import annotations

import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Sequence

import httpx

from .errors import (
    JudgeUnavailable,
    ParseError,
    PreconditionViolation,
    SchemaError,
    VerdictRejected,
)
from .prompts import CORRECTIVE_SUFFIX, PromptPair, PromptTemplate, build_judge_prompt, structured_output_format
from .records import CaseRecord, ResponseSet, VerdictRecord, VerdictStore
from .rubric import JudgeVerdict, validate_verdict

logger = logging.getLogger(__name__)

SCHEMA_MODES = ("structured-output", "prompt-embedded")


@dataclass(frozen=True)
class JudgeConfig:
    name: str
    endpoint: str
    auth_env: str = ""
    schema_mode: str = "prompt-embedded"
    max_retries: int = 2
    max_in_flight: int = 4
    timeout: float = 60.0
    model: str = ""
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.schema_mode not in SCHEMA_MODES:
            raise PreconditionViolation(
                f"schema_mode must be one of {SCHEMA_MODES}, got {self.schema_mode!r}"
            )
        if self.max_retries < 0 or self.max_in_flight < 1:
            raise PreconditionViolation("max_retries >= 0 and max_in_flight >= 1 required")

    def request_model(self) -> str:
        return self.model or self.name

    def headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            key = os.environ.get(self.auth_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers


@dataclass
class VerdictAttempt:
    """A validated verdict plus how it was obtained."""

    verdict: JudgeVerdict
    attempts: int
    transcripts: list[dict] = field(default_factory=list)


def _chat_body(judge: JudgeConfig, prompt: PromptPair, corrective: bool) -> dict:
    user = prompt.user + (CORRECTIVE_SUFFIX if corrective else "")
    body: dict = {
        "model": judge.request_model(),
        "messages": [
            {"role": "system", "content": prompt.system},
            {"role": "user", "content": user},
        ],
        "temperature": judge.temperature,
    }
    if judge.schema_mode == "structured-output":
        body["response_format"] = structured_output_format()
    return body


def _extract_content(payload: dict) -> str:
    try:
        return payload["choices"][0]["message"]["content"] or ""
    except (KeyError, IndexError, TypeError) as exc:
        raise ParseError(f"unexpected completion shape: {exc}") from exc


def request_verdict(
    judge: JudgeConfig,
    prompt: PromptPair,
    client: httpx.Client | None = None,
    strict: bool = False,
) -> VerdictAttempt:
    """Call one judge until a verdict validates, retrying per config.

    Raises JudgeUnavailable when no attempt ever produced an HTTP response,
    VerdictRejected when responses arrived but none validated; both carry
    the per-attempt transcripts for audit.
    """
    own_client = client is None
    http = client or httpx.Client(timeout=judge.timeout)
    transcripts: list[dict] = []
    got_response = False
    try:
        total = judge.max_retries + 1
        for attempt in range(1, total + 1):
            body = _chat_body(judge, prompt, corrective=attempt > 1)
            entry: dict = {"attempt": attempt, "request": body}
            try:
                response = http.post(judge.endpoint, json=body,
                                     headers=judge.headers(), timeout=judge.timeout)
            except httpx.HTTPError as exc:
                entry["transport_error"] = repr(exc)
                transcripts.append(entry)
                logger.warning("judge %s attempt %d transport error: %r",
                               judge.name, attempt, exc)
                continue
            got_response = True
            entry["status"] = response.status_code
            if response.status_code != 200:
                entry["body"] = response.text[:2000]
                transcripts.append(entry)
                continue
            try:
                content = _extract_content(response.json())
            except (ParseError, ValueError) as exc:
                entry["error"] = f"bad completion payload: {exc}"
                transcripts.append(entry)
                continue
            entry["content"] = content
            try:
                verdict = validate_verdict(content, strict=strict)
            except (ParseError, SchemaError) as exc:
                entry["error"] = f"verdict rejected: {exc}"
                transcripts.append(entry)
                continue
            transcripts.append(entry)
            return VerdictAttempt(verdict=verdict, attempts=attempt,
                                  transcripts=transcripts)
    finally:
        if own_client:
            http.close()
    if not got_response:
        raise JudgeUnavailable(
            f"judge {judge.name} unreachable after {judge.max_retries + 1} attempts",
            transcripts,
        )
    raise VerdictRejected(
        f"judge {judge.name} produced no valid verdict in {judge.max_retries + 1} attempts",
        transcripts,
    )


@dataclass
class RunSummary:
    total: int = 0
    skipped: int = 0
    completed: int = 0
    failed: int = 0
    requested: int = 0  # triples dispatched this run


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_evaluation(
    cases: Sequence[CaseRecord],
    responses: ResponseSet,
    judges: Sequence[JudgeConfig],
    store: VerdictStore,
    template: PromptTemplate = PromptTemplate(),
    emit: Callable[[VerdictRecord], None] | None = None,
    progress: Callable[[int, int], None] | None = None,
    max_requests: int | None = None,
    cancel: threading.Event | None = None,
) -> RunSummary:
    """Evaluate every (case, model, judge) triple not already in the store.

    Completed triples (verdict or recorded failure) are never re-requested;
    partial progress therefore survives interruption and reruns only issue
    the missing requests. ``max_requests`` caps how many triples this call
    dispatches (a cost budget); ``cancel`` stops dispatching new work.
    Results flow through ``emit`` (default: store.put) under a single lock.
    """
    if not judges:
        raise PreconditionViolation("at least one judge is required")
    names = [j.name for j in judges]
    if len(set(names)) != len(names):
        raise PreconditionViolation("judge names must be unique")
    case_ids = {c.id for c in cases}
    for (case_id, _model), _text in responses.items():
        if case_id not in case_ids:
            raise PreconditionViolation(f"response for unknown case {case_id!r}")

    sink = emit or store.put
    sink_lock = threading.Lock()
    semaphores = {j.name: threading.Semaphore(j.max_in_flight) for j in judges}
    clients = {j.name: httpx.Client(timeout=j.timeout) for j in judges}
    case_by_id = {c.id: c for c in cases}

    work: list[tuple[str, str, str]] = []
    summary = RunSummary()
    for case in sorted(cases, key=lambda c: c.id):
        for model in responses.models():
            if responses.get(case.id, model) is None:
                continue
            for judge in judges:
                key = (case.id, model, judge.name)
                summary.total += 1
                if store.has(key):
                    summary.skipped += 1
                else:
                    work.append(key)

    budget_lock = threading.Lock()
    remaining = [max_requests if max_requests is not None else len(work)]
    judge_by_name = {j.name: j for j in judges}
    done_count = [0]

    def evaluate(key: tuple[str, str, str]) -> None:
        case_id, model, judge_name = key
        judge = judge_by_name[judge_name]
        case = case_by_id[case_id]
        prompt = build_judge_prompt(case.label.raw, responses.get(case_id, model), template)
        record = VerdictRecord(case_id=case_id, model=model, judge=judge_name,
                               doctor=case.doctor, status="failed", ts=_now())
        with semaphores[judge_name]:
            try:
                attempt = request_verdict(judge, prompt, client=clients[judge_name])
                record.status = "ok"
                record.document = attempt.verdict.to_document()
                record.attempts = attempt.attempts
            except (JudgeUnavailable, VerdictRejected) as exc:
                record.error = str(exc)
                record.attempts = len(exc.transcripts)
        with sink_lock:
            sink(record)
            if record.status == "ok":
                summary.completed += 1
            else:
                summary.failed += 1
            done_count[0] += 1
            if progress is not None:
                progress(done_count[0], len(work))

    max_workers = max(1, sum(j.max_in_flight for j in judges))
    try:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = []
            for key in work:
                if cancel is not None and cancel.is_set():
                    break
                with budget_lock:
                    if remaining[0] <= 0:
                        break
                    remaining[0] -= 1
                summary.requested += 1
                futures.append(pool.submit(evaluate, key))
            for future in futures:
                future.result()
    finally:
        for client in clients.values():
            client.close()
    return summary
