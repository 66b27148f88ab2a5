"""Gated evaluation server: session lifecycle, story-line gating, answer
immutability, ground-truth feedback, and scoring.

Protocol (HTTP/1.1, JSON bodies; query payloads embed canonical query XML):

    POST /v1/sessions {"suite_id": ...}            -> 201 {"session_id": ...}
    GET  /v1/sessions/{id}/next                    -> 200 item | 409 pending
    POST /v1/sessions/{id}/answers {...}           -> 200 verdict | 409 | 422
    GET  /v1/sessions/{id}/score                   -> 200 score report

A query becomes available only after every earlier query in its story line
(and every earlier story line) is finished. Queries that reference a label
whose definition failed are skipped and excluded from scoring. Submitted
answers are immutable; the correct answer is returned with every verdict.
"""

from __future__ import annotations

import json
import re
import secrets
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .config import HarnessConfig
from .ontology import Ontology, default_ontology, load_ontology
from .query_model import (
    Answer,
    BoolAnswer,
    UnableAnswer,
    ANSWER_KIND,
    answer_from_jsonable,
    answer_kind,
    answer_to_jsonable,
    serialize_query_xml,
    unique_predicates,
)
from .scoring import (
    AnswerRecord,
    GradingConfig,
    ScoreReport,
    compute_report,
    grade_answer,
)
from .suite import EvaluationSuite, SuiteQuery, load_suite


class ProtocolViolation(Exception):
    """Maps to an HTTP error; `code` is a stable machine-readable token."""

    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def grading_for_suite(base: GradingConfig, suite: EvaluationSuite) -> GradingConfig:
    """Server-wide grading defaults, overridable per suite via suite.meta."""
    from dataclasses import replace

    grading = base
    if suite.meta.get("grading.lenient_labels") in ("true", "1"):
        grading = replace(grading, lenient_labels=True)
    for key in ("when_iou", "where_iou"):
        raw = suite.meta.get(f"grading.{key}")
        if raw is not None:
            grading = replace(grading, **{key: float(raw)})
    return grading


def _categories_of(sq: SuiteQuery, ont: Ontology) -> frozenset[str]:
    cats = set()
    for name in unique_predicates(sq.query.body):
        pred = ont.get(name)
        if pred is not None:
            cats.add(pred.category)
    return frozenset(cats)


class Session:
    """One evaluation session; all calls are serialized by an internal lock."""

    def __init__(
        self,
        session_id: str,
        suite: EvaluationSuite,
        ont: Ontology,
        grading: GradingConfig,
        log_path: Optional[Path] = None,
    ) -> None:
        self.session_id = session_id
        self.suite = suite
        self.ont = ont
        self.grading = grading
        self.lock = threading.RLock()
        self.scene_i = 0
        self.sl_i = 0
        self.q_i = 0
        self._scene_announced = False
        self._sl_announced = False
        self.pending: Optional[SuiteQuery] = None
        self.answered: dict[str, Answer] = {}
        self.skipped: set[str] = set()
        self.records: list[AnswerRecord] = []
        self._available: set[str] = set()
        self._failed: set[str] = set()
        self._log_path = log_path
        if log_path is not None:
            log_path.parent.mkdir(parents=True, exist_ok=True)
            self._log_event(
                {"event": "session", "session_id": session_id, "suite_id": suite.suite_id}
            )

    def _log_event(self, obj: dict) -> None:
        if self._log_path is not None:
            with self._log_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(obj, sort_keys=True) + "\n")

    # -- cursor ---------------------------------------------------------------

    def next_item(self) -> dict:
        with self.lock:
            if self.pending is not None:
                raise ProtocolViolation(
                    409, "pending_answer_required",
                    f"query {self.pending.query_id} is awaiting an answer",
                )
            skipped_now: list[str] = []
            while True:
                if self.scene_i >= len(self.suite.scenes):
                    return {"kind": "done"}
                scene = self.suite.scenes[self.scene_i]
                if not self._scene_announced:
                    self._scene_announced = True
                    return {"kind": "scene_start", "scene": scene.scene_id}
                if self.sl_i >= len(scene.storylines):
                    self.scene_i += 1
                    self.sl_i = 0
                    self.q_i = 0
                    self._scene_announced = False
                    continue
                sl = scene.storylines[self.sl_i]
                if not self._sl_announced:
                    self._sl_announced = True
                    self._available = set()
                    self._failed = set()
                    return {
                        "kind": "storyline_start",
                        "scene": scene.scene_id,
                        "storyline": sl.storyline_id,
                    }
                if self.q_i >= len(sl.queries):
                    self.sl_i += 1
                    self.q_i = 0
                    self._sl_announced = False
                    continue
                sq = sl.queries[self.q_i]
                if sq.labels_required & self._failed:
                    self.skipped.add(sq.query_id)
                    skipped_now.append(sq.query_id)
                    self.q_i += 1
                    continue
                self.pending = sq
                return {
                    "kind": "query",
                    "scene": scene.scene_id,
                    "storyline": sl.storyline_id,
                    "query_id": sq.query_id,
                    "query_xml": serialize_query_xml(sq.query),
                    "skipped": skipped_now,
                }

    def submit(self, query_id: str, submitted: Answer) -> tuple[str, Answer]:
        with self.lock:
            if query_id in self.answered:
                raise ProtocolViolation(
                    409, "already_answered", f"query {query_id} was already answered"
                )
            if self.pending is None:
                raise ProtocolViolation(409, "no_pending_query", "no query is pending")
            sq = self.pending
            if query_id != sq.query_id:
                raise ProtocolViolation(
                    409, "query_id_mismatch",
                    f"pending query is {sq.query_id}, not {query_id}",
                )
            expected = ANSWER_KIND[sq.query.kind]
            got = answer_kind(submitted)
            if got not in (expected, "unable"):
                raise ProtocolViolation(
                    422, "answer_kind_mismatch",
                    f"{sq.query.kind} query takes a {expected} answer, got {got}",
                )
            verdict = grade_answer(sq.truth, submitted, self.ont, self.grading)
            truth_bool = (
                sq.truth.value if isinstance(sq.truth, BoolAnswer) else None
            )
            if sq.is_definition and sq.query.defines_label:
                claimed = isinstance(submitted, BoolAnswer) and submitted.value
                if truth_bool and claimed:
                    self._available.add(sq.query.defines_label)
                else:
                    self._failed.add(sq.query.defines_label)
            self.answered[query_id] = submitted
            self.records.append(
                AnswerRecord(
                    query_id=query_id,
                    is_definition=sq.is_definition,
                    truth_is_true=truth_bool if sq.is_definition else None,
                    responded=not isinstance(submitted, UnableAnswer),
                    verdict=verdict,
                    pred_count=len(unique_predicates(sq.query.body)),
                    categories=_categories_of(sq, self.ont),
                )
            )
            self.pending = None
            self.q_i += 1
            self._log_event(
                {
                    "event": "answer",
                    "query_id": query_id,
                    "answer": answer_to_jsonable(submitted),
                    "verdict": verdict,
                }
            )
            return verdict, sq.truth

    def score(self) -> ScoreReport:
        with self.lock:
            return compute_report(self.records)


class EvaluationService:
    """Suites plus live sessions; the HTTP handler delegates here."""

    def __init__(self, config: HarnessConfig) -> None:
        self.config = config
        self.ontology = (
            load_ontology(config.ontology_path)
            if config.ontology_path
            else default_ontology()
        )
        self.suites: dict[str, EvaluationSuite] = {}
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        if config.suite_dir:
            root = Path(config.suite_dir)
            for entry in sorted(root.iterdir()) if root.is_dir() else []:
                if entry.is_dir() and (entry / "suite.meta").exists():
                    suite = load_suite(entry, self.ontology)
                    self.suites[suite.suite_id] = suite
        if config.session_log_dir:
            self._restore_sessions(Path(config.session_log_dir))

    def _restore_sessions(self, log_dir: Path) -> None:
        """Rebuild live sessions from their append-only logs so a restarted
        server keeps every immutability and gating guarantee."""
        if not log_dir.is_dir():
            return
        for log_path in sorted(log_dir.glob("*.jsonl")):
            try:
                session = self._rehydrate(log_path)
            except (ValueError, KeyError, ProtocolViolation):
                continue  # foreign or truncated log; leave it untouched
            if session is not None:
                self.sessions[session.session_id] = session

    def _rehydrate(self, log_path: Path) -> Optional[Session]:
        suite_id = None
        session_id = None
        answers: list[tuple[str, Answer]] = []
        for raw in log_path.read_text(encoding="utf-8").splitlines():
            if not raw.strip():
                continue
            obj = json.loads(raw)
            if obj.get("event") == "session":
                suite_id = obj.get("suite_id")
                session_id = obj.get("session_id")
            elif obj.get("event") == "answer":
                answers.append(
                    (obj["query_id"], answer_from_jsonable(obj["answer"]))
                )
        if suite_id not in self.suites or not session_id:
            return None
        suite = self.suites[suite_id]
        session = Session(
            session_id, suite, self.ontology, self._suite_grading(suite), None
        )
        by_id = dict(answers)
        replayed = 0
        while replayed < len(answers):
            item = session.next_item()
            if item["kind"] == "done":
                break
            if item["kind"] != "query":
                continue
            if item["query_id"] not in by_id:
                break
            session.submit(item["query_id"], by_id[item["query_id"]])
            replayed += 1
        session._log_path = log_path  # continue appending, header already present
        return session

    def add_suite(self, suite: EvaluationSuite) -> None:
        self.suites[suite.suite_id] = suite

    def create_session(self, suite_id: str) -> Session:
        suite = self.suites.get(suite_id)
        if suite is None:
            raise ProtocolViolation(404, "unknown_suite", f"no suite {suite_id!r}")
        session_id = secrets.token_hex(16)
        grading = self._suite_grading(suite)
        log_path = None
        if self.config.session_log_dir:
            log_path = Path(self.config.session_log_dir) / f"{session_id}.jsonl"
        session = Session(session_id, suite, self.ontology, grading, log_path)
        with self._lock:
            self.sessions[session_id] = session
        return session

    def _suite_grading(self, suite: EvaluationSuite) -> GradingConfig:
        return grading_for_suite(self.config.grading, suite)

    def session(self, session_id: str) -> Session:
        with self._lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise ProtocolViolation(404, "unknown_session", f"no session {session_id!r}")
        return session


# --------------------------------------------------------------------------
# HTTP layer
# --------------------------------------------------------------------------

_SESSION_PATH = re.compile(r"^/v1/sessions/([0-9a-f]+)/(next|answers|score)$")


class _Handler(BaseHTTPRequestHandler):
    service: EvaluationService  # set by server factory
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt: str, *args) -> None:  # quiet by default
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            obj = json.loads(raw.decode("utf-8")) if raw else {}
        except (ValueError, UnicodeDecodeError):
            raise ProtocolViolation(400, "bad_json", "request body is not valid JSON")
        if not isinstance(obj, dict):
            raise ProtocolViolation(400, "bad_json", "request body must be an object")
        return obj

    def _dispatch(self, method: str) -> None:
        try:
            if method == "POST" and self.path == "/v1/sessions":
                body = self._read_json()
                suite_id = body.get("suite_id")
                if not isinstance(suite_id, str):
                    raise ProtocolViolation(400, "bad_request", "suite_id required")
                session = self.service.create_session(suite_id)
                self._send(201, {"session_id": session.session_id})
                return
            m = _SESSION_PATH.match(self.path)
            if m is None:
                raise ProtocolViolation(404, "not_found", f"no route {self.path}")
            session = self.service.session(m.group(1))
            action = m.group(2)
            if method == "GET" and action == "next":
                self._send(200, session.next_item())
            elif method == "POST" and action == "answers":
                body = self._read_json()
                query_id = body.get("query_id")
                if not isinstance(query_id, str):
                    raise ProtocolViolation(400, "bad_request", "query_id required")
                try:
                    submitted = answer_from_jsonable(body.get("answer"))
                except ValueError as exc:
                    raise ProtocolViolation(400, "bad_answer", str(exc)) from None
                verdict, truth = session.submit(query_id, submitted)
                self._send(
                    200,
                    {"verdict": verdict, "ground_truth": answer_to_jsonable(truth)},
                )
            elif method == "GET" and action == "score":
                self._send(200, session.score().to_jsonable())
            else:
                raise ProtocolViolation(405, "method_not_allowed", method)
        except ProtocolViolation as exc:
            self._send(exc.status, {"error": exc.code, "message": exc.message})

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")


def make_server(service: EvaluationService) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"service": service})
    httpd = ThreadingHTTPServer((service.config.host, service.config.port), handler)
    return httpd


def serve_forever(config: HarnessConfig) -> None:
    service = EvaluationService(config)
    httpd = make_server(service)
    host, port = httpd.server_address[:2]
    print(f"listening on {host}:{port} with {len(service.suites)} suite(s)", flush=True)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()


# --------------------------------------------------------------------------
# session-log replay
# --------------------------------------------------------------------------


def replay_session_log(
    log_path: str | Path,
    suites: dict[str, EvaluationSuite],
    ont: Ontology,
    grading: GradingConfig,
) -> ScoreReport:
    """Re-drive a fresh session from a JSONL answer log; serving order is
    deterministic, so the resulting report matches the live session's."""
    answers: dict[str, Answer] = {}
    suite_id: Optional[str] = None
    for raw in Path(log_path).read_text(encoding="utf-8").splitlines():
        if not raw.strip():
            continue
        obj = json.loads(raw)
        if obj.get("event") == "session":
            suite_id = obj.get("suite_id")
        elif obj.get("event") == "answer":
            answers[obj["query_id"]] = answer_from_jsonable(obj["answer"])
    if suite_id is None or suite_id not in suites:
        raise ValueError(f"log references unknown suite {suite_id!r}")
    suite = suites[suite_id]
    session = Session(
        "replay", suite, ont, grading_for_suite(grading, suite), log_path=None
    )
    while True:
        item = session.next_item()
        if item["kind"] == "done":
            break
        if item["kind"] != "query":
            continue
        qid = item["query_id"]
        if qid not in answers:
            break  # partial session: score the answered prefix
        session.submit(qid, answers[qid])
    return session.score()
