"""Reference test-takers speaking the wire protocol end to end.

The oracle client answers every query by running the query engine over its
own copy of the ground-truth knowledge base; it defines the soundness bar for
the harness (a matching KB must score accuracy 1.0). The random client plays
the trivial strategy: claim every definition, flip a fair coin on polar
queries, decline everything else.
"""

from __future__ import annotations

import json
import random
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from .engine import EngineError, StoryContext, answer_query
from .geometry import DEFAULT_GEOMETRY, GeometryConfig
from .kb import KnowledgeBase
from .query_model import (
    Answer,
    BoolAnswer,
    UnableAnswer,
    answer_from_jsonable,
    answer_to_jsonable,
    parse_query_xml,
)
from .scoring import ScoreReport, report_from_jsonable


class ClientProtocolError(RuntimeError):
    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(f"{status} {code}: {message}")
        self.status = status
        self.code = code


class ClientNetworkError(RuntimeError):
    def __init__(self, message: str, session_id: Optional[str] = None) -> None:
        super().__init__(message)
        self.session_id = session_id


@dataclass(frozen=True)
class ClientRunSummary:
    session_id: str
    queries_served: int
    answered: int
    unable: int
    skipped_observed: int
    report: ScoreReport

    def __post_init__(self) -> None:
        if self.answered + self.unable != self.queries_served:
            raise ValueError("answered + unable must equal queries_served")


class HttpSession:
    """Minimal JSON-over-HTTP session against the evaluation server."""

    def __init__(self, base_url: str, timeout: float = 30.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session_id: Optional[str] = None

    def _request(self, method: str, path: str, payload: Optional[dict] = None) -> dict:
        url = f"{self.base_url}{path}"
        data = None
        headers = {"Accept": "application/json"}
        if payload is not None:
            data = json.dumps(payload).encode("utf-8")
            headers["Content-Type"] = "application/json"
        req = urllib.request.Request(url, data=data, headers=headers, method=method)
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            try:
                body = json.loads(exc.read().decode("utf-8"))
            except Exception:
                body = {}
            raise ClientProtocolError(
                exc.code, body.get("error", "http_error"), body.get("message", str(exc))
            ) from None
        except (urllib.error.URLError, OSError, TimeoutError) as exc:
            raise ClientNetworkError(str(exc), self.session_id) from None

    def open(self, suite_id: str) -> str:
        body = self._request("POST", "/v1/sessions", {"suite_id": suite_id})
        self.session_id = body["session_id"]
        return self.session_id

    def next_item(self) -> dict:
        return self._request("GET", f"/v1/sessions/{self.session_id}/next")

    def submit(self, query_id: str, answer: Answer) -> tuple[str, Answer]:
        body = self._request(
            "POST",
            f"/v1/sessions/{self.session_id}/answers",
            {"query_id": query_id, "answer": answer_to_jsonable(answer)},
        )
        return body["verdict"], answer_from_jsonable(body["ground_truth"])

    def score(self) -> ScoreReport:
        return report_from_jsonable(
            self._request("GET", f"/v1/sessions/{self.session_id}/score")
        )


def _drive(
    session: HttpSession,
    suite_id: str,
    answer_fn,
    on_storyline=None,
) -> tuple[ClientRunSummary, dict[str, Answer]]:
    session.open(suite_id)
    served = answered = unable = skipped = 0
    decisions: dict[str, Answer] = {}
    while True:
        item = session.next_item()
        kind = item["kind"]
        if kind == "done":
            break
        if kind == "storyline_start":
            if on_storyline is not None:
                on_storyline(item)
            continue
        if kind == "scene_start":
            continue
        served += 1
        skipped += len(item.get("skipped", ()))
        answer = answer_fn(item)
        decisions[item["query_id"]] = answer
        if isinstance(answer, UnableAnswer):
            unable += 1
        else:
            answered += 1
        session.submit(item["query_id"], answer)
    report = session.score()
    summary = ClientRunSummary(
        session_id=session.session_id or "",
        queries_served=served,
        answered=answered,
        unable=unable,
        skipped_observed=skipped,
        report=report,
    )
    return summary, decisions


def run_oracle(
    server_url: str,
    suite_id: str,
    kbs: Mapping[str, KnowledgeBase],
    geom: GeometryConfig = DEFAULT_GEOMETRY,
    decisions_out: Optional[str | Path] = None,
) -> ClientRunSummary:
    """Answer every query by evaluating it against the local ground-truth KB."""
    state: dict[str, object] = {"ctx": StoryContext(), "scene": None}

    def on_storyline(item: dict) -> None:
        state["ctx"] = StoryContext()
        state["scene"] = item.get("scene")

    def decide(item: dict) -> Answer:
        scene = item.get("scene") or state["scene"]
        kb = kbs.get(scene or "")
        if kb is None:
            return UnableAnswer()
        try:
            q = parse_query_xml(item["query_xml"])
            out = answer_query(kb, state["ctx"], q, geom)  # type: ignore[arg-type]
        except (EngineError, ValueError):
            return UnableAnswer()
        if out.is_value and out.answer is not None:
            return out.answer
        return UnableAnswer()

    session = HttpSession(server_url)
    summary, decisions = _drive(session, suite_id, decide, on_storyline)
    if decisions_out is not None:
        payload = {
            "suite_id": suite_id,
            "session_id": summary.session_id,
            "decisions": {
                qid: answer_to_jsonable(ans) for qid, ans in decisions.items()
            },
            "score_report": summary.report.to_jsonable(),
        }
        Path(decisions_out).write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return summary


def run_random(server_url: str, suite_id: str, seed: int = 0) -> ClientRunSummary:
    """Trivial baseline: true to definitions, a fair coin on polar queries,
    unable elsewhere."""
    rng = random.Random(seed)

    def decide(item: dict) -> Answer:
        try:
            q = parse_query_xml(item["query_xml"])
        except ValueError:
            return UnableAnswer()
        if q.kind == "definition":
            return BoolAnswer(True)
        if q.kind == "polar":
            return BoolAnswer(rng.random() < 0.5)
        return UnableAnswer()

    session = HttpSession(server_url)
    summary, _ = _drive(session, suite_id, decide)
    return summary
