"""Session client for the evaluation server.

One outstanding query at a time, mirroring the server contract: iterate
queries, answer each before advancing, collect the score at the end. The
client performs no local evaluation and applies no retry policy beyond a
configurable request timeout.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .qxml import parse_query


class ClientError(RuntimeError):
    """Transport failure (connection refused, timeout, bad payload)."""


class ServerError(RuntimeError):
    """Non-2xx response; carries the HTTP status and machine-readable code."""

    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(f"{status} {code}: {message}")
        self.status = status
        self.code = code
        self.message = message


class ProtocolOrderError(ServerError):
    """The request violated the one-outstanding-query protocol order."""


_ORDER_CODES = {
    "pending_answer_required",
    "no_pending_query",
    "query_id_mismatch",
    "already_answered",
}


def bool_answer(value: bool) -> dict:
    return {"type": "bool", "value": bool(value)}


def unable_answer() -> dict:
    return {"type": "unable"}


def label_answer(label: str) -> dict:
    return {"type": "label", "value": label}


def interval_answer(start: float, end: float) -> dict:
    return {"type": "interval", "value": [start, end]}


def polygon_answer(points) -> dict:
    return {"type": "polygon", "value": [[x, y] for x, y in points]}


@dataclass
class QueryItem:
    query_id: str
    kind: str
    scene: Optional[str]
    storyline: Optional[str]
    xml: str
    ast: dict
    skipped_before: tuple[str, ...] = ()


@dataclass
class RemoteSession:
    base_url: str
    session_id: str
    timeout: float = 30.0
    scene: Optional[str] = None
    storyline: Optional[str] = None
    last_ground_truth: Optional[dict] = None
    done: bool = False
    _pending: Optional[str] = field(default=None, repr=False)

    def _request(self, method: str, path: str, payload: Optional[dict] = None) -> dict:
        return _request(self.base_url, method, path, payload, self.timeout)

    def queries(self) -> Iterator[QueryItem]:
        """Yield queries until the suite is exhausted.

        Every yielded query must be answered before the iterator advances;
        pulling the next item with an answer outstanding raises
        ProtocolOrderError without touching the server.
        """
        while not self.done:
            if self._pending is not None:
                raise ProtocolOrderError(
                    409, "pending_answer_required",
                    f"answer query {self._pending} before requesting the next",
                )
            item = self._request("GET", f"/v1/sessions/{self.session_id}/next")
            kind = item.get("kind")
            if kind == "done":
                self.done = True
                return
            if kind == "scene_start":
                self.scene = item.get("scene")
                continue
            if kind == "storyline_start":
                self.scene = item.get("scene", self.scene)
                self.storyline = item.get("storyline")
                continue
            ast = parse_query(item["query_xml"])
            self._pending = item["query_id"]
            yield QueryItem(
                query_id=item["query_id"],
                kind=ast["kind"],
                scene=item.get("scene", self.scene),
                storyline=item.get("storyline", self.storyline),
                xml=item["query_xml"],
                ast=ast,
                skipped_before=tuple(item.get("skipped", ())),
            )

    def answer(self, query_id: str, answer: dict) -> tuple[str, dict]:
        """Submit an answer for the pending query; returns (verdict, truth)."""
        body = self._request(
            "POST",
            f"/v1/sessions/{self.session_id}/answers",
            {"query_id": query_id, "answer": answer},
        )
        if self._pending == query_id:
            self._pending = None
        self.last_ground_truth = body.get("ground_truth")
        return body["verdict"], body["ground_truth"]

    def score(self) -> dict:
        return self._request("GET", f"/v1/sessions/{self.session_id}/score")


def _request(
    base_url: str, method: str, path: str, payload: Optional[dict], timeout: float
) -> dict:
    url = base_url.rstrip("/") + path
    data = json.dumps(payload).encode("utf-8") if payload is not None else None
    headers = {"Accept": "application/json"}
    if data is not None:
        headers["Content-Type"] = "application/json"
    req = urllib.request.Request(url, data=data, headers=headers, method=method)
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        try:
            body = json.loads(exc.read().decode("utf-8"))
        except Exception:
            body = {}
        code = body.get("error", "http_error")
        message = body.get("message", str(exc))
        if code in _ORDER_CODES:
            raise ProtocolOrderError(exc.code, code, message) from None
        raise ServerError(exc.code, code, message) from None
    except (urllib.error.URLError, OSError, TimeoutError, ValueError) as exc:
        raise ClientError(str(exc)) from None


def open_session(base_url: str, suite_id: str, timeout: float = 30.0) -> RemoteSession:
    """Create a fresh evaluation session on the server."""
    body = _request(base_url, "POST", "/v1/sessions", {"suite_id": suite_id}, timeout)
    return RemoteSession(
        base_url=base_url.rstrip("/"),
        session_id=body["session_id"],
        timeout=timeout,
    )
