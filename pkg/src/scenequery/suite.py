"""Evaluation suites on disk and in memory.

A suite directory holds ``suite.meta`` (key=value lines, including the
ordered scene list) and one subdirectory per scene containing
``storyline_NNN.xml`` files. Each storyline file wraps its queries in
``<step>`` elements pairing the canonical query document with its
``<ground-truth>``; the server strips ground truth before serving.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .ontology import Ontology
from .query_model import (
    Answer,
    BoolAnswer,
    IntervalAnswer,
    LabelAnswer,
    PolygonAnswer,
    Query,
    QueryXmlError,
    UnableAnswer,
    ANSWER_KIND,
    _Node,
    answer_kind,
    parse_query_node,
    query_labels,
    query_to_node,
    render_element,
    well_formed,
)


class SuiteError(ValueError):
    """Malformed or inconsistent suite documents."""


@dataclass(frozen=True)
class SuiteQuery:
    query: Query
    truth: Answer

    @property
    def query_id(self) -> str:
        return self.query.id

    @property
    def is_definition(self) -> bool:
        return self.query.kind == "definition"

    @property
    def labels_required(self) -> frozenset[str]:
        return query_labels(self.query)


@dataclass
class StoryLine:
    storyline_id: str
    queries: list[SuiteQuery] = field(default_factory=list)


@dataclass
class SceneBlock:
    scene_id: str
    storylines: list[StoryLine] = field(default_factory=list)


@dataclass
class EvaluationSuite:
    suite_id: str
    scenes: list[SceneBlock] = field(default_factory=list)
    meta: dict[str, str] = field(default_factory=dict)

    def iter_queries(self) -> Iterator[tuple[str, str, SuiteQuery]]:
        for scene in self.scenes:
            for sl in scene.storylines:
                for sq in sl.queries:
                    yield scene.scene_id, sl.storyline_id, sq

    def query_count(self) -> int:
        return sum(1 for _ in self.iter_queries())

    def storyline_count(self) -> int:
        return sum(len(s.storylines) for s in self.scenes)


# --------------------------------------------------------------------------
# ground-truth XML
# --------------------------------------------------------------------------


def answer_to_node(a: Answer) -> _Node:
    node = _Node("ground-truth")
    kind = answer_kind(a)
    node.attrs["type"] = kind
    if isinstance(a, BoolAnswer):
        node.attrs["value"] = "true" if a.value else "false"
    elif isinstance(a, LabelAnswer):
        node.attrs["value"] = a.label
    elif isinstance(a, IntervalAnswer):
        node.attrs["start"] = repr(float(a.start))
        node.attrs["end"] = repr(float(a.end))
    elif isinstance(a, PolygonAnswer):
        node.attrs["points"] = ";".join(
            f"{repr(float(x))},{repr(float(y))}" for x, y in a.points
        )
    return node


def answer_from_node(el: ET.Element) -> Answer:
    kind = el.get("type")
    if kind == "bool":
        raw = el.get("value")
        if raw not in ("true", "false"):
            raise SuiteError(f"bad bool ground truth {raw!r}")
        return BoolAnswer(raw == "true")
    if kind == "unable":
        return UnableAnswer()
    if kind == "label":
        value = el.get("value")
        if not value:
            raise SuiteError("label ground truth requires value")
        return LabelAnswer(value)
    if kind == "interval":
        try:
            return IntervalAnswer(float(el.get("start", "")), float(el.get("end", "")))
        except ValueError as exc:
            raise SuiteError(f"bad interval ground truth: {exc}") from None
    if kind == "polygon":
        pts = []
        for chunk in (el.get("points") or "").split(";"):
            if not chunk:
                continue
            xy = chunk.split(",")
            if len(xy) != 2:
                raise SuiteError(f"bad polygon vertex {chunk!r}")
            pts.append((float(xy[0]), float(xy[1])))
        try:
            return PolygonAnswer(tuple(pts))
        except ValueError as exc:
            raise SuiteError(str(exc)) from None
    raise SuiteError(f"unknown ground truth type {kind!r}")


# --------------------------------------------------------------------------
# storyline files
# --------------------------------------------------------------------------


def storyline_to_xml(scene_id: str, sl: StoryLine) -> str:
    root = _Node("storyline", {"id": sl.storyline_id, "scene": scene_id})
    for sq in sl.queries:
        step = _Node("step")
        step.children.append(query_to_node(sq.query))
        step.children.append(answer_to_node(sq.truth))
        root.children.append(step)
    return render_element(root) + "\n"


def storyline_from_xml(text: str) -> tuple[str, StoryLine]:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise SuiteError(f"malformed storyline XML: {exc}") from None
    if root.tag != "storyline":
        raise SuiteError(f"expected <storyline>, got <{root.tag}>")
    sl = StoryLine(storyline_id=root.get("id", ""))
    scene_id = root.get("scene", "")
    for step in root:
        if step.tag != "step":
            raise SuiteError(f"expected <step>, got <{step.tag}>")
        query_el = None
        truth_el = None
        for child in step:
            if child.tag == "ground-truth":
                truth_el = child
            else:
                query_el = child
        if query_el is None or truth_el is None:
            raise SuiteError("each <step> needs a query and a <ground-truth>")
        try:
            query = parse_query_node(query_el)
        except QueryXmlError as exc:
            raise SuiteError(str(exc)) from None
        sl.queries.append(SuiteQuery(query=query, truth=answer_from_node(truth_el)))
    return scene_id, sl


# --------------------------------------------------------------------------
# suite directories
# --------------------------------------------------------------------------


def write_meta(path: Path, meta: dict[str, str]) -> None:
    lines = [f"{k}={meta[k]}" for k in sorted(meta)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_suite(suite: EvaluationSuite, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = dict(suite.meta)
    meta["suite_id"] = suite.suite_id
    meta["scenes"] = ",".join(scene.scene_id for scene in suite.scenes)
    write_meta(out / "suite.meta", meta)
    for scene in suite.scenes:
        scene_dir = out / scene.scene_id
        scene_dir.mkdir(parents=True, exist_ok=True)
        for i, sl in enumerate(scene.storylines):
            path = scene_dir / f"storyline_{i:03d}.xml"
            path.write_text(storyline_to_xml(scene.scene_id, sl), encoding="utf-8")


def load_suite(suite_dir: str | Path, ont: Ontology | None = None) -> EvaluationSuite:
    suite_dir = Path(suite_dir)
    meta_path = suite_dir / "suite.meta"
    if not meta_path.exists():
        raise SuiteError(f"missing suite.meta in {suite_dir}")
    meta: dict[str, str] = {}
    for raw in meta_path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        meta[key.strip()] = val.strip()
    suite = EvaluationSuite(
        suite_id=meta.get("suite_id", suite_dir.name), meta=meta
    )
    scene_ids = [s for s in meta.get("scenes", "").split(",") if s]
    if not scene_ids:
        raise SuiteError("suite.meta must list scenes")
    for scene_id in scene_ids:
        scene_dir = suite_dir / scene_id
        if not scene_dir.is_dir():
            raise SuiteError(f"missing scene directory {scene_id!r}")
        block = SceneBlock(scene_id=scene_id)
        for path in sorted(scene_dir.glob("storyline_*.xml")):
            file_scene, sl = storyline_from_xml(path.read_text(encoding="utf-8"))
            if file_scene and file_scene != scene_id:
                raise SuiteError(
                    f"{path.name}: scene {file_scene!r} does not match directory"
                )
            block.storylines.append(sl)
        suite.scenes.append(block)
    if ont is not None:
        problems = validate_suite(suite, ont)
        if problems:
            raise SuiteError("; ".join(problems[:5]))
    return suite


def validate_suite(suite: EvaluationSuite, ont: Ontology) -> list[str]:
    """Structural checks: label ordering within story lines, ground-truth kind
    agreement, and per-query well-formedness."""
    problems: list[str] = []
    seen_ids: set[str] = set()
    for scene in suite.scenes:
        for sl in scene.storylines:
            available: set[str] = set()
            for sq in sl.queries:
                q = sq.query
                if q.id in seen_ids:
                    problems.append(f"duplicate query id {q.id!r}")
                seen_ids.add(q.id)
                expected = ANSWER_KIND[q.kind]
                if answer_kind(sq.truth) != expected:
                    problems.append(
                        f"{q.id}: ground truth kind {answer_kind(sq.truth)!r},"
                        f" expected {expected!r}"
                    )
                missing = sq.labels_required - available
                if missing:
                    problems.append(
                        f"{q.id}: labels {sorted(missing)} not defined earlier"
                    )
                for v in well_formed(q, ont, frozenset(available)):
                    problems.append(f"{q.id}: {v}")
                if q.kind == "definition" and q.defines_label:
                    available.add(q.defines_label)
    return problems


def suite_predicate_stats(suite: EvaluationSuite, ont: Ontology) -> dict[str, int]:
    """Occurrence counts of object predicates across all query bodies."""
    counts: dict[str, int] = {}
    from .query_model import iter_atoms

    for _, _, sq in suite.iter_queries():
        for atom in iter_atoms(sq.query.body):
            pred = ont.get(atom.pred)
            if pred is not None and pred.category == "object":
                counts[atom.pred] = counts.get(atom.pred, 0) + 1
    return counts
