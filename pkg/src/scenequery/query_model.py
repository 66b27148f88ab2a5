"""Query AST, well-formedness rules, answers, and the XML wire codec.

Queries are first-order sentences over the ontology's predicates with
conjunction/disjunction/negation, existential and universal quantifiers, and
counting comparisons. Atoms may carry a time (instant or interval) and a
location (point or box, view- or scene-centric).

The codec is canonical: 2-space indent, alphabetically ordered attributes,
UTF-8, LF line endings. ``parse_query_xml(serialize_query_xml(q)) == q`` and
re-serialization is byte-identical, so suites can be compared as text.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Iterator, Union

from .ontology import VALUE_SLOT, Ontology

KINDS = ("definition", "polar", "what", "when", "where")
COUNT_OPS = ("<", "<=", "=", ">=", ">")

_OP_TOKEN = {"<": "lt", "<=": "le", "=": "eq", ">=": "ge", ">": "gt"}
_TOKEN_OP = {v: k for k, v in _OP_TOKEN.items()}


class QueryXmlError(ValueError):
    """Malformed or structurally invalid query document."""


# --------------------------------------------------------------------------
# terms
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("variable name must be nonempty")


@dataclass(frozen=True)
class ContextRef:
    """A conversation label (p1, p2, ...) bound by an earlier definition."""

    label: str

    def __post_init__(self) -> None:
        if not self.label:
            raise ValueError("context label must be nonempty")


@dataclass(frozen=True)
class Literal:
    value: Union[str, int, float]


Term = Union[Var, ContextRef, Literal]


# --------------------------------------------------------------------------
# time and location modifiers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ViewFrame:
    camera_id: str
    frame: int

    def __post_init__(self) -> None:
        if self.frame < 0:
            raise ValueError("frame must be >= 0")


@dataclass(frozen=True)
class SceneTime:
    seconds: float


@dataclass(frozen=True)
class Interval:
    """A time span; both endpoints must be the same variant kind."""

    start: Union[ViewFrame, SceneTime]
    end: Union[ViewFrame, SceneTime]

    def __post_init__(self) -> None:
        if type(self.start) is not type(self.end):
            raise ValueError("interval endpoints must be the same kind")
        if isinstance(self.start, SceneTime):
            if self.start.seconds > self.end.seconds:
                raise ValueError("interval start must be <= end")
        else:
            if self.start.camera_id != self.end.camera_id:
                raise ValueError("view-centric interval endpoints must share a camera")
            if self.start.frame > self.end.frame:
                raise ValueError("interval start must be <= end")


TimeSpec = Union[ViewFrame, SceneTime, Interval]


@dataclass(frozen=True)
class ViewCentric:
    camera_id: str


@dataclass(frozen=True)
class SceneCentric:
    system_id: str


LocationRef = Union[ViewCentric, SceneCentric]


@dataclass(frozen=True)
class PointLocation:
    x: float
    y: float
    ref: LocationRef


@dataclass(frozen=True)
class BoxLocation:
    x1: float
    y1: float
    x2: float
    y2: float
    ref: LocationRef

    def __post_init__(self) -> None:
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError("box corners must satisfy x1<x2 and y1<y2")


LocationSpec = Union[PointLocation, BoxLocation]


# --------------------------------------------------------------------------
# formulas
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...]
    time: TimeSpec | None = None
    location: LocationSpec | None = None


@dataclass(frozen=True)
class And:
    children: tuple["Formula", ...]

    def __post_init__(self) -> None:
        if len(self.children) < 2:
            raise ValueError("and requires at least 2 children")


@dataclass(frozen=True)
class Or:
    children: tuple["Formula", ...]

    def __post_init__(self) -> None:
        if len(self.children) < 2:
            raise ValueError("or requires at least 2 children")


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    child: "Formula"


@dataclass(frozen=True)
class ForAll:
    var: str
    child: "Formula"


@dataclass(frozen=True)
class CountCmp:
    """Counting comparison: |{x : child}| op rhs."""

    var: str
    child: "Formula"
    op: str
    rhs: int

    def __post_init__(self) -> None:
        if self.op not in COUNT_OPS:
            raise ValueError(f"bad count operator {self.op!r}")
        if self.rhs < 0:
            raise ValueError("count rhs must be >= 0")


Formula = Union[Atom, And, Or, Not, Exists, ForAll, CountCmp]


@dataclass(frozen=True)
class Query:
    id: str
    kind: str
    body: Formula
    target: str | None = None
    defines_label: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"bad query kind {self.kind!r}")


# --------------------------------------------------------------------------
# answers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BoolAnswer:
    value: bool


@dataclass(frozen=True)
class UnableAnswer:
    pass


@dataclass(frozen=True)
class LabelAnswer:
    label: str


@dataclass(frozen=True)
class IntervalAnswer:
    start: float
    end: float

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError("interval start must be <= end")


@dataclass(frozen=True)
class PolygonAnswer:
    """Scene-centric polygon, >= 3 vertices."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.points) < 3:
            raise ValueError("polygon requires at least 3 points")


Answer = Union[BoolAnswer, UnableAnswer, LabelAnswer, IntervalAnswer, PolygonAnswer]

# Answer kind expected for each query kind.
ANSWER_KIND = {
    "definition": "bool",
    "polar": "bool",
    "what": "label",
    "when": "interval",
    "where": "polygon",
}


def answer_to_jsonable(a: Answer) -> dict:
    if isinstance(a, BoolAnswer):
        return {"type": "bool", "value": a.value}
    if isinstance(a, UnableAnswer):
        return {"type": "unable"}
    if isinstance(a, LabelAnswer):
        return {"type": "label", "value": a.label}
    if isinstance(a, IntervalAnswer):
        return {"type": "interval", "value": [a.start, a.end]}
    if isinstance(a, PolygonAnswer):
        return {"type": "polygon", "value": [[x, y] for x, y in a.points]}
    raise TypeError(f"not an answer: {a!r}")


def answer_from_jsonable(obj: object) -> Answer:
    if not isinstance(obj, dict) or "type" not in obj:
        raise ValueError("answer must be an object with a 'type' field")
    kind = obj["type"]
    value = obj.get("value")
    if kind == "bool":
        if not isinstance(value, bool):
            raise ValueError("bool answer requires a boolean value")
        return BoolAnswer(value)
    if kind == "unable":
        return UnableAnswer()
    if kind == "label":
        if not isinstance(value, str) or not value:
            raise ValueError("label answer requires a nonempty string value")
        return LabelAnswer(value)
    if kind == "interval":
        if (
            not isinstance(value, (list, tuple))
            or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        ):
            raise ValueError("interval answer requires [start, end]")
        return IntervalAnswer(float(value[0]), float(value[1]))
    if kind == "polygon":
        if not isinstance(value, (list, tuple)):
            raise ValueError("polygon answer requires a point list")
        pts = []
        for p in value:
            if not isinstance(p, (list, tuple)) or len(p) != 2:
                raise ValueError("polygon points must be [x, y] pairs")
            pts.append((float(p[0]), float(p[1])))
        return PolygonAnswer(tuple(pts))
    raise ValueError(f"unknown answer type {kind!r}")


def answer_kind(a: Answer) -> str:
    return answer_to_jsonable(a)["type"]


# --------------------------------------------------------------------------
# structural queries over formulas
# --------------------------------------------------------------------------


def iter_atoms(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, (And, Or)):
        for c in f.children:
            yield from iter_atoms(c)
    elif isinstance(f, Not):
        yield from iter_atoms(f.child)
    elif isinstance(f, (Exists, ForAll, CountCmp)):
        yield from iter_atoms(f.child)


def free_vars(f: Formula) -> frozenset[str]:
    """Variables not bound by an enclosing quantifier. ContextRefs are never free."""
    if isinstance(f, Atom):
        return frozenset(t.name for t in f.args if isinstance(t, Var))
    if isinstance(f, (And, Or)):
        out: frozenset[str] = frozenset()
        for c in f.children:
            out |= free_vars(c)
        return out
    if isinstance(f, Not):
        return free_vars(f.child)
    if isinstance(f, (Exists, ForAll, CountCmp)):
        return free_vars(f.child) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def referenced_labels(f: Formula) -> frozenset[str]:
    out: set[str] = set()
    for atom in iter_atoms(f):
        for t in atom.args:
            if isinstance(t, ContextRef):
                out.add(t.label)
    return frozenset(out)


def query_labels(q: Query) -> frozenset[str]:
    """Labels a query depends on (body references plus a label target)."""
    labels = set(referenced_labels(q.body))
    if q.target is not None and q.target not in bound_vars(q.body):
        labels.add(q.target)
    return frozenset(labels)


def bound_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset()
    if isinstance(f, (And, Or)):
        out: frozenset[str] = frozenset()
        for c in f.children:
            out |= bound_vars(c)
        return out
    if isinstance(f, Not):
        return bound_vars(f.child)
    if isinstance(f, (Exists, ForAll, CountCmp)):
        return bound_vars(f.child) | {f.var}
    raise TypeError(f"not a formula: {f!r}")


def unique_predicates(f: Formula) -> frozenset[str]:
    return frozenset(a.pred for a in iter_atoms(f))


def well_formed(
    q: Query, ont: Ontology, ctx_labels: frozenset[str] | set[str]
) -> list[str]:
    """Check a query against scoping rules, the ontology, and kind invariants.

    Returns a deduplicated list of violation messages; empty means well formed.
    """
    raw_violations: list[str] = []
    violations = raw_violations

    def walk(f: Formula, scope: frozenset[str]) -> None:
        if isinstance(f, Atom):
            has_time = isinstance(f.time, (ViewFrame, SceneTime))
            has_interval = isinstance(f.time, Interval)
            violations.extend(
                ont.validate_atom(
                    f.pred,
                    len(f.args),
                    has_time=has_time,
                    has_interval=has_interval,
                    has_location=f.location is not None,
                )
            )
            pred = ont.get(f.pred)
            for i, term in enumerate(f.args):
                if isinstance(term, Var) and term.name not in scope:
                    violations.append(f"unbound variable {term.name!r} in {f.pred}")
                if isinstance(term, ContextRef) and term.label not in ctx_labels:
                    violations.append(f"undefined context label {term.label!r}")
                if pred is not None and i < pred.arity:
                    expected = pred.arg_roles[i][1]
                    if expected == VALUE_SLOT and not isinstance(term, Literal):
                        violations.append(
                            f"{f.pred}: argument {i + 1} must be a literal value"
                        )
                    if expected != VALUE_SLOT and isinstance(term, Literal):
                        violations.append(
                            f"{f.pred}: argument {i + 1} must be an entity term"
                        )
        elif isinstance(f, (And, Or)):
            for c in f.children:
                walk(c, scope)
        elif isinstance(f, Not):
            walk(f.child, scope)
        elif isinstance(f, (Exists, ForAll, CountCmp)):
            if f.var in scope:
                violations.append(f"variable {f.var!r} rebound along a path")
            walk(f.child, scope | {f.var})
        else:
            violations.append(f"unknown formula node {type(f).__name__}")

    walk(q.body, frozenset())

    if q.kind == "definition":
        if not q.defines_label:
            violations.append("definition query must set defines_label")
        body = q.body
        atom = body.child if isinstance(body, Exists) else None
        if not isinstance(atom, Atom):
            violations.append("definition body must be Exists over a single atom")
        else:
            pred = ont.get(atom.pred)
            if pred is not None and pred.category != "object":
                violations.append("definition predicate must be an object predicate")
            if atom.time is None or atom.location is None:
                violations.append("definition atom must carry both time and location")
            if atom.args != (Var(body.var),):
                violations.append("definition atom must apply to the quantified variable")
    elif q.kind in ("what", "when", "where"):
        if not q.target:
            violations.append(f"{q.kind} query must set target")
        elif q.target not in ctx_labels and q.target not in bound_vars(q.body):
            violations.append(
                f"target {q.target!r} is neither a context label nor bound in the body"
            )
    else:
        if q.target is not None:
            violations.append("polar/definition queries must not set target")
    if q.kind != "definition" and q.defines_label is not None:
        violations.append("only definition queries may set defines_label")
    return list(dict.fromkeys(raw_violations))


# --------------------------------------------------------------------------
# canonical XML writer
# --------------------------------------------------------------------------

_RESERVED_TAGS = frozenset(
    {
        "and",
        "or",
        "not",
        "exists",
        "forall",
        "count",
        "what",
        "when",
        "where",
        "define",
        "time",
        "interval",
        "location",
        "entity",
        "value",
        "ground-truth",
        "step",
        "storyline",
    }
)


def _fmt_num(v: Union[int, float]) -> str:
    if isinstance(v, bool):
        raise TypeError("booleans are not serializable numbers")
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _esc_text(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _esc_attr(s: str) -> str:
    return _esc_text(s).replace('"', "&quot;")


class _Node:
    __slots__ = ("tag", "attrs", "children", "text")

    def __init__(self, tag: str, attrs: dict[str, str] | None = None) -> None:
        self.tag = tag
        self.attrs: dict[str, str] = attrs or {}
        self.children: list[_Node] = []
        self.text: str | None = None


def _emit(node: _Node, out: list[str], depth: int) -> None:
    pad = "  " * depth
    attrs = "".join(
        f' {k}="{_esc_attr(v)}"' for k, v in sorted(node.attrs.items())
    )
    if node.text is not None:
        out.append(f"{pad}<{node.tag}{attrs}>{_esc_text(node.text)}</{node.tag}>")
    elif not node.children:
        out.append(f"{pad}<{node.tag}{attrs}/>")
    else:
        out.append(f"{pad}<{node.tag}{attrs}>")
        for c in node.children:
            _emit(c, out, depth + 1)
        out.append(f"{pad}</{node.tag}>")


def render_element(node: _Node) -> str:
    out: list[str] = []
    _emit(node, out, 0)
    return "\n".join(out)


def _time_node(t: TimeSpec) -> _Node:
    if isinstance(t, SceneTime):
        return _Node("time", {"t": _fmt_num(float(t.seconds))})
    if isinstance(t, ViewFrame):
        return _Node("time", {"camera": t.camera_id, "frame": _fmt_num(t.frame)})
    if isinstance(t, Interval):
        if isinstance(t.start, SceneTime):
            return _Node(
                "interval",
                {
                    "start": _fmt_num(float(t.start.seconds)),
                    "end": _fmt_num(float(t.end.seconds)),
                },
            )
        return _Node(
            "interval",
            {
                "camera": t.start.camera_id,
                "start": _fmt_num(t.start.frame),
                "end": _fmt_num(t.end.frame),
            },
        )
    raise TypeError(f"not a time spec: {t!r}")


def _location_node(loc: LocationSpec) -> _Node:
    attrs: dict[str, str] = {}
    if isinstance(loc.ref, ViewCentric):
        attrs["camera"] = loc.ref.camera_id
    else:
        attrs["cs"] = loc.ref.system_id
    if isinstance(loc, PointLocation):
        attrs["x"] = _fmt_num(float(loc.x))
        attrs["y"] = _fmt_num(float(loc.y))
    else:
        attrs["x1"] = _fmt_num(float(loc.x1))
        attrs["y1"] = _fmt_num(float(loc.y1))
        attrs["x2"] = _fmt_num(float(loc.x2))
        attrs["y2"] = _fmt_num(float(loc.y2))
    return _Node("location", attrs)


def _formula_node(f: Formula) -> _Node:
    if isinstance(f, Atom):
        node = _Node(f.pred)
        if f.time is not None:
            node.children.append(_time_node(f.time))
        if f.location is not None:
            node.children.append(_location_node(f.location))
        for term in f.args:
            if isinstance(term, (Var, ContextRef)):
                child = _Node("entity")
                child.text = term.name if isinstance(term, Var) else term.label
            else:
                child = _Node("value")
                child.text = (
                    term.value if isinstance(term.value, str) else _fmt_num(term.value)
                )
            node.children.append(child)
        return node
    if isinstance(f, (And, Or)):
        node = _Node("and" if isinstance(f, And) else "or")
        node.children.extend(_formula_node(c) for c in f.children)
        return node
    if isinstance(f, Not):
        node = _Node("not")
        node.children.append(_formula_node(f.child))
        return node
    if isinstance(f, (Exists, ForAll)):
        node = _Node("exists" if isinstance(f, Exists) else "forall", {"var": f.var})
        node.children.append(_formula_node(f.child))
        return node
    if isinstance(f, CountCmp):
        node = _Node(
            "count", {"var": f.var, "op": _OP_TOKEN[f.op], "rhs": _fmt_num(f.rhs)}
        )
        node.children.append(_formula_node(f.child))
        return node
    raise TypeError(f"not a formula: {f!r}")


def query_to_node(q: Query) -> _Node:
    if q.kind == "polar":
        node = _formula_node(q.body)
        if q.id:
            node.attrs["id"] = q.id
        return node
    if q.kind == "definition":
        node = _Node("define", {"label": q.defines_label or ""})
        if q.id:
            node.attrs["id"] = q.id
        node.children.append(_formula_node(q.body))
        return node
    node = _Node(q.kind, {"target": q.target or ""})
    if q.id:
        node.attrs["id"] = q.id
    node.children.append(_formula_node(q.body))
    return node


def serialize_query_xml(q: Query) -> str:
    """Canonical serialization (no XML declaration, no trailing newline)."""
    return render_element(query_to_node(q))


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _parse_float_attr(el: ET.Element, name: str) -> float:
    raw = el.get(name)
    if raw is None:
        raise QueryXmlError(f"<{el.tag}> missing attribute {name!r}")
    try:
        return float(raw)
    except ValueError:
        raise QueryXmlError(f"<{el.tag}> bad numeric attribute {name}={raw!r}") from None


def _parse_int_attr(el: ET.Element, name: str) -> int:
    raw = el.get(name)
    if raw is None:
        raise QueryXmlError(f"<{el.tag}> missing attribute {name!r}")
    try:
        return int(raw)
    except ValueError:
        raise QueryXmlError(f"<{el.tag}> bad integer attribute {name}={raw!r}") from None


def _parse_time(el: ET.Element) -> TimeSpec:
    try:
        if el.tag == "time":
            if el.get("camera") is not None:
                return ViewFrame(el.get("camera", ""), _parse_int_attr(el, "frame"))
            if el.get("t") is not None:
                return SceneTime(_parse_float_attr(el, "t"))
            # Lenient input form: bare text content, either seconds or cam:frame.
            text = (el.text or "").strip()
            if ":" in text:
                cam, _, frame_s = text.partition(":")
                try:
                    return ViewFrame(cam, int(frame_s))
                except ValueError:
                    raise QueryXmlError(f"bad view time {text!r}") from None
            try:
                return SceneTime(float(text))
            except ValueError:
                raise QueryXmlError(f"bad time literal {text!r}") from None
        if el.tag == "interval":
            cam = el.get("camera")
            if cam is not None:
                return Interval(
                    ViewFrame(cam, _parse_int_attr(el, "start")),
                    ViewFrame(cam, _parse_int_attr(el, "end")),
                )
            return Interval(
                SceneTime(_parse_float_attr(el, "start")),
                SceneTime(_parse_float_attr(el, "end")),
            )
    except ValueError as exc:
        raise QueryXmlError(str(exc)) from None
    raise QueryXmlError(f"unexpected time element <{el.tag}>")


def _parse_location(el: ET.Element) -> LocationSpec:
    cam = el.get("camera")
    cs = el.get("cs")
    if (cam is None) == (cs is None):
        raise QueryXmlError("<location> requires exactly one of camera= or cs=")
    ref: LocationRef = ViewCentric(cam) if cam is not None else SceneCentric(cs or "")
    try:
        if el.get("x") is not None:
            return PointLocation(
                _parse_float_attr(el, "x"), _parse_float_attr(el, "y"), ref
            )
        return BoxLocation(
            _parse_float_attr(el, "x1"),
            _parse_float_attr(el, "y1"),
            _parse_float_attr(el, "x2"),
            _parse_float_attr(el, "y2"),
            ref,
        )
    except ValueError as exc:
        raise QueryXmlError(str(exc)) from None


def _parse_formula(el: ET.Element, scope: frozenset[str]) -> Formula:
    tag = el.tag
    if tag in ("and", "or"):
        children = tuple(_parse_formula(c, scope) for c in el)
        try:
            return And(children) if tag == "and" else Or(children)
        except ValueError as exc:
            raise QueryXmlError(str(exc)) from None
    if tag == "not":
        kids = list(el)
        if len(kids) != 1:
            raise QueryXmlError("<not> requires exactly one child")
        return Not(_parse_formula(kids[0], scope))
    if tag in ("exists", "forall"):
        var = el.get("var")
        if not var:
            raise QueryXmlError(f"<{tag}> requires a var attribute")
        kids = list(el)
        if len(kids) != 1:
            raise QueryXmlError(f"<{tag}> requires exactly one child")
        child = _parse_formula(kids[0], scope | {var})
        return Exists(var, child) if tag == "exists" else ForAll(var, child)
    if tag == "count":
        var = el.get("var")
        if not var:
            raise QueryXmlError("<count> requires a var attribute")
        op_token = el.get("op")
        if op_token not in _TOKEN_OP:
            raise QueryXmlError(f"<count> bad op {op_token!r}")
        rhs = _parse_int_attr(el, "rhs")
        kids = list(el)
        if len(kids) != 1:
            raise QueryXmlError("<count> requires exactly one child")
        try:
            return CountCmp(var, _parse_formula(kids[0], scope | {var}), _TOKEN_OP[op_token], rhs)
        except ValueError as exc:
            raise QueryXmlError(str(exc)) from None
    if tag in _RESERVED_TAGS:
        raise QueryXmlError(f"misplaced element <{tag}>")
    # Anything else is a predicate atom.
    time: TimeSpec | None = None
    location: LocationSpec | None = None
    args: list[Term] = []
    for child in el:
        if child.tag in ("time", "interval"):
            if time is not None:
                raise QueryXmlError(f"<{tag}> carries more than one time modifier")
            time = _parse_time(child)
        elif child.tag == "location":
            if location is not None:
                raise QueryXmlError(f"<{tag}> carries more than one location")
            location = _parse_location(child)
        elif child.tag == "entity":
            name = (child.text or "").strip()
            if not name:
                raise QueryXmlError("<entity> must carry a name")
            args.append(Var(name) if name in scope else ContextRef(name))
        elif child.tag == "value":
            raw = (child.text or "").strip()
            args.append(Literal(_coerce_literal(raw)))
        else:
            raise QueryXmlError(f"unknown element <{child.tag}> inside <{tag}>")
    return Atom(tag, tuple(args), time=time, location=location)


def _coerce_literal(raw: str) -> Union[str, int, float]:
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_query_node(root: ET.Element) -> Query:
    qid = root.get("id", "") or ""
    if root.tag == "define":
        label = root.get("label")
        if not label:
            raise QueryXmlError("<define> requires a label attribute")
        kids = list(root)
        if len(kids) != 1:
            raise QueryXmlError("<define> requires exactly one body element")
        body = _parse_formula(kids[0], frozenset())
        return Query(id=qid, kind="definition", body=body, defines_label=label)
    if root.tag in ("what", "when", "where"):
        target = root.get("target")
        if not target:
            raise QueryXmlError(f"<{root.tag}> requires a target attribute")
        kids = list(root)
        if len(kids) != 1:
            raise QueryXmlError(f"<{root.tag}> requires exactly one body element")
        body = _parse_formula(kids[0], frozenset())
        return Query(id=qid, kind=root.tag, body=body, target=target)
    body = _parse_formula(root, frozenset())
    return Query(id=qid, kind="polar", body=body)


def parse_query_xml(text: str) -> Query:
    """Parse one query document into its AST.

    Bare ``<entity>`` names are context labels unless they match an enclosing
    quantifier variable. Only structural errors are raised here; predicate and
    modifier checks against an ontology belong to :func:`well_formed`.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise QueryXmlError(f"malformed XML: {exc}") from None
    return parse_query_xml_root(root)


def parse_query_xml_root(root: ET.Element) -> Query:
    return parse_query_node(root)
