"""First-order query evaluation over a scene knowledge base.

Evaluation is closed-world where the store has coverage and three-valued
where it does not: a derived predicate with a missing position yields
"unknown", which propagates through the connectives (Kleene tables) and
surfaces as an "unable to respond" outcome instead of a silently wrong
boolean. Stored predicates are true iff a covering fact exists.

Quantifiers and counting range over the finite entity set of the scene.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import geometry
from .geometry import DEFAULT_GEOMETRY, GeometryConfig
from .kb import Box, KnowledgeBase
from .ontology import VALUE_SLOT
from .query_model import (
    And,
    Answer,
    Atom,
    BoolAnswer,
    BoxLocation,
    ContextRef,
    CountCmp,
    Exists,
    ForAll,
    Formula,
    Interval,
    IntervalAnswer,
    LabelAnswer,
    Literal,
    Not,
    Or,
    PolygonAnswer,
    Query,
    Var,
    ViewCentric,
    ViewFrame,
)

UNKNOWN_PREDICATE = "unknown_predicate"
COVERAGE_GAP = "coverage_gap"
UNSUPPORTED = "unsupported_construct"
NO_UNIQUE_ANSWER = "no_unique_answer"


class EngineError(RuntimeError):
    """Raised for protocol misuse (e.g. evaluating with an unbound label)."""


@dataclass
class StoryContext:
    """Conversation state for one story line: labels bound by definitions,
    and labels whose definitions failed."""

    bindings: dict[str, str] = field(default_factory=dict)
    failed_labels: set[str] = field(default_factory=set)

    def bind(self, label: str, entity_id: str) -> None:
        self.failed_labels.discard(label)
        self.bindings[label] = entity_id

    def fail(self, label: str) -> None:
        self.bindings.pop(label, None)
        self.failed_labels.add(label)


@dataclass(frozen=True)
class EvalOutcome:
    answer: Optional[Answer] = None
    unable_reason: Optional[str] = None

    @staticmethod
    def of(answer: Answer) -> "EvalOutcome":
        return EvalOutcome(answer=answer)

    @staticmethod
    def unable(reason: str) -> "EvalOutcome":
        return EvalOutcome(unable_reason=reason)

    @property
    def is_value(self) -> bool:
        return self.answer is not None

    @property
    def is_unable(self) -> bool:
        return self.unable_reason is not None


# Dispatch table for derived predicates. Each implementation takes
# (kb, *entity_ids, t, cfg) and returns True/False/None.
_DERIVED = {
    "near": geometry.near,
    "clear-line-of-sight": geometry.clear_line_of_sight,
    "inside": geometry.inside,
    "touching": geometry.touching,
    "occluding": geometry.occluding,
}


class _State:
    """Latches the strongest unable-reason seen while a formula evaluates."""

    __slots__ = ("reason",)
    _rank = {None: 0, COVERAGE_GAP: 1, UNSUPPORTED: 2, UNKNOWN_PREDICATE: 3}

    def __init__(self) -> None:
        self.reason: Optional[str] = None

    def latch(self, reason: str) -> None:
        if self._rank[reason] > self._rank[self.reason]:
            self.reason = reason


def _resolve_term(term, ctx: StoryContext, binding: dict[str, str]) -> str:
    if isinstance(term, Var):
        try:
            return binding[term.name]
        except KeyError:
            raise EngineError(f"unbound variable {term.name!r}") from None
    if isinstance(term, ContextRef):
        try:
            return ctx.bindings[term.label]
        except KeyError:
            raise EngineError(f"unbound context label {term.label!r}") from None
    raise EngineError(f"expected an entity term, got {term!r}")


def _location_matches(
    kb: KnowledgeBase,
    entity_id: str,
    loc,
    time_spec,
    cfg: GeometryConfig,
    state: _State,
) -> Optional[bool]:
    if time_spec is None or isinstance(time_spec, Interval):
        state.latch(UNSUPPORTED)
        return None
    if isinstance(loc.ref, ViewCentric):
        cam_id = loc.ref.camera_id
        if cam_id not in kb.cameras:
            state.latch(UNSUPPORTED)
            return None
        cam = kb.cameras[cam_id]
        if isinstance(time_spec, ViewFrame) and time_spec.camera_id == cam_id:
            frame = time_spec.frame
        else:
            t, _ = kb.to_scene_seconds(time_spec)
            frame = geometry.scene_time_to_frame(cam, t)
        box = kb.bbox_at(entity_id, cam_id, frame)
        if box is None:
            state.latch(COVERAGE_GAP)
            return None
        if isinstance(loc, BoxLocation):
            query_box = Box(loc.x1, loc.y1, loc.x2, loc.y2)
            return geometry.bbox_iou(box, query_box) >= cfg.iou_threshold_def
        return box.contains((loc.x, loc.y))
    # Scene-centric location.
    t, _ = kb.to_scene_seconds(time_spec)
    pos = kb.position_at(entity_id, t)
    if pos is None:
        state.latch(COVERAGE_GAP)
        return None
    if isinstance(loc, BoxLocation):
        return loc.x1 <= pos[0] <= loc.x2 and loc.y1 <= pos[1] <= loc.y2
    return geometry.dist(pos, (loc.x, loc.y)) <= cfg.near_threshold


def evaluate_atom(
    kb: KnowledgeBase,
    ctx: StoryContext,
    atom: Atom,
    binding: dict[str, str],
    cfg: GeometryConfig = DEFAULT_GEOMETRY,
    state: Optional[_State] = None,
) -> Optional[bool]:
    """Ground-atom truth: True/False, or None for unknown."""
    state = state if state is not None else _State()
    pred = kb.ontology.get(atom.pred)
    if pred is None:
        state.latch(UNKNOWN_PREDICATE)
        return None

    entity_args: list[str] = []
    value_arg: Optional[str] = None
    for i, term in enumerate(atom.args):
        expected = pred.arg_roles[i][1] if i < pred.arity else None
        if expected == VALUE_SLOT:
            if not isinstance(term, Literal):
                state.latch(UNSUPPORTED)
                return None
            value_arg = (
                term.value if isinstance(term.value, str) else repr(term.value)
            )
        else:
            entity_args.append(_resolve_term(term, ctx, binding))

    time_spec = atom.time
    if isinstance(time_spec, (ViewFrame, Interval)):
        cams = (
            {time_spec.camera_id}
            if isinstance(time_spec, ViewFrame)
            else {time_spec.start.camera_id}
            if isinstance(time_spec.start, ViewFrame)
            else set()
        )
        if any(c not in kb.cameras for c in cams):
            state.latch(UNSUPPORTED)
            return None

    if pred.derived:
        impl = _DERIVED.get(atom.pred)
        if impl is None:
            state.latch(UNSUPPORTED)
            return None
        if time_spec is None or isinstance(time_spec, Interval):
            # On-demand predicates are instantaneous; they need a point time.
            state.latch(UNSUPPORTED)
            return None
        t, _ = kb.to_scene_seconds(time_spec)
        result = impl(kb, *entity_args, t, cfg)
        if result is None:
            state.latch(COVERAGE_GAP)
        return result

    # Closed world for stored predicates: truth is the existence of a
    # covering fact.
    truth = bool(
        kb.facts_matching(
            predicate=atom.pred,
            participants=entity_args,
            value=value_arg,
            time=time_spec,
        )
    )
    if atom.location is not None:
        if not truth:
            return False
        loc_ok = _location_matches(
            kb, entity_args[0], atom.location, time_spec, cfg, state
        )
        if loc_ok is None:
            return None
        return loc_ok
    return truth


def _domain(kb: KnowledgeBase, body: Formula, var: str) -> list[str]:
    """Candidate entities for a quantified variable.

    When the body is (a conjunction containing) a single-argument object-type
    atom over the variable, entities outside that type contribute a false
    conjunct, so restricting to the type is sound and keeps enumeration small.
    """
    guards = []
    conjuncts = body.children if isinstance(body, And) else (body,)
    for c in conjuncts:
        if (
            isinstance(c, Atom)
            and c.args == (Var(var),)
            and c.location is None
        ):
            pred = kb.ontology.get(c.pred)
            if pred is not None and pred.category == "object":
                guards.append(c.pred)
    if guards:
        return kb.entities_of_type(guards[0])
    return sorted(kb.entities)


def _eval(
    kb: KnowledgeBase,
    ctx: StoryContext,
    f: Formula,
    binding: dict[str, str],
    cfg: GeometryConfig,
    state: _State,
) -> Optional[bool]:
    if isinstance(f, Atom):
        return evaluate_atom(kb, ctx, f, binding, cfg, state)
    if isinstance(f, And):
        saw_unknown = False
        for c in f.children:
            v = _eval(kb, ctx, c, binding, cfg, state)
            if v is False:
                return False
            if v is None:
                saw_unknown = True
        return None if saw_unknown else True
    if isinstance(f, Or):
        saw_unknown = False
        for c in f.children:
            v = _eval(kb, ctx, c, binding, cfg, state)
            if v is True:
                return True
            if v is None:
                saw_unknown = True
        return None if saw_unknown else False
    if isinstance(f, Not):
        v = _eval(kb, ctx, f.child, binding, cfg, state)
        return None if v is None else not v
    if isinstance(f, Exists):
        saw_unknown = False
        for ent in _domain(kb, f.child, f.var):
            v = _eval(kb, ctx, f.child, {**binding, f.var: ent}, cfg, state)
            if v is True:
                return True
            if v is None:
                saw_unknown = True
        return None if saw_unknown else False
    if isinstance(f, ForAll):
        saw_unknown = False
        for ent in sorted(kb.entities):
            v = _eval(kb, ctx, f.child, {**binding, f.var: ent}, cfg, state)
            if v is False:
                return False
            if v is None:
                saw_unknown = True
        return None if saw_unknown else True
    if isinstance(f, CountCmp):
        lo = 0
        unknowns = 0
        for ent in _domain(kb, f.child, f.var):
            v = _eval(kb, ctx, f.child, {**binding, f.var: ent}, cfg, state)
            if v is True:
                lo += 1
            elif v is None:
                unknowns += 1
        hi = lo + unknowns
        return _compare_count_range(lo, hi, f.op, f.rhs)
    raise EngineError(f"unknown formula node {type(f).__name__}")


def _compare_count_range(lo: int, hi: int, op: str, rhs: int) -> Optional[bool]:
    """Verdict of `count op rhs` when the true count lies in [lo, hi].
    Unknown candidates matter only when they could change the verdict."""
    def cmp(c: int) -> bool:
        if op == "<":
            return c < rhs
        if op == "<=":
            return c <= rhs
        if op == "=":
            return c == rhs
        if op == ">=":
            return c >= rhs
        return c > rhs

    if op == "=":
        if lo == hi:
            return lo == rhs
        return False if (rhs < lo or rhs > hi) else None
    a, b = cmp(lo), cmp(hi)
    return a if a == b else None


def evaluate_polar(
    kb: KnowledgeBase,
    ctx: StoryContext,
    f: Formula,
    cfg: GeometryConfig = DEFAULT_GEOMETRY,
) -> EvalOutcome:
    state = _State()
    v = _eval(kb, ctx, f, {}, cfg, state)
    if v is None:
        return EvalOutcome.unable(state.reason or COVERAGE_GAP)
    return EvalOutcome.of(BoolAnswer(v))


def count_value(
    kb: KnowledgeBase,
    ctx: StoryContext,
    var: str,
    body: Formula,
    cfg: GeometryConfig = DEFAULT_GEOMETRY,
) -> int:
    """Number of entities for which the body holds (unknowns excluded)."""
    state = _State()
    n = 0
    for ent in _domain(kb, body, var):
        if _eval(kb, ctx, body, {var: ent}, cfg, state) is True:
            n += 1
    return n


def evaluate_count(
    kb: KnowledgeBase,
    ctx: StoryContext,
    c: CountCmp,
    cfg: GeometryConfig = DEFAULT_GEOMETRY,
) -> EvalOutcome:
    return evaluate_polar(kb, ctx, c, cfg)


# --------------------------------------------------------------------------
# definitions
# --------------------------------------------------------------------------


def resolve_definition(
    kb: KnowledgeBase,
    ctx: StoryContext,
    q: Query,
    cfg: GeometryConfig = DEFAULT_GEOMETRY,
) -> EvalOutcome:
    """Try to bind a definition query's label to the best-matching entity.

    Candidates are entities of the stated type whose box/position matches the
    stated time and location; ranking is by overlap (boxes) or proximity
    (points), ties by entity id. On success the label is bound; on failure it
    is marked failed so dependent queries can be skipped.
    """
    if q.kind != "definition" or q.defines_label is None:
        raise EngineError("resolve_definition requires a definition query")
    body = q.body
    atom = body.child if isinstance(body, Exists) else None
    if not isinstance(atom, Atom) or atom.time is None or atom.location is None:
        raise EngineError("malformed definition body")

    state = _State()
    loc = atom.location
    time_spec = atom.time
    try:
        candidates = kb.entities_of_type(atom.pred)
    except Exception:
        return EvalOutcome.unable(UNKNOWN_PREDICATE)

    scored: list[tuple[float, str]] = []
    had_coverage = False
    for ent_id in candidates:
        if isinstance(loc.ref, ViewCentric):
            cam_id = loc.ref.camera_id
            if cam_id not in kb.cameras:
                return EvalOutcome.unable(UNSUPPORTED)
            cam = kb.cameras[cam_id]
            if isinstance(time_spec, ViewFrame) and time_spec.camera_id == cam_id:
                frame = time_spec.frame
            else:
                t, _ = kb.to_scene_seconds(time_spec)
                frame = geometry.scene_time_to_frame(cam, t)
            box = kb.bbox_at(ent_id, cam_id, frame)
            if box is None:
                continue
            had_coverage = True
            if isinstance(loc, BoxLocation):
                iou = geometry.bbox_iou(box, Box(loc.x1, loc.y1, loc.x2, loc.y2))
                if iou >= cfg.iou_threshold_def:
                    scored.append((iou, ent_id))
            else:
                if box.contains((loc.x, loc.y)):
                    d = geometry.dist(box.center, (loc.x, loc.y))
                    scored.append((-d, ent_id))
        else:
            t, _ = kb.to_scene_seconds(time_spec)
            pos = kb.position_at(ent_id, t)
            if pos is None:
                continue
            had_coverage = True
            if isinstance(loc, BoxLocation):
                if loc.x1 <= pos[0] <= loc.x2 and loc.y1 <= pos[1] <= loc.y2:
                    cx, cy = (loc.x1 + loc.x2) / 2.0, (loc.y1 + loc.y2) / 2.0
                    scored.append((-geometry.dist(pos, (cx, cy)), ent_id))
            else:
                d = geometry.dist(pos, (loc.x, loc.y))
                if d <= cfg.near_threshold:
                    scored.append((-d, ent_id))

    if scored:
        scored.sort(key=lambda s: (-s[0], s[1]))
        ctx.bind(q.defines_label, scored[0][1])
        return EvalOutcome.of(BoolAnswer(True))
    if candidates and not had_coverage:
        # No candidate had data at that time: cannot distinguish an empty
        # region from missing coverage.
        return EvalOutcome.unable(COVERAGE_GAP)
    ctx.fail(q.defines_label)
    return EvalOutcome.of(BoolAnswer(False))


# --------------------------------------------------------------------------
# non-polar queries
# --------------------------------------------------------------------------


def _substitute_target(f: Formula, target: str) -> Optional[Formula]:
    """Strip the Exists node quantifying `target`, leaving it free."""
    if isinstance(f, Exists) and f.var == target:
        return f.child
    if isinstance(f, (And, Or)):
        for i, c in enumerate(f.children):
            sub = _substitute_target(c, target)
            if sub is not None:
                children = f.children[:i] + (sub,) + f.children[i + 1 :]
                return And(children) if isinstance(f, And) else Or(children)
        return None
    if isinstance(f, Not):
        sub = _substitute_target(f.child, target)
        return Not(sub) if sub is not None else None
    if isinstance(f, (ForAll, CountCmp)):
        return None
    return None


def _answer_what(
    kb: KnowledgeBase, ctx: StoryContext, q: Query, cfg: GeometryConfig
) -> EvalOutcome:
    target = q.target or ""
    opened = _substitute_target(q.body, target)
    if opened is None:
        return EvalOutcome.unable(UNSUPPORTED)
    state = _State()
    labels: set[str] = set()
    for ent in sorted(kb.entities):
        if _eval(kb, ctx, opened, {target: ent}, cfg, state) is True:
            labels.add(kb.entities[ent].object_type)
    if len(labels) == 1:
        return EvalOutcome.of(LabelAnswer(next(iter(labels))))
    return EvalOutcome.unable(NO_UNIQUE_ANSWER)


def _merge_intervals(spans: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    for s, e in sorted(spans):
        if out and s <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], e))
        else:
            out.append((s, e))
    return out


def _intersect_many(
    a: list[tuple[float, float]], b: list[tuple[float, float]]
) -> list[tuple[float, float]]:
    out = []
    for s1, e1 in a:
        for s2, e2 in b:
            s, e = max(s1, s2), min(e1, e2)
            if s <= e:
                out.append((s, e))
    return _merge_intervals(out)


def _answer_when(
    kb: KnowledgeBase, ctx: StoryContext, q: Query, cfg: GeometryConfig
) -> EvalOutcome:
    """Maximal interval over which the body holds.

    Supported body shape: a stored-predicate atom, or a conjunction of them,
    ground under the story context and carrying no time modifiers; the answer
    is computed exactly from fact validity intervals.
    """
    atoms: list[Atom]
    if isinstance(q.body, Atom):
        atoms = [q.body]
    elif isinstance(q.body, And) and all(isinstance(c, Atom) for c in q.body.children):
        atoms = list(q.body.children)  # type: ignore[arg-type]
    else:
        return EvalOutcome.unable(UNSUPPORTED)

    spans: Optional[list[tuple[float, float]]] = None
    for atom in atoms:
        pred = kb.ontology.get(atom.pred)
        if pred is None:
            return EvalOutcome.unable(UNKNOWN_PREDICATE)
        if pred.derived or atom.time is not None or atom.location is not None:
            return EvalOutcome.unable(UNSUPPORTED)
        entity_args = []
        value_arg = None
        for i, term in enumerate(atom.args):
            if pred.arg_roles[i][1] == VALUE_SLOT:
                if not isinstance(term, Literal):
                    return EvalOutcome.unable(UNSUPPORTED)
                value_arg = (
                    term.value if isinstance(term.value, str) else repr(term.value)
                )
            else:
                if isinstance(term, Var):
                    return EvalOutcome.unable(UNSUPPORTED)
                entity_args.append(_resolve_term(term, ctx, {}))
        facts = kb.facts_matching(
            predicate=atom.pred, participants=entity_args, value=value_arg
        )
        atom_spans = _merge_intervals([(f.start, f.end) for f in facts])
        spans = atom_spans if spans is None else _intersect_many(spans, atom_spans)
        if not spans:
            return EvalOutcome.unable(NO_UNIQUE_ANSWER)
    assert spans is not None
    lo, hi = kb.span
    clamped = [(max(s, lo), min(e, hi)) for s, e in spans if max(s, lo) <= min(e, hi)]
    if not clamped:
        return EvalOutcome.unable(NO_UNIQUE_ANSWER)
    # Longest maximal interval; earliest wins ties.
    best = max(clamped, key=lambda se: (se[1] - se[0], -se[0]))
    return EvalOutcome.of(IntervalAnswer(best[0], best[1]))


def _answer_where(
    kb: KnowledgeBase, ctx: StoryContext, q: Query, cfg: GeometryConfig
) -> EvalOutcome:
    """Convex hull of the target's scene positions over the query interval
    (the single interval modifier in the body); degenerate hulls are buffered
    to a proper polygon of radius los_block_radius."""
    target = q.target or ""
    if target in ctx.bindings:
        entity_id = ctx.bindings[target]
    else:
        return EvalOutcome.unable(UNSUPPORTED)
    interval: Optional[Interval] = None
    for atom in _iter_body_atoms(q.body):
        if isinstance(atom.time, Interval):
            if interval is not None:
                return EvalOutcome.unable(UNSUPPORTED)
            interval = atom.time
    if interval is None:
        return EvalOutcome.unable(UNSUPPORTED)
    start, end = kb.to_scene_seconds(interval)
    ent = kb.entities.get(entity_id)
    if ent is not None and ent.static and ent.footprint:
        pts = [(x, y) for x, y in ent.footprint]
    else:
        pts = [(x, y) for _, x, y in kb.track_points(entity_id, start, end)]
    if not pts:
        return EvalOutcome.unable(COVERAGE_GAP)
    hull = geometry.convex_hull(pts)
    if len(hull) < 3 or _hull_area(hull) <= 1e-12:
        hull = geometry.buffered_polygon(pts, cfg.los_block_radius)
    return EvalOutcome.of(PolygonAnswer(tuple((x, y) for x, y in hull)))


def _hull_area(poly: list[tuple[float, float]]) -> float:
    area2 = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        area2 += x1 * y2 - x2 * y1
    return abs(area2) / 2.0


def _iter_body_atoms(f: Formula):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, (And, Or)):
        for c in f.children:
            yield from _iter_body_atoms(c)
    elif isinstance(f, Not):
        yield from _iter_body_atoms(f.child)
    elif isinstance(f, (Exists, ForAll, CountCmp)):
        yield from _iter_body_atoms(f.child)


def answer_nonpolar(
    kb: KnowledgeBase,
    ctx: StoryContext,
    q: Query,
    cfg: GeometryConfig = DEFAULT_GEOMETRY,
) -> EvalOutcome:
    if q.kind == "what":
        return _answer_what(kb, ctx, q, cfg)
    if q.kind == "when":
        return _answer_when(kb, ctx, q, cfg)
    if q.kind == "where":
        return _answer_where(kb, ctx, q, cfg)
    raise EngineError(f"not a non-polar query kind: {q.kind}")


def answer_query(
    kb: KnowledgeBase,
    ctx: StoryContext,
    q: Query,
    cfg: GeometryConfig = DEFAULT_GEOMETRY,
) -> EvalOutcome:
    """Evaluate any query kind; definition queries update the context."""
    if q.kind == "definition":
        return resolve_definition(kb, ctx, q, cfg)
    if q.kind == "polar":
        return evaluate_polar(kb, ctx, q.body, cfg)
    return answer_nonpolar(kb, ctx, q, cfg)
