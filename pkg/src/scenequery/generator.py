"""Ontology-guided story-line suite generation from a ground-truth KB.

Every emitted query carries a ground truth computed by the query engine
against the source knowledge base, so a reference test-taker with the same KB
must reproduce it exactly. Story lines open with object definitions that bind
conversation labels; follow-up queries reuse those labels. Polar ground
truths are balanced to a target false fraction by perturbing verified-true
queries and re-verifying falsehood; object-predicate usage is steered toward
the configured distribution.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .engine import (
    StoryContext,
    answer_query,
    count_value,
    evaluate_polar,
    resolve_definition,
)
from .geometry import DEFAULT_GEOMETRY, GeometryConfig
from .kb import KnowledgeBase
from .ontology import Ontology
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
    Literal,
    Not,
    Or,
    Query,
    SceneTime,
    Var,
    ViewCentric,
    ViewFrame,
    iter_atoms,
    well_formed,
)
from .suite import EvaluationSuite, SceneBlock, StoryLine, SuiteQuery


class GenerationError(RuntimeError):
    """Generation could not satisfy its constraints within the retry budget."""


@dataclass(frozen=True)
class GenConfig:
    seed: int = 42
    object_weights: Mapping[str, float] = field(
        default_factory=lambda: {"person": 0.559}
    )
    storylines_per_scene: int = 32
    queries_per_storyline: tuple[int, int] = (22, 30)
    negative_fraction: float = 0.5
    false_definition_fraction: float = 0.1
    retry_budget: int = 60

    def __post_init__(self) -> None:
        if not (0.0 <= self.negative_fraction <= 1.0):
            raise ValueError("negative_fraction must be in [0,1]")
        if not (0.0 <= self.false_definition_fraction <= 1.0):
            raise ValueError("false_definition_fraction must be in [0,1]")
        lo, hi = self.queries_per_storyline
        if lo < 1 or hi < lo:
            raise ValueError("bad queries_per_storyline range")
        if any(w < 0 for w in self.object_weights.values()):
            raise ValueError("weights must be nonnegative")


class _DistributionSteering:
    """Keeps the emitted share of each steerable object predicate near its
    configured weight with a running-share feedback rule."""

    def __init__(self, ont: Ontology, weights: Mapping[str, float]) -> None:
        self.counts: dict[str, int] = {}
        self.total = 0
        names = ont.object_types()
        explicit = {n: w for n, w in weights.items() if n in names}
        remainder = max(0.0, 1.0 - sum(explicit.values()))
        rest = [n for n in names if n not in explicit]
        share = remainder / len(rest) if rest else 0.0
        self.weights = {n: explicit.get(n, share) for n in names}

    def record_query(self, ont: Ontology, q: Query) -> None:
        for atom in iter_atoms(q.body):
            pred = ont.get(atom.pred)
            if pred is not None and pred.category == "object":
                self.counts[atom.pred] = self.counts.get(atom.pred, 0) + 1
                self.total += 1

    def choose(self, options: Sequence[str], rng: random.Random) -> str:
        options = list(dict.fromkeys(options))
        if len(options) == 1:
            return options[0]
        # "person" carries most of the target mass, so regulate its running
        # share directly; everything else follows the configured weights.
        if "person" in options and self.total >= 25:
            target = self.weights.get("person", 0.0)
            share = self.counts.get("person", 0) / self.total
            if share < target - 0.005:
                return "person"
            if share > target + 0.005:
                rest = [o for o in options if o != "person"]
                weights = [max(self.weights.get(o, 0.0), 1e-6) for o in rest]
                return rng.choices(rest, weights=weights, k=1)[0]
        weights = [max(self.weights.get(o, 0.0), 1e-6) for o in options]
        return rng.choices(options, weights=weights, k=1)[0]


class _SignSteering:
    """Keeps the realized false fraction of polar ground truths on target."""

    def __init__(self, target: float) -> None:
        self.target = target
        self.total = 0
        self.false = 0

    def want_false(self, rng: random.Random) -> bool:
        p = self.target
        if self.total >= 20:
            err = self.target - self.false / self.total
            p = min(1.0, max(0.0, self.target + 2.0 * err))
        return rng.random() < p

    def record(self, truth: bool) -> None:
        self.total += 1
        if not truth:
            self.false += 1


def _pick_time_in(rng: random.Random, start: float, end: float) -> float:
    if end <= start:
        return start
    t = round(rng.uniform(start, end), 1)
    return min(max(t, start), end)


def _entity_type_options(kb: KnowledgeBase, entity_id: str) -> list[str]:
    """The entity's type and its ancestors, for choosing the stated name."""
    name = kb.entities[entity_id].object_type
    options = [name]
    node = name
    while True:
        parent = kb.ontology.parent_of(node)
        if parent is None:
            break
        options.append(parent)
        node = parent
    return options


class _StorylineBuilder:
    def __init__(
        self,
        kb: KnowledgeBase,
        ont: Ontology,
        cfg: GenConfig,
        rng: random.Random,
        dist: _DistributionSteering,
        sign: _SignSteering,
        scene_id: str,
        index: int,
        geom: GeometryConfig,
    ) -> None:
        self.kb = kb
        self.ont = ont
        self.cfg = cfg
        self.rng = rng
        self.dist = dist
        self.sign = sign
        self.geom = geom
        self.scene_id = scene_id
        self.index = index
        self.ctx = StoryContext()
        self.queries: list[SuiteQuery] = []
        self.labels: list[str] = []
        self._qnum = 0

    # -- plumbing -----------------------------------------------------------

    def _qid(self) -> str:
        qid = f"{self.scene_id}-{self.index:03d}-q{self._qnum:02d}"
        self._qnum += 1
        return qid

    def _emit(self, q: Query, truth: Answer) -> None:
        problems = well_formed(q, self.ont, frozenset(self.labels))
        if problems:
            raise GenerationError(f"{q.id}: {problems[0]}")
        self.queries.append(SuiteQuery(query=q, truth=truth))
        self.dist.record_query(self.ont, q)
        if isinstance(truth, BoolAnswer) and q.kind == "polar":
            self.sign.record(truth.value)

    def _verify_polar(self, body: Formula) -> Optional[bool]:
        out = evaluate_polar(self.kb, self.ctx, body, self.geom)
        if out.is_value and isinstance(out.answer, BoolAnswer):
            return out.answer.value
        return None

    def _bound_entities(self) -> dict[str, str]:
        return dict(self.ctx.bindings)

    def _anchor_facts(self) -> list:
        """Stored facts touching at least one bound entity."""
        bound = set(self.ctx.bindings.values())
        seen = set()
        out = []
        for fact in self.kb.facts:
            if fact.fact_id.startswith("type:") or fact.fact_id in seen:
                continue
            if any(p in bound for p in fact.participants):
                seen.add(fact.fact_id)
                out.append(fact)
        return out

    def _label_of(self, entity_id: str) -> Optional[str]:
        for label, ent in self.ctx.bindings.items():
            if ent == entity_id:
                return label
        return None

    def _term_for(self, entity_id: str) -> Optional[ContextRef]:
        label = self._label_of(entity_id)
        return ContextRef(label) if label else None

    # -- definitions ---------------------------------------------------------

    def _definable_entities(self) -> list[str]:
        out = []
        for ent_id in sorted(self.kb.entities):
            ent = self.kb.entities[ent_id]
            if ent.static:
                continue
            if any(
                self.kb.observations_for(ent_id, cam) for cam in self.kb.cameras
            ):
                out.append(ent_id)
        return out

    def add_definition(self, entity_id: str) -> bool:
        rng = self.rng
        cams = [
            c for c in sorted(self.kb.cameras)
            if self.kb.observations_for(entity_id, c)
        ]
        for _ in range(self.cfg.retry_budget):
            cam_id = rng.choice(cams)
            obs = rng.choice(self.kb.observations_for(entity_id, cam_id))
            type_name = self.dist.choose(
                _entity_type_options(self.kb, entity_id), rng
            )
            label = f"p{len(self.labels) + 1}"
            q = Query(
                id=self._qid(),
                kind="definition",
                body=Exists(
                    "v",
                    Atom(
                        type_name,
                        (Var("v"),),
                        time=ViewFrame(cam_id, obs.frame),
                        location=BoxLocation(
                            obs.box.x1, obs.box.y1, obs.box.x2, obs.box.y2,
                            ViewCentric(cam_id),
                        ),
                    ),
                ),
                defines_label=label,
            )
            probe = StoryContext(
                bindings=dict(self.ctx.bindings),
                failed_labels=set(self.ctx.failed_labels),
            )
            out = resolve_definition(self.kb, probe, q, self.geom)
            if (
                out.is_value
                and isinstance(out.answer, BoolAnswer)
                and out.answer.value
                and probe.bindings.get(label) == entity_id
            ):
                resolve_definition(self.kb, self.ctx, q, self.geom)
                self.labels.append(label)
                self._emit(q, BoolAnswer(True))
                return True
        return False

    def add_false_definition(self) -> bool:
        rng = self.rng
        cams = sorted(self.kb.cameras)
        for _ in range(self.cfg.retry_budget):
            cam_id = rng.choice(cams)
            cam = self.kb.cameras[cam_id]
            type_name = self.dist.choose(list(self.ont.object_types()), rng)
            frame = rng.randrange(0, max(1, int(self.kb.span[1] * cam.frame_rate)))
            x1 = round(rng.uniform(0.0, 1800.0), 1)
            y1 = round(rng.uniform(0.0, 1200.0), 1)
            box = BoxLocation(x1, y1, x1 + 60.0, y1 + 120.0, ViewCentric(cam_id))
            label = f"p{len(self.labels) + 1}"
            q = Query(
                id=self._qid(),
                kind="definition",
                body=Exists(
                    "v",
                    Atom(
                        type_name,
                        (Var("v"),),
                        time=ViewFrame(cam_id, frame),
                        location=box,
                    ),
                ),
                defines_label=label,
            )
            out = resolve_definition(self.kb, self.ctx, q, self.geom)
            if (
                out.is_value
                and isinstance(out.answer, BoolAnswer)
                and not out.answer.value
            ):
                self.labels.append(label)
                self._emit(q, BoolAnswer(False))
                return True
            # A lucky hit bound the label; undo and retry elsewhere.
            self.ctx.bindings.pop(label, None)
            self.ctx.failed_labels.discard(label)
            self._qnum -= 1
        return False

    # -- polar builders ------------------------------------------------------

    def _atom_for_fact(self, fact, with_time: bool = True) -> Optional[Formula]:
        pred = self.ont.get(fact.predicate)
        if pred is None:
            return None
        args: list = []
        for participant in fact.participants:
            term = self._term_for(participant)
            if term is None:
                return None
            args.append(term)
        if pred.has_value_slot:
            args.append(Literal(fact.value))
        time = None
        if with_time and pred.supports_time:
            if pred.supports_interval and self.rng.random() < 0.3:
                a = _pick_time_in(self.rng, fact.start, fact.end)
                b = _pick_time_in(self.rng, a, fact.end)
                time = Interval(SceneTime(a), SceneTime(b))
            else:
                time = SceneTime(_pick_time_in(self.rng, fact.start, fact.end))
        return Atom(fact.predicate, tuple(args), time=time)

    def build_polar_plain(self) -> Optional[tuple[Formula, bool]]:
        facts = [
            f
            for f in self._anchor_facts()
            if all(self._term_for(p) is not None for p in f.participants)
        ]
        if not facts:
            return None
        fact = self.rng.choice(facts)
        body = self._atom_for_fact(fact)
        if body is None:
            return None
        truth = self._verify_polar(body)
        if truth is not True:
            return None
        if self.rng.random() < 0.10:
            # Connective variety: a doubly-wrapped version is still true.
            body = Not(Not(body))
            if self._verify_polar(body) is not True:
                return None
        return body, True

    def build_polar_pair(self) -> Optional[tuple[Formula, bool]]:
        """Type atoms for two bound people plus a relationship between them."""
        bound = self._bound_entities()
        people = [
            (label, ent)
            for label, ent in sorted(bound.items())
            if self.ont.subtype_of(self.kb.entities[ent].object_type, "person")
        ]
        if len(people) < 2:
            return None
        (la, ea), (lb, eb) = self.rng.sample(people, 2)
        type_a = self.dist.choose(_entity_type_options(self.kb, ea), self.rng)
        type_b = self.dist.choose(_entity_type_options(self.kb, eb), self.rng)
        rel_atom: Optional[Atom] = None
        stored = [
            f
            for f in self.kb.facts_matching(participants=[ea, eb])
            if self.ont.get(f.predicate) is not None
            and self.ont.get(f.predicate).category in ("relationship", "behavior")
        ]
        if stored and self.rng.random() < 0.5:
            fact = self.rng.choice(stored)
            t = _pick_time_in(self.rng, fact.start, fact.end)
            rel_atom = Atom(
                fact.predicate, (ContextRef(la), ContextRef(lb)), time=SceneTime(t)
            )
        else:
            rel = self.rng.choice(["clear-line-of-sight", "near"])
            lo, hi = self.kb.span
            t = _pick_time_in(self.rng, lo, hi)
            rel_atom = Atom(rel, (ContextRef(la), ContextRef(lb)), time=SceneTime(t))
        body = And(
            (
                Atom(type_a, (ContextRef(la),)),
                Atom(type_b, (ContextRef(lb),)),
                rel_atom,
            )
        )
        truth = self._verify_polar(body)
        if truth is None:
            return None
        return body, truth

    def build_polar_exists(self) -> Optional[tuple[Formula, bool]]:
        """Partner queries: exists an object of some type interacting with a
        bound entity (the ball-catching pattern)."""
        bound_entities = set(self.ctx.bindings.values())
        candidates = []
        for fact in self._anchor_facts():
            pred = self.ont.get(fact.predicate)
            if pred is None or pred.entity_arity != 2 or pred.has_value_slot:
                continue
            for i, participant in enumerate(fact.participants):
                if participant not in bound_entities:
                    other = fact.participants[1 - i]
                    if other in bound_entities:
                        candidates.append((fact, i))
        if not candidates:
            return None
        fact, free_idx = self.rng.choice(candidates)
        pred = self.ont.get(fact.predicate)
        free_entity = fact.participants[free_idx]
        guard_type = self.dist.choose(
            _entity_type_options(self.kb, free_entity), self.rng
        )
        var = "x"
        args: list = [None, None]
        args[free_idx] = Var(var)
        bound_term = self._term_for(fact.participants[1 - free_idx])
        if bound_term is None:
            return None
        args[1 - free_idx] = bound_term
        t = _pick_time_in(self.rng, fact.start, fact.end)
        time = SceneTime(t) if pred.supports_time else None
        body = Exists(
            var,
            And(
                (
                    Atom(guard_type, (Var(var),)),
                    Atom(fact.predicate, tuple(args), time=time),
                )
            ),
        )
        truth = self._verify_polar(body)
        if truth is not True:
            return None
        return body, True

    def build_count(self, want_false: bool) -> Optional[tuple[Formula, bool]]:
        present_types = sorted(
            {
                opt
                for ent in self.kb.entities.values()
                for opt in _entity_type_options_type(self.ont, ent.object_type)
            }
        )
        if not present_types:
            return None
        type_name = self.dist.choose(present_types, self.rng)
        body = Atom(type_name, (Var("x"),))
        m = count_value(self.kb, self.ctx, "x", body, self.geom)
        rng = self.rng
        if not want_false:
            choices = [("=", m), (">=", max(0, m - rng.randint(0, 1))), ("<=", m + rng.randint(0, 2))]
            if m > 0:
                choices.append((">", m - 1))
            op, rhs = rng.choice(choices)
        else:
            choices = [("=", m + 1 + rng.randint(0, 2)), (">", m), (">=", m + 1), ("<", 0)]
            if m > 0:
                choices.append(("<=", m - 1))
                choices.append(("<", m))
            op, rhs = rng.choice(choices)
        rhs = max(0, rhs)
        formula = CountCmp("x", body, op, rhs)
        truth = self._verify_polar(formula)
        if truth is None or truth == want_false:
            return None
        return formula, truth

    def build_forall_negative(self) -> Optional[tuple[Formula, bool]]:
        """A universal claim engineered to be false: all entities of a type
        satisfy some stored predicate that at least one of them misses."""
        rng = self.rng
        action_preds = [
            p.name
            for p in self.ont.by_category("action")
            if p.entity_arity == 1 and not p.has_value_slot
        ]
        types = sorted(
            {self.kb.entities[e].object_type for e in self.kb.entities}
        )
        for _ in range(10):
            type_name = self.dist.choose(types, rng)
            pred_name = rng.choice(action_preds)
            lo, hi = self.kb.span
            t = _pick_time_in(rng, lo, hi)
            body = ForAll(
                "x",
                Or(
                    (
                        Not(Atom(type_name, (Var("x"),))),
                        Atom(pred_name, (Var("x"),), time=SceneTime(t)),
                    )
                ),
            )
            truth = self._verify_polar(body)
            if truth is False:
                return body, False
        return None

    # -- negative sampling ----------------------------------------------------

    def sample_negative(self, body: Formula) -> Optional[Formula]:
        """Perturb exactly one of {predicate, argument, time point} and accept
        only if the engine re-verifies the result as false."""
        rng = self.rng
        strategies = ["predicate", "argument", "time"]
        rng.shuffle(strategies)
        for strategy in strategies:
            for _ in range(self.cfg.retry_budget // 3):
                mutated = self._mutate(body, strategy)
                if mutated is None:
                    break
                if self._verify_polar(mutated) is False:
                    return mutated
        return None

    def _mutate(self, body: Formula, strategy: str) -> Optional[Formula]:
        rng = self.rng
        atoms = list(iter_atoms(body))
        if not atoms:
            return None
        if strategy == "predicate":
            mutable = []
            for atom in atoms:
                pred = self.ont.get(atom.pred)
                if pred is None or pred.derived:
                    continue
                peers = [
                    p.name
                    for p in self.ont.by_category(pred.category)
                    if p.name != pred.name
                    and p.arg_roles == pred.arg_roles
                    and not p.derived
                    and (atom.time is None or _time_ok(p, atom.time))
                ]
                if peers:
                    mutable.append((atom, peers))
            if not mutable:
                return None
            atom, peers = rng.choice(mutable)
            replacement = Atom(rng.choice(peers), atom.args, atom.time, atom.location)
            return _replace_atom(body, atom, replacement)
        if strategy == "argument":
            labels = sorted(self.ctx.bindings)
            if len(labels) < 2:
                return None
            mutable = [
                a
                for a in atoms
                if any(isinstance(t, ContextRef) for t in a.args)
            ]
            if not mutable:
                return None
            atom = rng.choice(mutable)
            idx = rng.choice(
                [i for i, t in enumerate(atom.args) if isinstance(t, ContextRef)]
            )
            current = atom.args[idx]
            others = [l for l in labels if l != current.label]
            if not others:
                return None
            new_args = list(atom.args)
            new_args[idx] = ContextRef(rng.choice(others))
            return _replace_atom(body, atom, Atom(atom.pred, tuple(new_args), atom.time, atom.location))
        if strategy == "time":
            mutable = [a for a in atoms if isinstance(a.time, SceneTime)]
            if not mutable:
                return None
            atom = rng.choice(mutable)
            lo, hi = self.kb.span
            t = _pick_time_in(rng, lo, hi)
            return _replace_atom(
                body, atom, Atom(atom.pred, atom.args, SceneTime(t), atom.location)
            )
        return None

    # -- non-polar builders -----------------------------------------------------

    def build_what(self) -> Optional[tuple[Query, Answer]]:
        bound_entities = set(self.ctx.bindings.values())
        candidates = []
        for fact in self._anchor_facts():
            pred = self.ont.get(fact.predicate)
            if pred is None or pred.entity_arity != 2 or pred.has_value_slot:
                continue
            if not pred.supports_time:
                continue
            a, b = fact.participants
            if a in bound_entities and b not in bound_entities:
                candidates.append(fact)
        if not candidates:
            return None
        fact = self.rng.choice(candidates)
        anchor_term = self._term_for(fact.participants[0])
        if anchor_term is None:
            return None
        t = _pick_time_in(self.rng, fact.start, fact.end)
        body = Exists(
            "x",
            Atom(fact.predicate, (anchor_term, Var("x")), time=SceneTime(t)),
        )
        q = Query(id=self._qid(), kind="what", body=body, target="x")
        out = answer_query(self.kb, self.ctx, q, self.geom)
        if not out.is_value:
            self._qnum -= 1
            return None
        return q, out.answer

    def build_when(self) -> Optional[tuple[Query, Answer]]:
        facts = [
            f
            for f in self._anchor_facts()
            if all(self._term_for(p) is not None for p in f.participants)
            and f.end > f.start
        ]
        if not facts:
            return None
        fact = self.rng.choice(facts)
        atom = self._atom_for_fact(fact, with_time=False)
        if atom is None:
            return None
        target = None
        for term in atom.args if isinstance(atom, Atom) else ():
            if isinstance(term, ContextRef):
                target = term.label
                break
        if target is None:
            return None
        q = Query(id=self._qid(), kind="when", body=atom, target=target)
        out = answer_query(self.kb, self.ctx, q, self.geom)
        if not out.is_value:
            self._qnum -= 1
            return None
        return q, out.answer

    def build_where(self) -> Optional[tuple[Query, Answer]]:
        bound = self._bound_entities()
        candidates = []
        for label, ent in sorted(bound.items()):
            for fact in self.kb.facts_matching(participants=[ent]):
                pred = self.ont.get(fact.predicate)
                if (
                    pred is not None
                    and pred.supports_interval
                    and pred.category != "object"
                    and not pred.has_value_slot
                    and fact.end > fact.start
                ):
                    candidates.append((label, fact))
        if not candidates:
            return None
        label, fact = self.rng.choice(candidates)
        a = _pick_time_in(self.rng, fact.start, fact.end)
        b = _pick_time_in(self.rng, a, fact.end)
        if b <= a:
            b = min(fact.end, a + 1.0)
        if b <= a:
            return None
        body = Atom(
            fact.predicate,
            (ContextRef(label),),
            time=Interval(SceneTime(a), SceneTime(b)),
        )
        q = Query(id=self._qid(), kind="where", body=body, target=label)
        out = answer_query(self.kb, self.ctx, q, self.geom)
        if not out.is_value:
            self._qnum -= 1
            return None
        return q, out.answer

    # -- storyline assembly ------------------------------------------------------

    def build(self, false_definition: bool) -> StoryLine:
        rng = self.rng
        target = rng.randint(*self.cfg.queries_per_storyline)
        if false_definition:
            self.add_false_definition()
            self._fill_scene_level(target)
        else:
            definable = self._definable_entities()
            people = [
                e
                for e in definable
                if self.ont.subtype_of(self.kb.entities[e].object_type, "person")
            ]
            n_defs = min(len(definable), rng.choice([1, 2, 2, 3]))
            anchors: list[str] = []
            pool = people if len(people) >= n_defs else definable
            anchors = rng.sample(pool, n_defs)
            for ent in anchors:
                self.add_definition(ent)
            self._fill_follow_ups(target)
        return StoryLine(
            storyline_id=f"{self.scene_id}-{self.index:03d}", queries=self.queries
        )

    def _fill_follow_ups(self, target: int) -> None:
        rng = self.rng
        attempts = 0
        while len(self.queries) < target and attempts < target * 30:
            attempts += 1
            roll = rng.random()
            if roll < 0.62:
                self._try_polar()
            elif roll < 0.72:
                want_false = self.sign.want_false(rng)
                built = self.build_count(want_false)
                if built is not None:
                    body, truth = built
                    self._emit(
                        Query(id=self._qid(), kind="polar", body=body),
                        BoolAnswer(truth),
                    )
            elif roll < 0.82:
                built = self.build_what()
                if built is not None:
                    self._emit(*built)
            elif roll < 0.92:
                built = self.build_when()
                if built is not None:
                    self._emit(*built)
            else:
                built = self.build_where()
                if built is not None:
                    self._emit(*built)

    def _try_polar(self) -> None:
        rng = self.rng
        want_false = self.sign.want_false(rng)
        roll = rng.random()
        built: Optional[tuple[Formula, bool]] = None
        if roll < 0.55:
            built = self.build_polar_pair()
            if built is not None and built[1] != (not want_false):
                # Natural truth disagrees with the wanted sign; perturb when a
                # false query was wanted, otherwise drop and retry.
                if want_false and built[1]:
                    mutated = self.sample_negative(built[0])
                    built = (mutated, False) if mutated is not None else None
                elif not want_false and not built[1]:
                    built = None
        elif roll < 0.88:
            base = self.build_polar_plain()
            if base is not None:
                if want_false:
                    mutated = self.sample_negative(base[0])
                    built = (mutated, False) if mutated is not None else None
                else:
                    built = base
        else:
            base = self.build_polar_exists()
            if base is not None:
                if want_false:
                    if rng.random() < 0.25:
                        built = self.build_forall_negative()
                    else:
                        mutated = self.sample_negative(base[0])
                        built = (mutated, False) if mutated is not None else None
                else:
                    built = base
        if built is not None:
            body, truth = built
            self._emit(
                Query(id=self._qid(), kind="polar", body=body), BoolAnswer(truth)
            )

    def _fill_scene_level(self, target: int) -> None:
        """Queries for a story line whose definition failed: counting and
        quantified queries that never reference the failed label."""
        rng = self.rng
        attempts = 0
        while len(self.queries) < target and attempts < target * 30:
            attempts += 1
            want_false = self.sign.want_false(rng)
            if rng.random() < 0.6:
                built = self.build_count(want_false)
            else:
                built = self._build_exists_scene(want_false)
            if built is not None:
                body, truth = built
                self._emit(
                    Query(id=self._qid(), kind="polar", body=body), BoolAnswer(truth)
                )

    def _build_exists_scene(self, want_false: bool) -> Optional[tuple[Formula, bool]]:
        rng = self.rng
        stored = [
            f
            for f in self.kb.facts
            if not f.fact_id.startswith("type:")
            and self.ont.get(f.predicate) is not None
            and self.ont.get(f.predicate).entity_arity == 1
            and not self.ont.get(f.predicate).has_value_slot
        ]
        if not stored:
            return None
        fact = rng.choice(stored)
        pred = self.ont.get(fact.predicate)
        subject = fact.participants[0]
        guard = self.dist.choose(_entity_type_options(self.kb, subject), rng)
        if want_false:
            lo, hi = self.kb.span
            t = _pick_time_in(rng, lo, hi)
        else:
            t = _pick_time_in(rng, fact.start, fact.end)
        time = SceneTime(t) if pred.supports_time else None
        body = Exists(
            "x",
            And(
                (
                    Atom(guard, (Var("x"),)),
                    Atom(fact.predicate, (Var("x"),), time=time),
                )
            ),
        )
        truth = self._verify_polar(body)
        if truth is None or truth == want_false:
            return None
        return body, truth


def _entity_type_options_type(ont: Ontology, name: str) -> list[str]:
    options = [name]
    node = name
    while True:
        parent = ont.parent_of(node)
        if parent is None:
            break
        options.append(parent)
        node = parent
    return options


def _time_ok(pred, time) -> bool:
    if isinstance(time, Interval):
        return pred.supports_interval
    return pred.supports_time


def _replace_atom(body: Formula, old: Atom, new: Atom) -> Formula:
    """Replace one atom occurrence (by identity) in a formula tree."""
    if body is old:
        return new
    if isinstance(body, (And, Or)):
        children = tuple(_replace_atom(c, old, new) for c in body.children)
        return And(children) if isinstance(body, And) else Or(children)
    if isinstance(body, Not):
        return Not(_replace_atom(body.child, old, new))
    if isinstance(body, Exists):
        return Exists(body.var, _replace_atom(body.child, old, new))
    if isinstance(body, ForAll):
        return ForAll(body.var, _replace_atom(body.child, old, new))
    if isinstance(body, CountCmp):
        return CountCmp(body.var, _replace_atom(body.child, old, new), body.op, body.rhs)
    return body


def generate_false_definition_storyline(
    kb: KnowledgeBase,
    ont: Ontology,
    rng: random.Random,
    cfg: GenConfig = GenConfig(),
    scene_id: str = "scene",
    index: int = 0,
    geom: GeometryConfig = DEFAULT_GEOMETRY,
) -> StoryLine:
    """One story line whose leading definition targets an empty region (ground
    truth false); the remaining queries sample scene-level predicates and never
    reference the failed label."""
    builder = _StorylineBuilder(
        kb, ont, cfg, rng,
        _DistributionSteering(ont, cfg.object_weights),
        _SignSteering(cfg.negative_fraction),
        scene_id, index, geom,
    )
    return builder.build(false_definition=True)


def kb_fingerprint(kb: KnowledgeBase) -> str:
    h = hashlib.sha256()
    for ent_id in sorted(kb.entities):
        ent = kb.entities[ent_id]
        h.update(f"E|{ent.entity_id}|{ent.object_type}|{ent.static}\n".encode())
    for fact in sorted(kb.facts, key=lambda f: f.fact_id):
        h.update(
            f"F|{fact.fact_id}|{fact.predicate}|{','.join(fact.participants)}"
            f"|{fact.value}|{fact.start}|{fact.end}\n".encode()
        )
    return h.hexdigest()


def generate_suite(
    kbs: Mapping[str, KnowledgeBase],
    ont: Ontology,
    cfg: GenConfig = GenConfig(),
    geom: GeometryConfig = DEFAULT_GEOMETRY,
    suite_id: str = "suite",
) -> EvaluationSuite:
    """Generate a full suite across the given scenes (ordered mapping).

    Deterministic: per-storyline RNG streams are derived from (seed, scene,
    index); steering state advances in a fixed serial order.
    """
    dist = _DistributionSteering(ont, cfg.object_weights)
    sign = _SignSteering(cfg.negative_fraction)
    suite = EvaluationSuite(suite_id=suite_id)
    checksum = hashlib.sha256()
    for scene_id, kb in kbs.items():
        if not kb.entities:
            raise GenerationError(f"scene {scene_id!r}: empty knowledge base")
        checksum.update(kb_fingerprint(kb).encode())
        block = SceneBlock(scene_id=scene_id)
        for index in range(cfg.storylines_per_scene):
            rng = random.Random(f"{cfg.seed}:{scene_id}:{index}")
            false_def = rng.random() < cfg.false_definition_fraction
            builder = _StorylineBuilder(
                kb, ont, cfg, rng, dist, sign, scene_id, index, geom
            )
            block.storylines.append(builder.build(false_def))
        suite.scenes.append(block)
    suite.meta = {
        "kb_checksum": checksum.hexdigest(),
        "gen.seed": str(cfg.seed),
        "gen.storylines_per_scene": str(cfg.storylines_per_scene),
        "gen.queries_min": str(cfg.queries_per_storyline[0]),
        "gen.queries_max": str(cfg.queries_per_storyline[1]),
        "gen.negative_fraction": repr(cfg.negative_fraction),
        "gen.false_definition_fraction": repr(cfg.false_definition_fraction),
        "gen.person_weight": repr(dict(cfg.object_weights).get("person", 0.0)),
    }
    return suite
