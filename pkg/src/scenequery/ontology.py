"""Closed predicate vocabulary shared by queries, the knowledge base, and generation.

The vocabulary is loaded from a line-oriented declaration file rather than
hard-coded, so deployments can trim or extend it without touching code.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

CATEGORIES = frozenset(
    {"object", "part", "attribute", "property", "relationship", "action", "behavior"}
)

# Argument-role expected types are either an object predicate name, "any"
# (any entity), or "value" (a literal slot, e.g. a color name).
ANY_ENTITY = "any"
VALUE_SLOT = "value"

_FLAGS = frozenset({"time", "interval", "location", "derived"})


class OntologyError(ValueError):
    """Raised for malformed or inconsistent vocabulary declarations."""


@dataclass(frozen=True)
class PredicateDef:
    """One predicate: its category, argument roles, and supported modifiers."""

    name: str
    category: str
    arg_roles: tuple[tuple[str, str], ...]
    supports_time: bool = False
    supports_interval: bool = False
    supports_location: bool = False
    derived: bool = False

    @property
    def arity(self) -> int:
        return len(self.arg_roles)

    @property
    def entity_arity(self) -> int:
        """Argument slots that take entities (excludes literal value slots)."""
        return sum(1 for _, t in self.arg_roles if t != VALUE_SLOT)

    @property
    def has_value_slot(self) -> bool:
        return any(t == VALUE_SLOT for _, t in self.arg_roles)


class Ontology:
    """Immutable predicate registry with an object-type hierarchy.

    Safe for unsynchronized concurrent reads once constructed.
    """

    def __init__(
        self,
        predicates: dict[str, PredicateDef],
        parents: dict[str, str],
    ) -> None:
        self._predicates = dict(predicates)
        self._parents = dict(parents)
        self._validate()
        self._subtypes = self._close_subtypes()

    def _validate(self) -> None:
        for pred in self._predicates.values():
            if pred.category not in CATEGORIES:
                raise OntologyError(f"{pred.name}: unknown category {pred.category!r}")
            if pred.arity < 1:
                raise OntologyError(f"{pred.name}: arity must be >= 1")
            if pred.derived and pred.category not in ("relationship", "property"):
                raise OntologyError(
                    f"{pred.name}: derived predicates must be relationships or properties"
                )
        for child, parent in self._parents.items():
            for name in (child, parent):
                pred = self._predicates.get(name)
                if pred is None:
                    raise OntologyError(f"hierarchy references unknown predicate {name!r}")
                if pred.category != "object":
                    raise OntologyError(f"hierarchy node {name!r} is not an object predicate")
        # Cycle check: follow parent links from every node.
        for start in self._parents:
            seen = {start}
            node = start
            while node in self._parents:
                node = self._parents[node]
                if node in seen:
                    raise OntologyError(f"hierarchy cycle through {node!r}")
                seen.add(node)

    def _close_subtypes(self) -> dict[str, frozenset[str]]:
        children: dict[str, set[str]] = {}
        for child, parent in self._parents.items():
            children.setdefault(parent, set()).add(child)
        closed: dict[str, frozenset[str]] = {}

        def descend(name: str) -> frozenset[str]:
            if name in closed:
                return closed[name]
            acc = {name}
            for ch in children.get(name, ()):
                acc |= descend(ch)
            closed[name] = frozenset(acc)
            return closed[name]

        for name, pred in self._predicates.items():
            if pred.category == "object":
                descend(name)
        return closed

    def get(self, name: str) -> PredicateDef | None:
        """Exact-name lookup; None for unknown names."""
        return self._predicates.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._predicates

    @property
    def predicates(self) -> dict[str, PredicateDef]:
        return dict(self._predicates)

    def names(self) -> tuple[str, ...]:
        return tuple(sorted(self._predicates))

    def object_types(self) -> tuple[str, ...]:
        return tuple(
            sorted(n for n, p in self._predicates.items() if p.category == "object")
        )

    def by_category(self, category: str) -> tuple[PredicateDef, ...]:
        return tuple(
            p for _, p in sorted(self._predicates.items()) if p.category == category
        )

    def parent_of(self, name: str) -> str | None:
        return self._parents.get(name)

    def subtype_of(self, name: str, ancestor: str) -> bool:
        """Reflexive-transitive subtype test over the object hierarchy."""
        if name == ancestor:
            return True
        node = name
        while node in self._parents:
            node = self._parents[node]
            if node == ancestor:
                return True
        return False

    def subtypes(self, name: str) -> frozenset[str]:
        """All object predicates at or below `name` (includes `name` itself)."""
        return self._subtypes.get(name, frozenset({name}))

    def validate_atom(
        self,
        pred_name: str,
        arg_count: int,
        has_time: bool = False,
        has_interval: bool = False,
        has_location: bool = False,
    ) -> list[str]:
        """Return violations for one predicate application; empty list means ok."""
        pred = self._predicates.get(pred_name)
        if pred is None:
            return [f"unknown predicate {pred_name!r}"]
        violations = []
        if arg_count != pred.arity:
            violations.append(
                f"{pred_name}: expected {pred.arity} argument(s), got {arg_count}"
            )
        if has_time and not pred.supports_time:
            violations.append(f"{pred_name}: time modifier not supported")
        if has_interval and not pred.supports_interval:
            violations.append(f"{pred_name}: interval modifier not supported")
        if has_location and not pred.supports_location:
            violations.append(f"{pred_name}: location modifier not supported")
        return violations


def parse_ontology(text: str) -> Ontology:
    """Parse a declaration document.

    One predicate per line: ``name|category|arity|role:type,...|flags`` with
    flags drawn from {time, interval, location, derived}; hierarchy lines are
    ``name <: parent``; ``#`` starts a comment.
    """
    predicates: dict[str, PredicateDef] = {}
    parents: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "<:" in line:
            pieces = [p.strip() for p in line.split("<:")]
            if len(pieces) != 2 or not all(pieces):
                raise OntologyError(f"line {lineno}: malformed hierarchy line {raw!r}")
            child, parent = pieces
            if child in parents:
                raise OntologyError(f"line {lineno}: duplicate parent for {child!r}")
            parents[child] = parent
            continue
        fields = line.split("|")
        if len(fields) != 5:
            raise OntologyError(f"line {lineno}: expected 5 fields, got {len(fields)}")
        name, category, arity_s, roles_s, flags_s = (f.strip() for f in fields)
        if not name:
            raise OntologyError(f"line {lineno}: empty predicate name")
        if name in predicates:
            raise OntologyError(f"line {lineno}: duplicate predicate {name!r}")
        try:
            arity = int(arity_s)
        except ValueError:
            raise OntologyError(f"line {lineno}: bad arity {arity_s!r}") from None
        roles: list[tuple[str, str]] = []
        if roles_s:
            for chunk in roles_s.split(","):
                if ":" not in chunk:
                    raise OntologyError(f"line {lineno}: bad role spec {chunk!r}")
                role, expected = chunk.split(":", 1)
                roles.append((role.strip(), expected.strip()))
        if arity != len(roles):
            raise OntologyError(
                f"line {lineno}: arity {arity} does not match {len(roles)} role(s)"
            )
        flags = {f.strip() for f in flags_s.split(",") if f.strip()}
        unknown = flags - _FLAGS
        if unknown:
            raise OntologyError(f"line {lineno}: unknown flag(s) {sorted(unknown)}")
        predicates[name] = PredicateDef(
            name=name,
            category=category,
            arg_roles=tuple(roles),
            supports_time="time" in flags,
            supports_interval="interval" in flags,
            supports_location="location" in flags,
            derived="derived" in flags,
        )
    return Ontology(predicates, parents)


def load_ontology(path: str | Path) -> Ontology:
    return parse_ontology(Path(path).read_text(encoding="utf-8"))


def default_ontology() -> Ontology:
    """The vocabulary shipped with the package."""
    text = (
        resources.files("scenequery").joinpath("data/ontology.txt").read_text("utf-8")
    )
    return parse_ontology(text)
