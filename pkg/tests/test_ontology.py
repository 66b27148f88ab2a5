import pytest

from scenequery.ontology import OntologyError, default_ontology, parse_ontology


def test_default_ships_person_as_object():
    ont = default_ontology()
    person = ont.get("person")
    assert person is not None
    assert person.category == "object"
    assert person.arity == 1


def test_duplicate_predicate_rejected():
    doc = "person|object|1|self:any|time\nperson|object|1|self:any|time\n"
    with pytest.raises(OntologyError, match="duplicate"):
        parse_ontology(doc)


def test_hierarchy_cycle_rejected():
    doc = (
        "male|object|1|self:any|\n"
        "person|object|1|self:any|\n"
        "male <: person\n"
        "person <: male\n"
    )
    with pytest.raises(OntologyError, match="cycle"):
        parse_ontology(doc)


def test_hierarchy_node_must_be_object():
    doc = (
        "walking|action|1|who:person|time\n"
        "person|object|1|self:any|\n"
        "walking <: person\n"
    )
    with pytest.raises(OntologyError, match="not an object"):
        parse_ontology(doc)


def test_arity_role_mismatch_rejected():
    with pytest.raises(OntologyError, match="arity"):
        parse_ontology("catching|action|2|who:person|time\n")


def test_derived_must_be_relationship_or_property():
    with pytest.raises(OntologyError, match="derived"):
        parse_ontology("floating|action|1|who:person|time,derived\n")


def test_lookup_clear_line_of_sight():
    ont = default_ontology()
    pred = ont.get("clear-line-of-sight")
    assert pred is not None
    assert pred.arity == 2
    assert pred.derived
    assert pred.supports_time


def test_lookup_unknown_absent():
    assert default_ontology().get("flying-saucer") is None


def test_validate_atom_examples():
    ont = default_ontology()
    assert ont.validate_atom("catching", 2, has_time=True) == []
    assert ont.validate_atom("game", 2, has_interval=True) == []
    violations = ont.validate_atom("person", 3)
    assert any("argument" in v for v in violations)
    assert ont.validate_atom("flying-saucer", 1) == ["unknown predicate 'flying-saucer'"]
    assert any(
        "location" in v for v in ont.validate_atom("catching", 2, has_location=True)
    )


def test_load_is_deterministic():
    text = "a|object|1|self:any|time\nb|object|1|self:any|\nb <: a\n"
    o1, o2 = parse_ontology(text), parse_ontology(text)
    assert o1.predicates == o2.predicates
    assert o1.subtypes("a") == o2.subtypes("a")


def test_self_consistency_every_predicate_validates():
    ont = default_ontology()
    for pred in ont.predicates.values():
        assert (
            ont.validate_atom(
                pred.name,
                pred.arity,
                has_time=pred.supports_time,
                has_interval=False,
                has_location=pred.supports_location,
            )
            == []
        )
        # Interval and instant modifiers are exclusive; check interval alone.
        if pred.supports_interval:
            assert ont.validate_atom(pred.name, pred.arity, has_interval=True) == []


def test_subtype_closure():
    ont = default_ontology()
    assert ont.subtype_of("male", "person")
    assert ont.subtype_of("person", "person")
    assert not ont.subtype_of("person", "male")
    assert ont.subtypes("person") == frozenset({"person", "male", "female"})
    assert ont.subtypes("vehicle") >= frozenset({"car", "automobile", "vehicle"})
    # Transitive and irreflexive off the diagonal: no proper ancestor chain
    # returns to its start (guaranteed by the cycle check at load).
    for name in ont.object_types():
        parent = ont.parent_of(name)
        while parent is not None:
            assert parent != name
            parent = ont.parent_of(parent)
