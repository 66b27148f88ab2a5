import filecmp
import random

import pytest

from scenequery import synth
from scenequery.engine import StoryContext, answer_query
from scenequery.generator import (
    GenConfig,
    _StorylineBuilder,
    _DistributionSteering,
    _SignSteering,
    generate_suite,
)
from scenequery.geometry import DEFAULT_GEOMETRY
from scenequery.kb import ingest_annotations
from scenequery.query_model import (
    Atom,
    BoolAnswer,
    ContextRef,
    SceneTime,
    iter_atoms,
)
from scenequery.suite import suite_predicate_stats, validate_suite, write_suite


@pytest.fixture(scope="module")
def garden_kbs(tmp_path_factory):
    from scenequery.ontology import default_ontology

    ont = default_ontology()
    root = tmp_path_factory.mktemp("gen_scenes")
    kbs = {}
    for script in synth.builtin_scenarios()[:2]:  # garden + office keep it fast
        synth.generate_scene(script, root / script.scene_id, ont)
        kbs[script.scene_id] = ingest_annotations(root / script.scene_id, ont)
    return kbs


SMALL = GenConfig(seed=11, storylines_per_scene=5, queries_per_storyline=(10, 14))


def test_suite_structure_and_validation(garden_kbs, ont):
    suite = generate_suite(garden_kbs, ont, SMALL)
    assert validate_suite(suite, ont) == []
    assert suite.storyline_count() == 10
    for scene in suite.scenes:
        for sl in scene.storylines:
            assert sl.queries, "empty storyline"
            assert sl.queries[0].is_definition


def test_ground_truths_reverify(garden_kbs, ont):
    suite = generate_suite(garden_kbs, ont, SMALL)
    kb_by_scene = garden_kbs
    for scene in suite.scenes:
        kb = kb_by_scene[scene.scene_id]
        for sl in scene.storylines:
            ctx = StoryContext()
            for sq in sl.queries:
                out = answer_query(kb, ctx, sq.query, DEFAULT_GEOMETRY)
                assert out.is_value, (sq.query_id, out.unable_reason)
                assert out.answer == sq.truth, sq.query_id


def test_generated_queries_round_trip(garden_kbs, ont):
    from scenequery.query_model import parse_query_xml, serialize_query_xml

    suite = generate_suite(garden_kbs, ont, SMALL)
    for _, _, sq in suite.iter_queries():
        text = serialize_query_xml(sq.query)
        assert parse_query_xml(text) == sq.query
        assert serialize_query_xml(parse_query_xml(text)) == text


def test_suite_loads_back_equal(garden_kbs, ont, tmp_path):
    from scenequery.suite import load_suite

    suite = generate_suite(garden_kbs, ont, SMALL, suite_id="reload")
    write_suite(suite, tmp_path / "reload")
    loaded = load_suite(tmp_path / "reload", ont)
    assert loaded.suite_id == "reload"
    original = list(suite.iter_queries())
    reloaded = list(loaded.iter_queries())
    assert len(original) == len(reloaded)
    for (scene_a, sl_a, sq_a), (scene_b, sl_b, sq_b) in zip(original, reloaded):
        assert (scene_a, sl_a) == (scene_b, sl_b)
        assert sq_a.query == sq_b.query
        assert sq_a.truth == sq_b.truth


def test_negative_fraction_zero_all_true(garden_kbs, ont):
    cfg = GenConfig(
        seed=5,
        storylines_per_scene=4,
        queries_per_storyline=(8, 10),
        negative_fraction=0.0,
        false_definition_fraction=0.0,
    )
    suite = generate_suite(garden_kbs, ont, cfg)
    for _, _, sq in suite.iter_queries():
        if sq.query.kind == "polar":
            assert sq.truth == BoolAnswer(True)


def test_deterministic_suite_bytes(garden_kbs, ont, tmp_path):
    s1 = generate_suite(garden_kbs, ont, SMALL)
    s2 = generate_suite(garden_kbs, ont, SMALL)
    write_suite(s1, tmp_path / "a")
    write_suite(s2, tmp_path / "b")

    def equal(a, b):
        cmp = filecmp.dircmp(a, b)
        if cmp.left_only or cmp.right_only or cmp.diff_files:
            return False
        return all(equal(a / s, b / s) for s in cmp.common_dirs)

    assert equal(tmp_path / "a", tmp_path / "b")


def test_false_definition_storylines(garden_kbs, ont):
    cfg = GenConfig(
        seed=23,
        storylines_per_scene=6,
        queries_per_storyline=(6, 8),
        false_definition_fraction=1.0,
    )
    suite = generate_suite(garden_kbs, ont, cfg)
    for scene in suite.scenes:
        for sl in scene.storylines:
            first = sl.queries[0]
            assert first.is_definition
            assert first.truth == BoolAnswer(False)
            failed_label = first.query.defines_label
            for sq in sl.queries[1:]:
                assert failed_label not in sq.labels_required


def test_false_definition_storyline_direct(garden_kbs, ont):
    from scenequery.generator import generate_false_definition_storyline

    scene_id = sorted(garden_kbs)[0]
    kb = garden_kbs[scene_id]
    rng = random.Random(8)
    sl = generate_false_definition_storyline(
        kb, ont, rng, SMALL, scene_id=scene_id, index=0
    )
    first = sl.queries[0]
    assert first.is_definition
    assert first.truth == BoolAnswer(False)
    label = first.query.defines_label
    for sq in sl.queries[1:]:
        assert label not in sq.labels_required
    # Follow-ups carry engine-computed ground truths that re-verify.
    ctx = StoryContext()
    for sq in sl.queries:
        out = answer_query(kb, ctx, sq.query, DEFAULT_GEOMETRY)
        assert out.is_value and out.answer == sq.truth


def test_sample_negative_perturbs_exactly_one_thing(garden_kbs, ont):
    scene_id = sorted(garden_kbs)[0]
    kb = garden_kbs[scene_id]
    rng = random.Random(3)
    builder = _StorylineBuilder(
        kb, ont, SMALL, rng,
        _DistributionSteering(ont, {"person": 0.559}),
        _SignSteering(0.5), scene_id, 0, DEFAULT_GEOMETRY,
    )
    anchors = builder._definable_entities()[:2]
    for ent in anchors:
        assert builder.add_definition(ent)
    made = 0
    for _ in range(40):
        base = builder.build_polar_plain()
        if base is None:
            continue
        body, truth = base
        assert truth is True
        mutated = builder.sample_negative(body)
        if mutated is None:
            continue
        made += 1
        assert builder._verify_polar(mutated) is False
        base_atoms = list(iter_atoms(body))
        new_atoms = list(iter_atoms(mutated))
        assert len(base_atoms) == len(new_atoms)
        diffs = [
            (a, b) for a, b in zip(base_atoms, new_atoms) if a != b
        ]
        assert len(diffs) == 1
        a, b = diffs[0]
        changed = sum(
            [a.pred != b.pred, a.args != b.args, a.time != b.time]
        )
        assert changed == 1
    assert made >= 5


def test_kind_specific_negatives(garden_kbs, ont):
    # male(P1) true -> a predicate perturbation must flip to a co-category
    # predicate of identical shape, e.g. female(P1).
    scene_id = sorted(garden_kbs)[0]
    kb = garden_kbs[scene_id]
    males = kb.entities_of_type("male")
    assert males
    rng = random.Random(9)
    builder = _StorylineBuilder(
        kb, ont, SMALL, rng,
        _DistributionSteering(ont, {"person": 0.559}),
        _SignSteering(0.5), scene_id, 0, DEFAULT_GEOMETRY,
    )
    builder.ctx.bind("p1", males[0])
    builder.labels.append("p1")
    body = Atom("male", (ContextRef("p1"),))
    assert builder._verify_polar(body) is True
    mutated = builder._mutate(body, "predicate")
    assert mutated is not None
    assert mutated.pred != "male"
    # catching(F1, b) at the catch instant flips false when the time moves.
    catch = kb.facts_matching("catching")[0]
    builder.ctx.bind("p2", catch.participants[0])
    atom = Atom(
        "catching",
        (ContextRef("p2"), ContextRef("p1")),
        time=SceneTime(catch.start),
    )
    shifted = builder._mutate(atom, "time")
    assert shifted is not None and shifted.time != atom.time


def test_distribution_and_balance_on_medium_suite(garden_kbs, ont):
    cfg = GenConfig(seed=77, storylines_per_scene=16, queries_per_storyline=(18, 24))
    suite = generate_suite(garden_kbs, ont, cfg)
    stats = suite_predicate_stats(suite, ont)
    total = sum(stats.values())
    assert total >= 400
    share = stats.get("person", 0) / total
    assert 0.509 <= share <= 0.609
    polar = [
        sq.truth.value
        for _, _, sq in suite.iter_queries()
        if sq.query.kind == "polar"
    ]
    false_fraction = polar.count(False) / len(polar)
    assert abs(false_fraction - 0.5) <= 0.04


def test_empty_kb_rejected(ont):
    from scenequery.generator import GenerationError
    from scenequery.kb import KnowledgeBase

    empty = KnowledgeBase(
        ontology=ont, entities=[], cameras=[], observations=[], tracks={}, facts=[]
    )
    with pytest.raises(GenerationError, match="empty"):
        generate_suite({"empty": empty}, ont, SMALL)


def test_suite_validation_catches_defects(garden_kbs, ont, tmp_path):
    import re

    from scenequery.suite import SuiteError, load_suite

    suite = generate_suite(garden_kbs, ont, SMALL, suite_id="tampered")
    write_suite(suite, tmp_path / "tampered")
    scene_dir = tmp_path / "tampered" / suite.scenes[0].scene_id
    target = sorted(scene_dir.glob("storyline_*.xml"))[0]
    text = target.read_text()

    # Ground-truth kind that disagrees with the query kind.
    bad_kind = re.sub(
        r'<ground-truth type="bool" value="(true|false)"/>',
        '<ground-truth type="label" value="ball"/>',
        text,
        count=1,
    )
    target.write_text(bad_kind)
    with pytest.raises(SuiteError, match="ground truth kind"):
        load_suite(tmp_path / "tampered", ont)

    # A context label used before any definition introduces it.
    orphan = text.replace("<entity>p1</entity>", "<entity>p9</entity>")
    target.write_text(orphan)
    with pytest.raises(SuiteError, match="not defined earlier"):
        load_suite(tmp_path / "tampered", ont)


def test_suite_meta_echoes_config(garden_kbs, ont):
    suite = generate_suite(garden_kbs, ont, SMALL, suite_id="meta-check")
    assert suite.meta["gen.seed"] == "11"
    assert "kb_checksum" in suite.meta
    assert suite.suite_id == "meta-check"
