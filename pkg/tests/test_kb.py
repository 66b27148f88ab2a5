import pytest

from scenequery.kb import (
    AnnotationError,
    Box,
    Entity,
    FactNode,
    KnowledgeBase,
    ingest_annotations,
)
from scenequery.query_model import Interval, SceneTime, ViewFrame


def test_ingest_garden_counts(garden_dir, garden_kb):
    # The fixture declares 2 people, 1 ball, 1 wall across 2 cameras.
    entity_rows = [
        line
        for line in (garden_dir / "entities.tsv").read_text().splitlines()
        if line.strip() and not line.startswith("#")
    ]
    assert len(entity_rows) == 4
    assert len(garden_kb.entities) == 4
    assert len(garden_kb.cameras) == 2
    assert set(garden_kb.entities) == {"P1", "P2", "B1", "W1"}


def test_ingest_rejects_arity_mismatch(tmp_path, garden_dir, ont):
    bad = tmp_path / "bad"
    bad.mkdir()
    for name in ("scene.meta", "cameras.tsv", "entities.tsv", "observations.tsv", "tracks.tsv"):
        (bad / name).write_text((garden_dir / name).read_text())
    (bad / "facts.tsv").write_text("f0\tcatching\tP2\t\t12.0\t12.0\n")
    with pytest.raises(AnnotationError, match="expects 2 participant"):
        ingest_annotations(bad, ont)


def test_ingest_rejects_unknown_entity(tmp_path, garden_dir, ont):
    bad = tmp_path / "bad2"
    bad.mkdir()
    for name in ("scene.meta", "cameras.tsv", "entities.tsv", "observations.tsv", "tracks.tsv"):
        (bad / name).write_text((garden_dir / name).read_text())
    (bad / "facts.tsv").write_text("f0\tcatching\tP2|GHOST\t\t12.0\t12.0\n")
    with pytest.raises(AnnotationError, match="unknown participant"):
        ingest_annotations(bad, ont)


def test_ingest_rejects_nonmonotone_track(tmp_path, garden_dir, ont):
    bad = tmp_path / "bad3"
    bad.mkdir()
    for name in ("scene.meta", "cameras.tsv", "entities.tsv", "observations.tsv", "facts.tsv"):
        (bad / name).write_text((garden_dir / name).read_text())
    (bad / "tracks.tsv").write_text("P1\t1.0\t0\t0\nP1\t1.0\t1\t1\n")
    with pytest.raises(AnnotationError, match="strictly increasing"):
        ingest_annotations(bad, ont)


def test_empty_directory_gives_empty_kb(tmp_path, ont):
    empty = tmp_path / "empty"
    empty.mkdir()
    (empty / "scene.meta").write_text("scene_id=empty\nepoch=0.0\n")
    kb = ingest_annotations(empty, ont)
    assert kb.entities == {}
    assert kb.facts == ()
    assert kb.ontology is ont


def test_facts_matching_point_time(garden_kb):
    hits = garden_kb.facts_matching("catching", ["P2", None], time=SceneTime(12.0))
    assert [(f.predicate, f.participants) for f in hits] == [("catching", ("P2", "B1"))]
    assert garden_kb.facts_matching("catching", ["P1", None], time=SceneTime(12.0)) == []


def test_facts_matching_wildcards_against_scan(garden_kb):
    # Index path must agree with a direct scan of the full fact list.
    got = garden_kb.facts_matching(None, ["P2", None])
    expected = [
        f
        for f in garden_kb.facts
        if len(f.participants) == 2 and f.participants[0] == "P2"
    ]
    assert sorted(f.fact_id for f in got) == sorted(f.fact_id for f in expected)


def test_facts_matching_all_wildcard_returns_every_fact_once(garden_kb):
    got = garden_kb.facts_matching()
    assert len(got) == len(garden_kb.facts)
    assert len({f.fact_id for f in got}) == len(garden_kb.facts)


def test_facts_matching_hierarchy_on_type_facts(garden_kb):
    got = garden_kb.facts_matching("person", ["P2"])
    assert [f.predicate for f in got] == ["female"]


def test_facts_matching_interval_intersection(garden_kb):
    # game holds on [5, 40]; a window overlapping its edge still matches.
    assert garden_kb.facts_matching(
        "game", ["P1", "P2"], time=Interval(SceneTime(39.0), SceneTime(50.0))
    )
    assert not garden_kb.facts_matching(
        "game", ["P1", "P2"], time=Interval(SceneTime(41.0), SceneTime(50.0))
    )


def test_entities_of_type_hierarchy(garden_kb):
    assert garden_kb.entities_of_type("person") == ["P1", "P2"]
    assert garden_kb.entities_of_type("male") == ["P1"]
    males = set(garden_kb.entities_of_type("male"))
    females = set(garden_kb.entities_of_type("female"))
    assert set(garden_kb.entities_of_type("person")) >= males | females


def test_entities_of_type_region(garden_kb):
    # At t=20 P1 stands at (6, 6); a far-away region excludes everyone.
    near_p1 = [(5.0, 5.0), (7.0, 5.0), (7.0, 7.0), (5.0, 7.0)]
    assert garden_kb.entities_of_type("person", SceneTime(20.0), near_p1) == ["P1"]
    empty = [(100.0, 100.0), (101.0, 100.0), (101.0, 101.0), (100.0, 101.0)]
    assert garden_kb.entities_of_type("person", SceneTime(20.0), empty) == []


def test_bbox_at_exact_and_interpolated(ont):
    kb = KnowledgeBase(
        ontology=ont,
        entities=[Entity("E1", "person", False)],
        cameras=[],
        observations=[],
        tracks={},
        facts=[],
    )
    # Bypass camera validation: feed observations directly through the store.
    kb2 = KnowledgeBase(
        ontology=ont,
        entities=[Entity("E1", "person", False)],
        cameras=[_identity_camera("cam1")],
        observations=[
            _obs("E1", "cam1", 10, 0, 0, 10, 10),
            _obs("E1", "cam1", 12, 10, 0, 20, 10),
            _obs("E1", "cam1", 60, 0, 0, 5, 5),
        ],
        tracks={},
        facts=[],
    )
    assert kb2.bbox_at("E1", "cam1", 10) == Box(0, 0, 10, 10)
    assert kb2.bbox_at("E1", "cam1", 11) == Box(5, 0, 15, 10)
    # Gap between frames 12 and 60 exceeds the 30-frame limit.
    assert kb2.bbox_at("E1", "cam1", 30) is None
    assert kb2.bbox_at("E1", "cam1", 5) is None
    assert kb.bbox_at("E1", "nope", 0) is None


def test_position_at_interpolation(ont):
    kb = KnowledgeBase(
        ontology=ont,
        entities=[Entity("E1", "person", False)],
        cameras=[],
        observations=[],
        tracks={"E1": [(0.0, 0.0, 0.0), (10.0, 10.0, 0.0)]},
        facts=[],
        gap_seconds=20.0,
    )
    assert kb.position_at("E1", 0.0) == (0.0, 0.0)
    assert kb.position_at("E1", 5.0) == (5.0, 0.0)
    assert kb.position_at("E1", -1.0) is None
    assert kb.position_at("E1", 11.0) is None


def test_position_gap_rule(ont):
    kb = KnowledgeBase(
        ontology=ont,
        entities=[Entity("E1", "person", False)],
        cameras=[],
        observations=[],
        tracks={"E1": [(0.0, 0.0, 0.0), (5.0, 10.0, 0.0)]},
        facts=[],
        gap_seconds=1.0,
    )
    assert kb.position_at("E1", 2.5) is None
    assert kb.position_at("E1", 0.0) == (0.0, 0.0)


def test_static_entity_position_is_centroid(garden_kb):
    pos = garden_kb.position_at("W1", 33.0)
    assert pos == pytest.approx((10.0, 7.75))


def test_ingestion_idempotent(garden_dir, ont):
    kb1 = ingest_annotations(garden_dir, ont)
    kb2 = ingest_annotations(garden_dir, ont)
    assert kb1.entities == kb2.entities
    assert kb1.facts == kb2.facts
    assert kb1.span == kb2.span
    assert set(kb1.cameras) == set(kb2.cameras)
    for ent_id in kb1.entities:
        assert kb1.position_at(ent_id, 7.3) == kb2.position_at(ent_id, 7.3)


def test_view_frame_time_conversion(garden_kb):
    # cam2 runs at 25 fps with a 2 s clock offset.
    assert garden_kb.to_scene_seconds(ViewFrame("cam2", 0)) == (2.0, 2.0)
    assert garden_kb.to_scene_seconds(ViewFrame("cam2", 50)) == (4.0, 4.0)
    lo, hi = garden_kb.to_scene_seconds(
        Interval(ViewFrame("cam1", 30), ViewFrame("cam1", 60))
    )
    assert (lo, hi) == (1.0, 2.0)


def test_duplicate_fact_id_rejected(ont):
    with pytest.raises(AnnotationError, match="duplicate fact id"):
        KnowledgeBase(
            ontology=ont,
            entities=[Entity("E1", "person", False)],
            cameras=[],
            observations=[],
            tracks={},
            facts=[
                FactNode("f0", "standing", ("E1",), None, 0.0, 1.0),
                FactNode("f0", "walking", ("E1",), None, 0.0, 1.0),
            ],
        )


def test_derived_predicate_cannot_be_stored(ont):
    with pytest.raises(AnnotationError, match="cannot be stored"):
        KnowledgeBase(
            ontology=ont,
            entities=[Entity("E1", "person", False), Entity("E2", "person", False)],
            cameras=[],
            observations=[],
            tracks={},
            facts=[FactNode("f0", "near", ("E1", "E2"), None, 0.0, 1.0)],
        )


def _identity_camera(cam_id):
    from scenequery.kb import CameraModel

    return CameraModel(
        camera_id=cam_id,
        frame_rate=30.0,
        clock_offset=0.0,
        homography=(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
        fov_polygon=((-1e6, -1e6), (1e6, -1e6), (1e6, 1e6), (-1e6, 1e6)),
    )


def _obs(ent, cam, frame, x1, y1, x2, y2):
    from scenequery.kb import Observation

    return Observation(ent, cam, frame, Box(float(x1), float(y1), float(x2), float(y2)))
