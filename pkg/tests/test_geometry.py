import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import rasterized_box_iou
from scenequery import geometry
from scenequery.geometry import GeometryConfig
from scenequery.kb import Box, CameraModel, Entity, KnowledgeBase


def _cam(h, fps=30.0, offset=0.0):
    return CameraModel(
        camera_id="cam",
        frame_rate=fps,
        clock_offset=offset,
        homography=h,
        fov_polygon=((-1e9, -1e9), (1e9, -1e9), (1e9, 1e9), (-1e9, 1e9)),
    )


IDENTITY = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)


def test_view_to_scene_identity():
    assert geometry.view_to_scene(_cam(IDENTITY), (3.5, 2.0)) == (3.5, 2.0)


def test_view_to_scene_scaling():
    cam = _cam((2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0))
    assert geometry.view_to_scene(cam, (1.0, 1.0)) == (2.0, 2.0)
    assert geometry.scene_to_view(cam, (2.0, 2.0)) == pytest.approx((1.0, 1.0))


def _random_well_conditioned_matrix(rng):
    while True:
        m = (
            rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
            rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
            rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01), 1.0,
        )
        if abs(geometry.det3(m)) > 0.05:
            return m


def test_projection_round_trip_10000_random_matrices():
    rng = random.Random(20240917)
    worst = 0.0
    for _ in range(10_000):
        m = _random_well_conditioned_matrix(rng)
        cam = _cam(m)
        p = (rng.uniform(-10, 10), rng.uniform(-10, 10))
        scene = geometry.view_to_scene(cam, p)
        back = geometry.scene_to_view(cam, scene)
        worst = max(worst, abs(back[0] - p[0]), abs(back[1] - p[1]))
    assert worst < 1e-9


def test_degenerate_projection_raises():
    cam = _cam((1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0))
    with pytest.raises(geometry.DegenerateProjection):
        geometry.apply_homography(cam.homography, (1.0, 5.0))


def test_noninvertible_matrix_rejected():
    with pytest.raises(ValueError, match="not invertible"):
        geometry.invert3((1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0))


def test_frame_time_conversions():
    cam = _cam(IDENTITY, fps=30.0, offset=5.0)
    assert geometry.frame_to_scene_time(cam, 0) == 5.0
    cam2 = _cam(IDENTITY, fps=30.0, offset=0.0)
    assert geometry.frame_to_scene_time(cam2, 30) == 1.0
    for frame in (0, 1, 7, 30, 12345):
        t = geometry.frame_to_scene_time(cam, frame)
        assert geometry.scene_time_to_frame(cam, t) == frame
    assert geometry.scene_time_to_frame(cam, 0.0) == 0  # clamped at zero


def test_bbox_iou_examples():
    a = Box(0.0, 0.0, 2.0, 2.0)
    assert geometry.bbox_iou(a, a) == 1.0
    assert geometry.bbox_iou(a, Box(5.0, 5.0, 6.0, 6.0)) == 0.0
    assert geometry.bbox_iou(a, Box(1.0, 0.0, 3.0, 2.0)) == pytest.approx(1.0 / 3.0)


def test_bbox_iou_against_rasterized_oracle():
    rng = random.Random(7)
    cases = [((0.0, 0.0, 2.0, 2.0), (1.0, 0.0, 3.0, 2.0))]
    for _ in range(200):
        def rand_box():
            x1 = round(rng.uniform(0, 8) * 20) / 20.0
            y1 = round(rng.uniform(0, 8) * 20) / 20.0
            w = round(rng.uniform(0.1, 4) * 20) / 20.0 or 0.05
            h = round(rng.uniform(0.1, 4) * 20) / 20.0 or 0.05
            return (x1, y1, x1 + w, y1 + h)

        cases.append((rand_box(), rand_box()))
    for a, b in cases:
        analytic = geometry.bbox_iou(Box(*a), Box(*b))
        assert analytic == pytest.approx(rasterized_box_iou(a, b), abs=1e-3)


@settings(max_examples=150, deadline=None)
@given(
    st.tuples(
        st.floats(0, 50), st.floats(0, 50), st.floats(0.1, 20), st.floats(0.1, 20)
    ),
    st.tuples(
        st.floats(0, 50), st.floats(0, 50), st.floats(0.1, 20), st.floats(0.1, 20)
    ),
)
def test_bbox_iou_symmetric_and_bounded(a, b):
    box_a = Box(a[0], a[1], a[0] + a[2], a[1] + a[3])
    box_b = Box(b[0], b[1], b[0] + b[2], b[1] + b[3])
    iou = geometry.bbox_iou(box_a, box_b)
    assert iou == geometry.bbox_iou(box_b, box_a)
    assert 0.0 <= iou <= 1.0 + 1e-12
    assert geometry.bbox_iou(box_a, box_a) == pytest.approx(1.0)


def _kb_with_positions(ont, positions, statics=()):
    """One-track-sample-per-entity KB pinned at t=0 (gap covers it)."""
    entities = [Entity(e, "person", False) for e in positions]
    entities += [Entity(e, "wall", True, tuple(poly)) for e, poly in statics]
    tracks = {e: [(0.0, x, y)] for e, (x, y) in positions.items()}
    return KnowledgeBase(
        ontology=ont,
        entities=entities,
        cameras=[],
        observations=[],
        tracks=tracks,
        facts=[],
    )


def test_clear_line_of_sight_empty_scene(ont):
    kb = _kb_with_positions(ont, {"A": (0.0, 0.0), "B": (10.0, 0.0)})
    assert geometry.clear_line_of_sight(kb, "A", "B", 0.0) is True


def test_clear_line_of_sight_third_person_blocks(ont):
    kb = _kb_with_positions(ont, {"A": (0.0, 0.0), "B": (10.0, 0.0), "C": (5.0, 0.0)})
    cfg = GeometryConfig(los_block_radius=0.5)
    assert geometry.clear_line_of_sight(kb, "A", "B", 0.0, cfg) is False


def test_clear_line_of_sight_wall_blocks(ont):
    kb = _kb_with_positions(
        ont,
        {"A": (0.0, 0.0), "B": (10.0, 0.0)},
        statics=[("W", [(4.0, -1.0), (6.0, -1.0), (6.0, 1.0), (4.0, 1.0)])],
    )
    assert geometry.clear_line_of_sight(kb, "A", "B", 0.0) is False


def test_clear_line_of_sight_absent_positions(ont):
    kb = _kb_with_positions(ont, {"A": (0.0, 0.0), "B": (10.0, 0.0)})
    assert geometry.clear_line_of_sight(kb, "A", "B", 50.0) is None


def _random_scene(ont, rng, n_extra):
    positions = {"A": (rng.uniform(0, 10), rng.uniform(0, 10)),
                 "B": (rng.uniform(0, 10), rng.uniform(0, 10))}
    for i in range(n_extra):
        positions[f"C{i}"] = (rng.uniform(0, 10), rng.uniform(0, 10))
    statics = []
    if rng.random() < 0.5:
        x, y = rng.uniform(0, 9), rng.uniform(0, 9)
        statics.append(
            ("W", [(x, y), (x + rng.uniform(0.2, 2), y),
                   (x + rng.uniform(0.2, 2), y + rng.uniform(0.2, 2)),
                   (x, y + rng.uniform(0.2, 2))])
        )
    return _kb_with_positions(ont, positions, statics)


def test_clear_line_of_sight_symmetry_1000_random_scenes(ont):
    rng = random.Random(41)
    for _ in range(1000):
        kb = _random_scene(ont, rng, rng.randint(0, 4))
        ab = geometry.clear_line_of_sight(kb, "A", "B", 0.0)
        ba = geometry.clear_line_of_sight(kb, "B", "A", 0.0)
        assert ab == ba


def test_clear_line_of_sight_radius_monotone(ont):
    rng = random.Random(43)
    for _ in range(300):
        kb = _random_scene(ont, rng, rng.randint(1, 4))
        small = geometry.clear_line_of_sight(kb, "A", "B", 0.0, GeometryConfig(los_block_radius=0.2))
        large = geometry.clear_line_of_sight(kb, "A", "B", 0.0, GeometryConfig(los_block_radius=1.0))
        if small is False:
            assert large is False  # growing the radius can only block more


def test_distance_and_near(ont):
    kb = _kb_with_positions(ont, {"A": (0.0, 0.0), "B": (3.0, 4.0)})
    assert geometry.distance_at(kb, "A", "B", 0.0) == 5.0
    assert geometry.distance_at(kb, "A", "A", 0.0) == 0.0
    assert geometry.near(kb, "A", "A", 0.0) is True
    assert geometry.near(kb, "A", "B", 0.0, GeometryConfig(near_threshold=5.0)) is True
    assert geometry.near(kb, "A", "B", 0.0, GeometryConfig(near_threshold=4.99)) is False
    assert geometry.near(kb, "A", "B", 99.0) is None


def test_distance_triangle_inequality(ont):
    rng = random.Random(5)
    for _ in range(300):
        pts = {k: (rng.uniform(0, 10), rng.uniform(0, 10)) for k in ("A", "B", "C")}
        kb = _kb_with_positions(ont, pts)
        ab = geometry.distance_at(kb, "A", "B", 0.0)
        bc = geometry.distance_at(kb, "B", "C", 0.0)
        ac = geometry.distance_at(kb, "A", "C", 0.0)
        assert ac <= ab + bc + 1e-9


def test_inside_and_touching(ont):
    kb = _kb_with_positions(
        ont,
        {"A": (5.0, 0.5), "B": (20.0, 20.0)},
        statics=[("W", [(4.0, 0.0), (6.0, 0.0), (6.0, 1.0), (4.0, 1.0)])],
    )
    assert geometry.inside(kb, "A", "W", 0.0) is True
    assert geometry.inside(kb, "B", "W", 0.0) is False
    assert geometry.inside(kb, "A", "B", 0.0) is None  # dynamic container undefined
    assert geometry.touching(kb, "A", "W", 0.0) is True
    assert geometry.touching(kb, "B", "W", 0.0) is False


def test_occluding(ont):
    kb = _kb_with_positions(
        ont, {"A": (0.0, 0.0), "B": (10.0, 0.0), "C": (5.0, 0.1), "D": (5.0, 8.0)}
    )
    assert geometry.occluding(kb, "C", "A", "B", 0.0) is True
    assert geometry.occluding(kb, "D", "A", "B", 0.0) is False
    assert geometry.occluding(kb, "A", "A", "B", 0.0) is False


def test_convex_hull_and_buffer():
    hull = geometry.convex_hull([(0, 0), (2, 0), (2, 2), (0, 2), (1, 1)])
    assert set(hull) == {(0, 0), (2, 0), (2, 2), (0, 2)}
    square = geometry.buffered_polygon([(3.0, 4.0)], 0.4)
    assert set(square) == {(2.6, 3.6), (3.4, 3.6), (3.4, 4.4), (2.6, 4.4)}
    rect = geometry.buffered_polygon([(0.0, 0.0), (2.0, 0.0)], 0.5)
    assert len(rect) == 4


def test_point_in_polygon_boundary_counts():
    poly = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]
    assert geometry.point_in_polygon((1.0, 1.0), poly)
    assert geometry.point_in_polygon((0.0, 1.0), poly)
    assert not geometry.point_in_polygon((3.0, 1.0), poly)


def test_geometry_config_validation():
    with pytest.raises(ValueError):
        GeometryConfig(los_block_radius=0.0)
    with pytest.raises(ValueError):
        GeometryConfig(iou_threshold_def=1.5)
