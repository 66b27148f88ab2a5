from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scenequery import synth
from scenequery.kb import ingest_annotations
from scenequery.ontology import default_ontology


@pytest.fixture(scope="session")
def ont():
    return default_ontology()


def garden_fixture_script() -> synth.SceneScript:
    """Small scene: two people, one ball, one wall, two cameras.

    The ball game: P1 carries and throws the ball at t=10, P2 catches it at
    t=12, they play from 5 to 40. The wall blocks the P1-P2 sight line near
    the end of the scene but not at t=20.
    """
    return synth.SceneScript(
        scene_id="garden_fixture",
        seed=3,
        duration=60.0,
        cameras=(
            synth.CameraSpec(
                camera_id="cam1",
                frame_rate=30.0,
                clock_offset=0.0,
                homography=(0.01, 0.0, 0.0, 0.0, 0.01, 0.0, 0.0, 0.0, 1.0),
                fov_polygon=((-1.0, -1.0), (21.0, -1.0), (21.0, 15.0), (-1.0, 15.0)),
            ),
            synth.CameraSpec(
                camera_id="cam2",
                frame_rate=25.0,
                clock_offset=2.0,
                homography=(0.012, 0.0, 6.0, 0.0, 0.012, 0.0, 0.0, 0.0, 1.0),
                fov_polygon=((6.0, -1.0), (22.0, -1.0), (22.0, 13.0), (6.0, 13.0)),
            ),
        ),
        actors=(
            synth.ActorSpec(
                "P1",
                "male",
                ((0.0, 2.0, 6.0), (18.0, 6.0, 6.0), (40.0, 6.0, 6.0), (60.0, 12.0, 9.0)),
                (("clothing-color", "red"),),
            ),
            synth.ActorSpec(
                "P2",
                "female",
                ((0.0, 10.0, 2.0), (60.0, 10.0, 2.01)),
                (("clothing-color", "green"),),
            ),
            synth.ActorSpec(
                "B1",
                "ball",
                ((0.0, 2.4, 5.6), (10.0, 5.6, 5.6), (12.0, 10.4, 2.4), (60.0, 10.4, 2.4)),
            ),
        ),
        statics=(
            synth.StaticSpec(
                "W1", "wall", ((8.0, 7.5), (12.0, 7.5), (12.0, 8.0), (8.0, 8.0))
            ),
        ),
        events=(
            synth.EventSpec("carrying", ("P1", "B1"), None, 0.0, 10.0),
            synth.EventSpec("throwing", ("P1", "B1"), None, 10.0, 10.0),
            synth.EventSpec("catching", ("P2", "B1"), None, 12.0, 12.0),
            synth.EventSpec("game", ("P1", "P2"), None, 5.0, 40.0),
            synth.EventSpec("walking", ("P1",), None, 0.0, 18.0),
            synth.EventSpec("standing", ("P2",), None, 0.0, 60.0),
        ),
    )


@pytest.fixture(scope="session")
def garden_dir(tmp_path_factory):
    ont = default_ontology()
    out = tmp_path_factory.mktemp("fixture") / "garden_fixture"
    synth.generate_scene(garden_fixture_script(), out, ont)
    return out


@pytest.fixture(scope="session")
def garden_kb(garden_dir, ont):
    return ingest_annotations(garden_dir, ont)
