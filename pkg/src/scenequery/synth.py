"""Deterministic synthetic scene generation.

A scene script declares cameras, actors with waypoint paths, static props
with footprint polygons, and scripted facts. Generation emits a ground-truth
annotation directory: tracks are piecewise-linear waypoint interpolation
sampled at 10 Hz, observations are per-camera projections of a fixed-size
footprint box on each camera's frame grid (dropped outside the camera's
field-of-view polygon), and facts come from the script plus per-actor
attribute facts.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import geometry
from .kb import format_polygon, parse_polygon, read_meta, _read_rows
from .ontology import Ontology

TRACK_HZ = 10
FOOTPRINT_HALF = 0.3  # fixed 0.6 x 0.6 scene-unit footprint box
MOVING_TABLE_STEP = 5  # frames between per-frame homography entries

Point = tuple[float, float]


class ScriptError(ValueError):
    """Invalid scene script."""


@dataclass(frozen=True)
class CameraSpec:
    camera_id: str
    frame_rate: float
    clock_offset: float
    homography: geometry.Matrix3
    fov_polygon: tuple[Point, ...]
    velocity: Optional[Point] = None  # scene units/second; None for static


@dataclass(frozen=True)
class ActorSpec:
    entity_id: str
    object_type: str
    waypoints: tuple[tuple[float, float, float], ...]  # (t, x, y)
    attributes: tuple[tuple[str, Optional[str]], ...] = ()


@dataclass(frozen=True)
class StaticSpec:
    entity_id: str
    object_type: str
    footprint: tuple[Point, ...]


@dataclass(frozen=True)
class EventSpec:
    predicate: str
    participants: tuple[str, ...]
    value: Optional[str]
    start: float
    end: float


@dataclass(frozen=True)
class SceneScript:
    scene_id: str
    seed: int
    duration: float
    cameras: tuple[CameraSpec, ...]
    actors: tuple[ActorSpec, ...]
    statics: tuple[StaticSpec, ...] = ()
    events: tuple[EventSpec, ...] = ()


def validate_script(script: SceneScript, ont: Ontology) -> list[str]:
    problems = []
    ids = set()
    for spec in list(script.actors) + list(script.statics):
        if spec.entity_id in ids:
            problems.append(f"duplicate entity id {spec.entity_id!r}")
        ids.add(spec.entity_id)
        pred = ont.get(spec.object_type)
        if pred is None or pred.category != "object":
            problems.append(f"{spec.entity_id}: bad object type {spec.object_type!r}")
    for actor in script.actors:
        times = [w[0] for w in actor.waypoints]
        if not actor.waypoints:
            problems.append(f"{actor.entity_id}: no waypoints")
        if any(b <= a for a, b in zip(times, times[1:])):
            problems.append(f"{actor.entity_id}: waypoints must be time-sorted")
    for ev in script.events:
        if ev.predicate not in ont:
            problems.append(f"unknown event predicate {ev.predicate!r}")
        for p in ev.participants:
            if p not in ids:
                problems.append(f"event {ev.predicate} references unknown {p!r}")
        if not (0.0 <= ev.start <= ev.end <= script.duration):
            problems.append(
                f"event {ev.predicate}({','.join(ev.participants)}) outside duration"
            )
    return problems


def waypoint_position(
    waypoints: Sequence[tuple[float, float, float]], t: float
) -> Optional[Point]:
    """Piecewise-linear interpolation; None outside the waypoint span."""
    if not waypoints or t < waypoints[0][0] or t > waypoints[-1][0]:
        return None
    for (t0, x0, y0), (t1, x1, y1) in zip(waypoints, waypoints[1:]):
        if t0 <= t <= t1:
            if t1 == t0:
                return (x0, y0)
            w = (t - t0) / (t1 - t0)
            return (x0 + (x1 - x0) * w, y0 + (y1 - y0) * w)
    return (waypoints[-1][1], waypoints[-1][2])


def _camera_matrix(cam: CameraSpec, t: float) -> geometry.Matrix3:
    if cam.velocity is None:
        return cam.homography
    dx, dy = cam.velocity[0] * t, cam.velocity[1] * t
    a, b, c, d, e, f, g, h, i = cam.homography
    # Compose a scene-side translation: T(dx,dy) . H
    return (a + dx * g, b + dx * h, c + dx * i, d + dy * g, e + dy * h, f + dy * i, g, h, i)


def _fmt(v: float) -> str:
    return repr(float(v))


def generate_scene(script: SceneScript, out_dir: str | Path, ont: Ontology) -> Path:
    """Write the script's annotation directory; byte-identical per script."""
    problems = validate_script(script, ont)
    if problems:
        raise ScriptError("; ".join(problems))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    meta_lines = [
        f"coordinate_system={script.scene_id}-ground",
        "epoch=0.0",
        f"duration={_fmt(script.duration)}",
        f"scene_id={script.scene_id}",
        f"seed={script.seed}",
    ]
    (out / "scene.meta").write_text("\n".join(meta_lines) + "\n", encoding="utf-8")

    cam_rows = []
    for cam in script.cameras:
        if cam.velocity is None:
            h_field = ",".join(_fmt(v) for v in cam.homography)
        else:
            table_name = f"{cam.camera_id}_homographies.tsv"
            rows = []
            frame = 0
            last = int(script.duration * cam.frame_rate)
            while frame <= last:
                t = cam.clock_offset + frame / cam.frame_rate
                m = _camera_matrix(cam, t)
                rows.append("\t".join([str(frame)] + [_fmt(v) for v in m]))
                frame += MOVING_TABLE_STEP
            (out / table_name).write_text("\n".join(rows) + "\n", encoding="utf-8")
            h_field = f"@{table_name}"
        cam_rows.append(
            "\t".join(
                [
                    cam.camera_id,
                    _fmt(cam.frame_rate),
                    _fmt(cam.clock_offset),
                    h_field,
                    format_polygon(cam.fov_polygon),
                ]
            )
        )
    (out / "cameras.tsv").write_text("\n".join(cam_rows) + "\n", encoding="utf-8")

    ent_rows = []
    for actor in script.actors:
        ent_rows.append("\t".join([actor.entity_id, actor.object_type, "0"]))
    for st in script.statics:
        ent_rows.append(
            "\t".join([st.entity_id, st.object_type, "1", format_polygon(st.footprint)])
        )
    (out / "entities.tsv").write_text("\n".join(ent_rows) + "\n", encoding="utf-8")

    track_rows = []
    for actor in script.actors:
        t0 = actor.waypoints[0][0]
        t1 = actor.waypoints[-1][0]
        for tenth in range(round(t0 * TRACK_HZ), round(t1 * TRACK_HZ) + 1):
            t = tenth / TRACK_HZ
            pos = waypoint_position(actor.waypoints, t)
            if pos is None:
                continue
            track_rows.append(
                "\t".join([actor.entity_id, _fmt(t), _fmt(pos[0]), _fmt(pos[1])])
            )
    (out / "tracks.tsv").write_text("\n".join(track_rows) + "\n", encoding="utf-8")

    obs_rows = []
    for cam in script.cameras:
        last = int(script.duration * cam.frame_rate)
        for frame in range(last + 1):
            t = cam.clock_offset + frame / cam.frame_rate
            m = _camera_matrix(cam, t)
            try:
                inv = geometry.invert3(m)
            except ValueError:
                continue
            for actor in script.actors:
                pos = waypoint_position(actor.waypoints, t)
                if pos is None or not geometry.point_in_polygon(pos, cam.fov_polygon):
                    continue
                cx, cy = geometry.apply_homography(inv, pos)
                half_w = half_h = 0.0
                for sx in (-FOOTPRINT_HALF, FOOTPRINT_HALF):
                    for sy in (-FOOTPRINT_HALF, FOOTPRINT_HALF):
                        u, v = geometry.apply_homography(
                            inv, (pos[0] + sx, pos[1] + sy)
                        )
                        half_w = max(half_w, abs(u - cx))
                        half_h = max(half_h, abs(v - cy))
                if half_w <= 0 or half_h <= 0:
                    continue
                obs_rows.append(
                    "\t".join(
                        [
                            actor.entity_id,
                            cam.camera_id,
                            str(frame),
                            _fmt(cx - half_w),
                            _fmt(cy - half_h),
                            _fmt(cx + half_w),
                            _fmt(cy + half_h),
                        ]
                    )
                )
    (out / "observations.tsv").write_text("\n".join(obs_rows) + "\n", encoding="utf-8")

    fact_rows = []
    counter = 0
    for ev in script.events:
        fact_rows.append(
            "\t".join(
                [
                    f"e{counter:04d}",
                    ev.predicate,
                    "|".join(ev.participants),
                    ev.value or "",
                    _fmt(ev.start),
                    _fmt(ev.end),
                ]
            )
        )
        counter += 1
    for actor in script.actors:
        for pred, value in actor.attributes:
            fact_rows.append(
                "\t".join(
                    [
                        f"a{counter:04d}",
                        pred,
                        actor.entity_id,
                        value or "",
                        _fmt(0.0),
                        _fmt(script.duration),
                    ]
                )
            )
            counter += 1
    (out / "facts.tsv").write_text("\n".join(fact_rows) + "\n", encoding="utf-8")
    return out


# --------------------------------------------------------------------------
# script directories (same TSV conventions as annotations, plus events.tsv)
# --------------------------------------------------------------------------


def load_script(script_dir: str | Path) -> SceneScript:
    script_dir = Path(script_dir)
    meta = read_meta(script_dir / "script.meta")
    cameras = []
    for row in _read_rows(script_dir / "cameras.tsv"):
        if len(row) not in (5, 6):
            raise ScriptError(f"cameras.tsv: expected 5-6 columns, got {len(row)}")
        velocity = None
        if len(row) == 6 and row[5]:
            vx, vy = row[5].split(",")
            velocity = (float(vx), float(vy))
        cameras.append(
            CameraSpec(
                camera_id=row[0],
                frame_rate=float(row[1]),
                clock_offset=float(row[2]),
                homography=tuple(float(v) for v in row[3].split(",")),  # type: ignore[arg-type]
                fov_polygon=parse_polygon(row[4]),
                velocity=velocity,
            )
        )
    waypoints: dict[str, list[tuple[float, float, float]]] = {}
    for row in _read_rows(script_dir / "waypoints.tsv"):
        if len(row) != 4:
            raise ScriptError("waypoints.tsv: expected 4 columns")
        waypoints.setdefault(row[0], []).append(
            (float(row[1]), float(row[2]), float(row[3]))
        )
    actors = []
    for row in _read_rows(script_dir / "actors.tsv"):
        if len(row) not in (2, 3):
            raise ScriptError("actors.tsv: expected 2-3 columns")
        attrs: list[tuple[str, Optional[str]]] = []
        if len(row) == 3 and row[2] and row[2] != "-":
            for chunk in row[2].split(";"):
                pred, _, value = chunk.partition(":")
                attrs.append((pred, value or None))
        actors.append(
            ActorSpec(
                entity_id=row[0],
                object_type=row[1],
                waypoints=tuple(sorted(waypoints.get(row[0], []))),
                attributes=tuple(attrs),
            )
        )
    statics = []
    for row in _read_rows(script_dir / "statics.tsv"):
        if len(row) != 3:
            raise ScriptError("statics.tsv: expected 3 columns")
        statics.append(StaticSpec(row[0], row[1], parse_polygon(row[2])))
    events = []
    for row in _read_rows(script_dir / "events.tsv"):
        if len(row) != 5:
            raise ScriptError("events.tsv: expected 5 columns")
        events.append(
            EventSpec(
                predicate=row[0],
                participants=tuple(p for p in row[1].split("|") if p),
                value=row[2] or None,
                start=float(row[3]),
                end=float(row[4]),
            )
        )
    return SceneScript(
        scene_id=meta.get("scene_id", script_dir.name),
        seed=int(meta.get("seed", "0")),
        duration=float(meta.get("duration", "60")),
        cameras=tuple(cameras),
        actors=tuple(actors),
        statics=tuple(statics),
        events=tuple(events),
    )


# --------------------------------------------------------------------------
# built-in scenarios
# --------------------------------------------------------------------------

_WIDE_FOV: tuple[Point, ...] = ((-2.0, -2.0), (24.0, -2.0), (24.0, 16.0), (-2.0, 16.0))


def _static_cam(cam_id: str, fps: float, offset: float, sx: float, tx: float, ty: float,
                fov: tuple[Point, ...] = _WIDE_FOV, perspective: float = 0.0) -> CameraSpec:
    return CameraSpec(
        camera_id=cam_id,
        frame_rate=fps,
        clock_offset=offset,
        homography=(sx, 0.0, tx, 0.0, sx, ty, perspective, 0.0, 1.0),
        fov_polygon=fov,
    )


def garden_script(seed: int = 7) -> SceneScript:
    return SceneScript(
        scene_id="garden",
        seed=seed,
        duration=60.0,
        cameras=(
            _static_cam("cam1", 30.0, 0.0, 0.01, 0.0, 0.0),
            _static_cam(
                "cam2", 25.0, 2.0, 0.012, 6.0, 0.0,
                fov=((6.0, -1.0), (22.0, -1.0), (22.0, 13.0), (6.0, 13.0)),
                perspective=2e-6,
            ),
            CameraSpec(
                camera_id="cam3",
                frame_rate=30.0,
                clock_offset=0.0,
                homography=(0.008, 0.0, 2.0, 0.0, 0.008, 1.0, 0.0, 0.0, 1.0),
                fov_polygon=_WIDE_FOV,
                velocity=(0.05, 0.0),
            ),
        ),
        actors=(
            ActorSpec(
                "P1", "male",
                ((0.0, 2.0, 6.0), (18.0, 6.0, 6.0), (40.0, 6.0, 6.0), (60.0, 12.0, 9.0)),
                (("clothing-color", "red"), ("clothing-type", "tshirt")),
            ),
            ActorSpec(
                "P2", "female",
                ((0.0, 10.0, 2.0), (30.0, 10.0, 2.0), (38.0, 14.0, 3.0), (60.0, 14.0, 3.0)),
                (("clothing-color", "green"), ("clothing-type", "jacket")),
            ),
            ActorSpec(
                "B1", "ball",
                ((0.0, 2.4, 5.6), (10.0, 5.6, 5.6), (12.0, 10.4, 2.4), (60.0, 10.4, 2.4)),
            ),
            ActorSpec(
                "P3", "female",
                ((0.0, 15.3, 4.7), (60.0, 15.3, 4.71)),
                (("clothing-color", "blue"),),
            ),
            ActorSpec(
                "P4", "male",
                ((18.0, 0.8, 9.3), (30.0, 4.0, 10.5), (60.0, 4.0, 10.5)),
                (("clothing-color", "black"), ("clothing-type", "coat")),
            ),
        ),
        statics=(
            StaticSpec("W1", "wall", ((8.0, 7.5), (12.0, 7.5), (12.0, 8.0), (8.0, 8.0))),
            StaticSpec("CH1", "chair", ((15.0, 5.0), (15.6, 5.0), (15.6, 5.6), (15.0, 5.6))),
            StaticSpec("D1", "door", ((0.5, 9.0), (1.1, 9.0), (1.1, 9.6), (0.5, 9.6))),
            StaticSpec("T1", "tree", ((17.0, 10.0), (18.0, 10.0), (18.0, 11.0), (17.0, 11.0))),
        ),
        events=(
            EventSpec("carrying", ("P1", "B1"), None, 0.0, 10.0),
            EventSpec("throwing", ("P1", "B1"), None, 10.0, 10.0),
            EventSpec("catching", ("P2", "B1"), None, 12.0, 12.0),
            EventSpec("game", ("P1", "P2"), None, 5.0, 40.0),
            EventSpec("walking", ("P1",), None, 0.0, 18.0),
            EventSpec("standing", ("P1",), None, 18.0, 40.0),
            EventSpec("walking", ("P1",), None, 40.0, 60.0),
            EventSpec("standing", ("P2",), None, 0.0, 30.0),
            EventSpec("running", ("P2",), None, 30.0, 38.0),
            EventSpec("standing", ("P2",), None, 38.0, 60.0),
            EventSpec("accompanying", ("P1", "P2"), None, 5.0, 40.0),
            EventSpec("sitting", ("P3",), None, 0.0, 60.0),
            EventSpec("sitting-in", ("P3", "CH1"), None, 0.0, 60.0),
            EventSpec("occupied", ("CH1",), None, 0.0, 60.0),
            EventSpec("entering", ("P4", "D1"), None, 19.0, 19.0),
            EventSpec("door-open", ("D1",), None, 18.0, 21.0),
            EventSpec("walking", ("P4",), None, 18.0, 30.0),
            EventSpec("standing", ("P4",), None, 30.0, 60.0),
        ),
    )


def office_script(seed: int = 11) -> SceneScript:
    return SceneScript(
        scene_id="office",
        seed=seed,
        duration=50.0,
        cameras=(
            _static_cam("cam1", 30.0, 0.0, 0.01, 0.0, 0.0),
            _static_cam("cam2", 15.0, 1.0, 0.01, 2.0, 1.0, perspective=1e-6),
        ),
        actors=(
            ActorSpec(
                "P1", "male",
                ((0.0, 0.6, 5.0), (15.0, 8.0, 4.3), (50.0, 8.0, 4.3)),
                (("clothing-color", "white"), ("clothing-type", "shirt")),
            ),
            ActorSpec(
                "P2", "female",
                ((0.0, 12.0, 8.0), (20.0, 12.0, 8.0), (30.0, 6.0, 8.0), (35.0, 0.6, 5.2), (50.0, 0.6, 5.2)),
                (("clothing-color", "gray"), ("clothing-type", "suit")),
            ),
            ActorSpec(
                "P3", "male",
                ((0.0, 10.0, 6.3), (50.0, 10.0, 6.31)),
                (("clothing-color", "navy"),),
            ),
            ActorSpec(
                "K1", "backpack",
                ((0.0, 12.2, 8.2), (20.0, 12.2, 8.2), (30.0, 6.2, 8.2), (50.0, 6.2, 8.2)),
            ),
        ),
        statics=(
            StaticSpec("CH1", "chair", ((7.7, 4.0), (8.3, 4.0), (8.3, 4.6), (7.7, 4.6))),
            StaticSpec("CH2", "chair", ((9.7, 6.0), (10.3, 6.0), (10.3, 6.6), (9.7, 6.6))),
            StaticSpec("TB1", "table", ((8.5, 5.0), (9.5, 5.0), (9.5, 5.8), (8.5, 5.8))),
            StaticSpec("D1", "door", ((0.0, 4.7), (0.4, 4.7), (0.4, 5.3), (0.0, 5.3))),
            StaticSpec("W1", "wall", ((4.0, 0.0), (4.3, 0.0), (4.3, 3.0), (4.0, 3.0))),
        ),
        events=(
            EventSpec("entering", ("P1", "D1"), None, 1.0, 1.0),
            EventSpec("door-open", ("D1",), None, 0.0, 4.0),
            EventSpec("walking", ("P1",), None, 0.0, 15.0),
            EventSpec("sitting", ("P1",), None, 16.0, 45.0),
            EventSpec("sitting-in", ("P1", "CH1"), None, 16.0, 45.0),
            EventSpec("occupied", ("CH1",), None, 16.0, 45.0),
            EventSpec("standing", ("P2",), None, 0.0, 20.0),
            EventSpec("walking", ("P2",), None, 20.0, 35.0),
            EventSpec("carrying", ("P2", "K1"), None, 0.0, 30.0),
            EventSpec("exiting", ("P2", "D1"), None, 35.0, 35.0),
            EventSpec("door-open", ("D1",), None, 34.0, 37.0),
            EventSpec("accompanying", ("P1", "P3"), None, 16.0, 40.0),
            EventSpec("sitting", ("P3",), None, 0.0, 50.0),
            EventSpec("sitting-in", ("P3", "CH2"), None, 0.0, 50.0),
            EventSpec("occupied", ("CH2",), None, 0.0, 50.0),
        ),
    )


def auditorium_script(seed: int = 13) -> SceneScript:
    return SceneScript(
        scene_id="auditorium",
        seed=seed,
        duration=50.0,
        cameras=(
            _static_cam("cam1", 30.0, 0.0, 0.011, 0.0, 0.0),
            _static_cam("cam2", 30.0, 0.5, 0.009, 1.0, 2.0),
        ),
        actors=(
            ActorSpec(
                "P1", "male",
                ((0.0, 1.0, 2.0), (10.0, 6.0, 4.0), (50.0, 6.0, 4.0)),
                (("clothing-color", "black"), ("clothing-type", "jacket")),
            ),
            ActorSpec(
                "P2", "female",
                ((0.0, 1.0, 2.4), (12.0, 8.0, 4.0), (50.0, 8.0, 4.0)),
                (("clothing-color", "red"),),
            ),
            ActorSpec(
                "P3", "female",
                ((0.0, 10.0, 10.0), (44.0, 10.0, 10.0), (46.0, 1.2, 2.2), (50.0, 1.2, 2.2)),
                (("clothing-color", "purple"), ("clothing-type", "dress")),
            ),
        ),
        statics=(
            StaticSpec("CH1", "chair", ((5.7, 3.7), (6.3, 3.7), (6.3, 4.3), (5.7, 4.3))),
            StaticSpec("CH2", "chair", ((7.7, 3.7), (8.3, 3.7), (8.3, 4.3), (7.7, 4.3))),
            StaticSpec("CH3", "chair", ((9.7, 3.7), (10.3, 3.7), (10.3, 4.3), (9.7, 4.3))),
            StaticSpec("D1", "door", ((0.6, 1.7), (1.2, 1.7), (1.2, 2.3), (0.6, 2.3))),
            StaticSpec("TB1", "table", ((9.5, 9.0), (11.0, 9.0), (11.0, 9.8), (9.5, 9.8))),
        ),
        events=(
            EventSpec("entering", ("P1", "D1"), None, 1.0, 1.0),
            EventSpec("entering", ("P2", "D1"), None, 2.0, 2.0),
            EventSpec("door-open", ("D1",), None, 0.0, 5.0),
            EventSpec("walking", ("P1",), None, 0.0, 10.0),
            EventSpec("walking", ("P2",), None, 0.0, 12.0),
            EventSpec("sitting", ("P1",), None, 11.0, 50.0),
            EventSpec("sitting-in", ("P1", "CH1"), None, 11.0, 50.0),
            EventSpec("occupied", ("CH1",), None, 11.0, 50.0),
            EventSpec("sitting", ("P2",), None, 13.0, 50.0),
            EventSpec("sitting-in", ("P2", "CH2"), None, 13.0, 50.0),
            EventSpec("occupied", ("CH2",), None, 13.0, 50.0),
            EventSpec("accompanying", ("P1", "P2"), None, 0.0, 50.0),
            EventSpec("standing", ("P3",), None, 0.0, 44.0),
            EventSpec("walking", ("P3",), None, 44.0, 46.0),
            EventSpec("exiting", ("P3", "D1"), None, 46.0, 46.0),
            EventSpec("door-open", ("D1",), None, 45.0, 48.0),
        ),
    )


def parking_lot_script(seed: int = 17) -> SceneScript:
    return SceneScript(
        scene_id="parking_lot",
        seed=seed,
        duration=60.0,
        cameras=(
            _static_cam("cam1", 30.0, 0.0, 0.012, 0.0, 0.0),
            _static_cam("cam2", 30.0, 0.0, 0.01, 4.0, 0.0, perspective=2e-6),
            CameraSpec(
                camera_id="cam3",
                frame_rate=25.0,
                clock_offset=1.0,
                homography=(0.008, 0.0, 0.0, 0.0, 0.008, 2.0, 0.0, 0.0, 1.0),
                fov_polygon=_WIDE_FOV,
                velocity=(0.0, 0.04),
            ),
        ),
        actors=(
            ActorSpec(
                "P1", "male",
                ((0.0, 1.0, 1.0), (20.0, 9.4, 5.0), (40.0, 9.4, 5.0), (55.0, 10.0, 6.0), (60.0, 10.0, 6.0)),
                (("clothing-color", "brown"), ("clothing-type", "coat")),
            ),
            ActorSpec(
                "P2", "female",
                ((0.0, 14.0, 2.0), (12.0, 11.0, 4.0), (40.0, 11.0, 4.0), (60.0, 16.0, 2.0)),
                (("clothing-color", "yellow"),),
            ),
            ActorSpec(
                "C1", "car",
                ((0.0, 10.0, 5.8), (60.0, 10.0, 5.81)),
            ),
            ActorSpec(
                "K1", "backpack",
                ((0.0, 1.2, 1.2), (20.0, 9.6, 5.2), (22.0, 10.0, 5.6), (60.0, 10.0, 5.6)),
            ),
        ),
        statics=(
            StaticSpec("B1", "building", ((0.0, 10.0), (6.0, 10.0), (6.0, 13.0), (0.0, 13.0))),
            StaticSpec("D1", "door", ((2.6, 9.9), (3.2, 9.9), (3.2, 10.3), (2.6, 10.3))),
            StaticSpec("W1", "wall", ((13.0, 7.0), (17.0, 7.0), (17.0, 7.4), (13.0, 7.4))),
        ),
        events=(
            EventSpec("parked", ("C1",), None, 0.0, 60.0),
            EventSpec("walking", ("P1",), None, 0.0, 20.0),
            EventSpec("carrying", ("P1", "K1"), None, 0.0, 22.0),
            EventSpec("trunk-open", ("C1",), None, 20.0, 30.0),
            EventSpec("lights-on", ("C1",), None, 45.0, 50.0),
            EventSpec("standing", ("P1",), None, 20.0, 40.0),
            EventSpec("entering", ("P1", "C1"), None, 41.0, 41.0),
            EventSpec("exiting", ("P1", "C1"), None, 54.0, 54.0),
            EventSpec("running", ("P2",), None, 0.0, 12.0),
            EventSpec("standing", ("P2",), None, 12.0, 40.0),
            EventSpec("walking", ("P2",), None, 40.0, 60.0),
            EventSpec("accompanying", ("P1", "P2"), None, 12.0, 40.0),
            EventSpec("door-open", ("D1",), None, 0.0, 3.0),
            EventSpec("hood-open", ("C1",), None, 32.0, 36.0),
        ),
    )


def builtin_scenarios() -> list[SceneScript]:
    """Four archetype scenes: two indoor, two outdoor."""
    return [
        garden_script(),
        office_script(),
        auditorium_script(),
        parking_lot_script(),
    ]
