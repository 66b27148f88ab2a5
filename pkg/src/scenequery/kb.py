"""Temporal scene knowledge base populated from ground-truth annotation files.

Entities, reified n-ary facts with validity intervals, per-camera box
observations, scene-plane trajectories, and camera models live in one
immutable store per scene. An n-ary fact is a single node holding an ordered
participant list, which is equivalent to a bundle of triples
(fact -> role_i -> entity_i) but keeps pattern matching direct.

Annotation directory layout (TSV, UTF-8, LF, ``#`` comments):
    scene.meta          key=value lines: scene_id, epoch, coordinate_system, duration
    cameras.tsv         id  fps  clock_offset  homography|@table.tsv  fov_polygon
    entities.tsv        id  type  static(0/1)  [footprint polygon, static only]
    observations.tsv    entity  camera  frame  x1  y1  x2  y2
    tracks.tsv          entity  t  x  y
    facts.tsv           fact_id  predicate  participants(|-sep)  value  t_start  t_end

Polygons are ``x,y;x,y;...``. Homographies are nine ``,``-separated row-major
values; moving cameras reference a per-frame table file with ``@name.tsv``
whose rows are ``frame`` plus nine values.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import geometry
from .ontology import Ontology
from .query_model import Interval, SceneTime, TimeSpec, ViewFrame

DEFAULT_GAP_FRAMES = 30
DEFAULT_GAP_SECONDS = 1.0

Point = tuple[float, float]


class AnnotationError(ValueError):
    """Malformed annotation documents or referential-integrity failures."""


@dataclass(frozen=True)
class Box:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"bad box corners ({self.x1},{self.y1},{self.x2},{self.y2})")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    @property
    def center(self) -> Point:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def contains(self, p: Point) -> bool:
        return self.x1 <= p[0] <= self.x2 and self.y1 <= p[1] <= self.y2


@dataclass(frozen=True)
class CameraModel:
    camera_id: str
    frame_rate: float
    clock_offset: float
    homography: geometry.Matrix3 | None
    per_frame: tuple[tuple[int, geometry.Matrix3], ...] | None = None
    fov_polygon: tuple[Point, ...] = ()

    def __post_init__(self) -> None:
        if self.frame_rate <= 0:
            raise ValueError(f"{self.camera_id}: frame_rate must be > 0")
        if (self.homography is None) == (self.per_frame is None):
            raise ValueError(f"{self.camera_id}: exactly one homography source required")
        for m in self._matrices():
            if abs(geometry.det3(m)) <= 1e-12:
                raise ValueError(f"{self.camera_id}: non-invertible homography")

    def _matrices(self) -> Iterable[geometry.Matrix3]:
        if self.homography is not None:
            yield self.homography
        else:
            for _, m in self.per_frame or ():
                yield m

    @property
    def is_moving(self) -> bool:
        return self.per_frame is not None

    def homography_at(self, frame: int) -> geometry.Matrix3:
        """Static matrix, or the nearest per-frame entry for moving cameras."""
        if self.homography is not None:
            return self.homography
        table = self.per_frame or ()
        frames = [f for f, _ in table]
        i = bisect_left(frames, frame)
        if i == 0:
            return table[0][1]
        if i == len(table):
            return table[-1][1]
        before, after = table[i - 1], table[i]
        return after[1] if (after[0] - frame) <= (frame - before[0]) else before[1]


@dataclass(frozen=True)
class Entity:
    entity_id: str
    object_type: str
    static: bool
    footprint: tuple[Point, ...] | None = None


@dataclass(frozen=True)
class Observation:
    entity_id: str
    camera_id: str
    frame: int
    box: Box

    def __post_init__(self) -> None:
        if self.frame < 0:
            raise ValueError("observation frame must be >= 0")


@dataclass(frozen=True)
class FactNode:
    fact_id: str
    predicate: str
    participants: tuple[str, ...]
    value: str | None
    start: float
    end: float

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"{self.fact_id}: validity start must be <= end")

    def covers(self, t: float) -> bool:
        return self.start <= t <= self.end

    def intersects(self, a: float, b: float) -> bool:
        return self.start <= b and self.end >= a


class KnowledgeBase:
    """Immutable post-ingestion store; concurrent reads need no locking."""

    def __init__(
        self,
        ontology: Ontology,
        entities: Sequence[Entity],
        cameras: Sequence[CameraModel],
        observations: Sequence[Observation],
        tracks: dict[str, Sequence[tuple[float, float, float]]],
        facts: Sequence[FactNode],
        meta: dict[str, str] | None = None,
        gap_frames: int = DEFAULT_GAP_FRAMES,
        gap_seconds: float = DEFAULT_GAP_SECONDS,
        synthesize_type_facts: bool = True,
    ) -> None:
        self.ontology = ontology
        self.meta = dict(meta or {})
        self.gap_frames = gap_frames
        self.gap_seconds = gap_seconds
        self.entities: dict[str, Entity] = {}
        for ent in entities:
            if ent.entity_id in self.entities:
                raise AnnotationError(f"duplicate entity {ent.entity_id!r}")
            pred = ontology.get(ent.object_type)
            if pred is None or pred.category != "object":
                raise AnnotationError(
                    f"{ent.entity_id}: unknown object type {ent.object_type!r}"
                )
            self.entities[ent.entity_id] = ent
        self.cameras: dict[str, CameraModel] = {}
        for cam in cameras:
            if cam.camera_id in self.cameras:
                raise AnnotationError(f"duplicate camera {cam.camera_id!r}")
            self.cameras[cam.camera_id] = cam

        self._obs: dict[tuple[str, str], list[Observation]] = {}
        for obs in observations:
            if obs.entity_id not in self.entities:
                raise AnnotationError(f"observation of unknown entity {obs.entity_id!r}")
            if obs.camera_id not in self.cameras:
                raise AnnotationError(f"observation from unknown camera {obs.camera_id!r}")
            self._obs.setdefault((obs.entity_id, obs.camera_id), []).append(obs)
        for key, rows in self._obs.items():
            rows.sort(key=lambda o: o.frame)
            frames = [o.frame for o in rows]
            if len(set(frames)) != len(frames):
                raise AnnotationError(f"duplicate observation frame for {key}")

        self._tracks: dict[str, list[tuple[float, float, float]]] = {}
        for ent_id, samples in tracks.items():
            if ent_id not in self.entities:
                raise AnnotationError(f"track for unknown entity {ent_id!r}")
            rows = sorted(samples, key=lambda s: s[0])
            for prev, cur in zip(rows, rows[1:]):
                if cur[0] <= prev[0]:
                    raise AnnotationError(
                        f"{ent_id}: track timestamps must be strictly increasing"
                    )
            self._tracks[ent_id] = rows

        self.facts: tuple[FactNode, ...] = tuple(facts)
        seen_fact_ids: set[str] = set()
        self._facts_by_pred: dict[str, list[FactNode]] = {}
        self._facts_by_participant: dict[str, list[FactNode]] = {}
        for fact in self.facts:
            if fact.fact_id in seen_fact_ids:
                raise AnnotationError(f"duplicate fact id {fact.fact_id!r}")
            seen_fact_ids.add(fact.fact_id)
            pred = ontology.get(fact.predicate)
            if pred is None:
                raise AnnotationError(f"{fact.fact_id}: unknown predicate {fact.predicate!r}")
            if pred.derived:
                raise AnnotationError(
                    f"{fact.fact_id}: derived predicate {fact.predicate!r} cannot be stored"
                )
            expected = pred.entity_arity
            if len(fact.participants) != expected:
                raise AnnotationError(
                    f"{fact.fact_id}: {fact.predicate} expects {expected} participant(s),"
                    f" got {len(fact.participants)}"
                )
            if pred.has_value_slot and fact.value is None:
                raise AnnotationError(f"{fact.fact_id}: {fact.predicate} requires a value")
            for p in fact.participants:
                if p not in self.entities:
                    raise AnnotationError(f"{fact.fact_id}: unknown participant {p!r}")
            self._facts_by_pred.setdefault(fact.predicate, []).append(fact)
            for p in set(fact.participants):
                self._facts_by_participant.setdefault(p, []).append(fact)

        self.span = self._compute_span()
        if synthesize_type_facts:
            self._add_type_facts()

    def _compute_span(self) -> tuple[float, float]:
        lo, hi = 0.0, 0.0
        if "duration" in self.meta:
            hi = float(self.meta["duration"])
        for rows in self._tracks.values():
            if rows:
                lo = min(lo, rows[0][0])
                hi = max(hi, rows[-1][0])
        for fact in self.facts:
            if not math.isinf(fact.end):
                hi = max(hi, fact.end)
        return (lo, hi)

    def _add_type_facts(self) -> None:
        # The entity table is the single source of object typing; materialize
        # it as unary facts valid over the whole scene span so type atoms read
        # through the same fact-pattern path as everything else.
        lo, hi = self.span
        extra = []
        for ent in self.entities.values():
            fact = FactNode(
                fact_id=f"type:{ent.entity_id}",
                predicate=ent.object_type,
                participants=(ent.entity_id,),
                value=None,
                start=lo,
                end=hi,
            )
            extra.append(fact)
            self._facts_by_pred.setdefault(fact.predicate, []).append(fact)
            self._facts_by_participant.setdefault(ent.entity_id, []).append(fact)
        self.facts = self.facts + tuple(extra)

    # -- time handling ------------------------------------------------------

    def camera(self, camera_id: str) -> CameraModel:
        try:
            return self.cameras[camera_id]
        except KeyError:
            raise AnnotationError(f"unknown camera {camera_id!r}") from None

    def to_scene_seconds(self, t: TimeSpec) -> tuple[float, float]:
        """Normalize any time spec to a closed scene-seconds interval."""
        if isinstance(t, SceneTime):
            return (t.seconds, t.seconds)
        if isinstance(t, ViewFrame):
            s = geometry.frame_to_scene_time(self.camera(t.camera_id), t.frame)
            return (s, s)
        if isinstance(t, Interval):
            (a, _) = self.to_scene_seconds(t.start)
            (_, b) = self.to_scene_seconds(t.end)
            return (a, b)
        raise TypeError(f"not a time spec: {t!r}")

    # -- core accessors -------------------------------------------------------

    def facts_matching(
        self,
        predicate: str | None = None,
        participants: Sequence[str | None] | None = None,
        value: str | None = None,
        time: TimeSpec | None = None,
    ) -> list[FactNode]:
        """Facts unifying with the pattern whose validity meets the time filter.

        A pattern predicate that is an object type also matches facts stored
        under its subtypes (person matches male/female typing facts). None
        slots in `participants` are wildcards.
        """
        if predicate is not None:
            pred = self.ontology.get(predicate)
            if pred is None:
                raise AnnotationError(f"unknown predicate {predicate!r}")
            if pred.category == "object":
                names = self.ontology.subtypes(predicate)
            else:
                names = frozenset({predicate})
            pool: Iterable[FactNode] = (
                f for name in sorted(names) for f in self._facts_by_pred.get(name, ())
            )
        elif participants and any(p is not None for p in participants):
            first = next(p for p in participants if p is not None)
            pool = self._facts_by_participant.get(first, ())
        else:
            pool = self.facts

        window: tuple[float, float] | None = None
        if time is not None:
            window = self.to_scene_seconds(time)

        out = []
        for fact in pool:
            if participants is not None:
                if len(fact.participants) != len(participants):
                    continue
                if any(
                    want is not None and want != got
                    for want, got in zip(participants, fact.participants)
                ):
                    continue
            if value is not None and fact.value != value:
                continue
            if window is not None and not fact.intersects(*window):
                continue
            out.append(fact)
        return out

    def entities_of_type(
        self,
        type_name: str,
        time: TimeSpec | None = None,
        region: Sequence[Point] | None = None,
    ) -> list[str]:
        """Hierarchy-closed type query, optionally filtered to a scene region
        at a point in time (entities without a position there are excluded)."""
        pred = self.ontology.get(type_name)
        if pred is None or pred.category != "object":
            raise AnnotationError(f"not an object predicate: {type_name!r}")
        names = self.ontology.subtypes(type_name)
        out = []
        for ent_id in sorted(self.entities):
            if self.entities[ent_id].object_type not in names:
                continue
            if region is not None:
                if time is None:
                    raise ValueError("region filter requires a time")
                t0, _ = self.to_scene_seconds(time)
                pos = self.position_at(ent_id, t0)
                if pos is None or not geometry.point_in_polygon(pos, region):
                    continue
            out.append(ent_id)
        return out

    def observations_for(self, entity_id: str, camera_id: str) -> list[Observation]:
        return list(self._obs.get((entity_id, camera_id), ()))

    def bbox_at(self, entity_id: str, camera_id: str, frame: int) -> Box | None:
        """Stored box at the exact frame, else corner-linear interpolation
        between the nearest enclosing observations when their gap is within
        gap_frames; None outside coverage."""
        rows = self._obs.get((entity_id, camera_id))
        if not rows:
            return None
        frames = [o.frame for o in rows]
        i = bisect_left(frames, frame)
        if i < len(rows) and rows[i].frame == frame:
            return rows[i].box
        if i == 0 or i == len(rows):
            return None
        lo, hi = rows[i - 1], rows[i]
        if hi.frame - lo.frame > self.gap_frames:
            return None
        w = (frame - lo.frame) / (hi.frame - lo.frame)
        lerp = lambda a, b: a + (b - a) * w
        return Box(
            lerp(lo.box.x1, hi.box.x1),
            lerp(lo.box.y1, hi.box.y1),
            lerp(lo.box.x2, hi.box.x2),
            lerp(lo.box.y2, hi.box.y2),
        )

    def position_at(self, entity_id: str, t: float) -> Point | None:
        """Scene position by track interpolation; static entities fall back to
        their footprint centroid."""
        rows = self._tracks.get(entity_id)
        if rows:
            times = [s[0] for s in rows]
            i = bisect_right(times, t)
            if i > 0 and rows[i - 1][0] == t:
                return (rows[i - 1][1], rows[i - 1][2])
            if i == 0 or i == len(rows):
                ent = self.entities.get(entity_id)
                if ent is not None and ent.static and ent.footprint:
                    return geometry.polygon_centroid(ent.footprint)
                return None
            lo, hi = rows[i - 1], rows[i]
            if hi[0] - lo[0] > self.gap_seconds:
                return None
            w = (t - lo[0]) / (hi[0] - lo[0])
            return (lo[1] + (hi[1] - lo[1]) * w, lo[2] + (hi[2] - lo[2]) * w)
        ent = self.entities.get(entity_id)
        if ent is not None and ent.static and ent.footprint:
            return geometry.polygon_centroid(ent.footprint)
        return None

    def track_points(
        self, entity_id: str, start: float, end: float
    ) -> list[tuple[float, float, float]]:
        """Track samples within [start, end] plus interpolated endpoints."""
        rows = self._tracks.get(entity_id, [])
        out = []
        p0 = self.position_at(entity_id, start)
        if p0 is not None:
            out.append((start, p0[0], p0[1]))
        for s in rows:
            if start < s[0] < end:
                out.append(s)
        if end > start:
            p1 = self.position_at(entity_id, end)
            if p1 is not None:
                out.append((end, p1[0], p1[1]))
        return out


# --------------------------------------------------------------------------
# annotation-file ingestion
# --------------------------------------------------------------------------


def _read_rows(path: Path) -> list[list[str]]:
    if not path.exists():
        return []
    rows = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([f.strip() for f in line.split("\t")])
    return rows


def read_meta(path: Path) -> dict[str, str]:
    meta: dict[str, str] = {}
    if not path.exists():
        return meta
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise AnnotationError(f"{path.name}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        meta[key.strip()] = val.strip()
    return meta


def parse_polygon(text: str) -> tuple[Point, ...]:
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        xy = chunk.split(",")
        if len(xy) != 2:
            raise AnnotationError(f"bad polygon vertex {chunk!r}")
        pts.append((float(xy[0]), float(xy[1])))
    if len(pts) < 3:
        raise AnnotationError(f"polygon needs >= 3 vertices: {text!r}")
    return tuple(pts)


def format_polygon(points: Sequence[Point]) -> str:
    return ";".join(f"{repr(float(x))},{repr(float(y))}" for x, y in points)


def _parse_matrix(text: str) -> geometry.Matrix3:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 9:
        raise AnnotationError(f"homography needs 9 values, got {len(vals)}")
    return tuple(vals)  # type: ignore[return-value]


def _load_camera(row: list[str], scene_dir: Path) -> CameraModel:
    if len(row) != 5:
        raise AnnotationError(f"cameras.tsv: expected 5 columns, got {len(row)}")
    cam_id, fps_s, offset_s, h_s, fov_s = row
    homography: geometry.Matrix3 | None = None
    per_frame: tuple[tuple[int, geometry.Matrix3], ...] | None = None
    if h_s.startswith("@"):
        table_path = scene_dir / h_s[1:]
        if not table_path.exists():
            raise AnnotationError(f"{cam_id}: homography table {h_s[1:]!r} missing")
        entries = []
        for trow in _read_rows(table_path):
            if len(trow) != 10:
                raise AnnotationError(f"{table_path.name}: expected 10 columns")
            entries.append((int(trow[0]), _parse_matrix(",".join(trow[1:]))))
        entries.sort(key=lambda e: e[0])
        per_frame = tuple(entries)
    else:
        homography = _parse_matrix(h_s)
    try:
        return CameraModel(
            camera_id=cam_id,
            frame_rate=float(fps_s),
            clock_offset=float(offset_s),
            homography=homography,
            per_frame=per_frame,
            fov_polygon=parse_polygon(fov_s),
        )
    except ValueError as exc:
        raise AnnotationError(str(exc)) from None


def ingest_annotations(
    scene_dir: str | Path,
    ontology: Ontology,
    gap_frames: int = DEFAULT_GAP_FRAMES,
    gap_seconds: float = DEFAULT_GAP_SECONDS,
) -> KnowledgeBase:
    """Load one scene's annotation directory into an immutable KnowledgeBase."""
    scene_dir = Path(scene_dir)
    if not scene_dir.is_dir():
        raise AnnotationError(f"not a directory: {scene_dir}")
    meta = read_meta(scene_dir / "scene.meta")

    entities = []
    for row in _read_rows(scene_dir / "entities.tsv"):
        if len(row) not in (3, 4):
            raise AnnotationError(f"entities.tsv: expected 3-4 columns, got {len(row)}")
        footprint = parse_polygon(row[3]) if len(row) == 4 and row[3] else None
        static = row[2] in ("1", "true")
        entities.append(Entity(row[0], row[1], static, footprint))

    cameras = [_load_camera(row, scene_dir) for row in _read_rows(scene_dir / "cameras.tsv")]

    observations = []
    for row in _read_rows(scene_dir / "observations.tsv"):
        if len(row) != 7:
            raise AnnotationError(f"observations.tsv: expected 7 columns, got {len(row)}")
        try:
            box = Box(float(row[3]), float(row[4]), float(row[5]), float(row[6]))
            observations.append(Observation(row[0], row[1], int(row[2]), box))
        except ValueError as exc:
            raise AnnotationError(f"observations.tsv: {exc}") from None

    tracks: dict[str, list[tuple[float, float, float]]] = {}
    for row in _read_rows(scene_dir / "tracks.tsv"):
        if len(row) != 4:
            raise AnnotationError(f"tracks.tsv: expected 4 columns, got {len(row)}")
        tracks.setdefault(row[0], []).append(
            (float(row[1]), float(row[2]), float(row[3]))
        )

    facts = []
    for row in _read_rows(scene_dir / "facts.tsv"):
        if len(row) != 6:
            raise AnnotationError(f"facts.tsv: expected 6 columns, got {len(row)}")
        fact_id, predicate, participants_s, value_s, start_s, end_s = row
        try:
            facts.append(
                FactNode(
                    fact_id=fact_id,
                    predicate=predicate,
                    participants=tuple(p for p in participants_s.split("|") if p),
                    value=value_s or None,
                    start=float(start_s),
                    end=float(end_s),
                )
            )
        except ValueError as exc:
            raise AnnotationError(f"facts.tsv: {exc}") from None

    return KnowledgeBase(
        ontology=ontology,
        entities=entities,
        cameras=cameras,
        observations=observations,
        tracks=tracks,
        facts=facts,
        meta=meta,
        gap_frames=gap_frames,
        gap_seconds=gap_seconds,
    )
