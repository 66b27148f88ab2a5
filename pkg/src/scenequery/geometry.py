"""Ground-plane geometry: coordinate/time conversions and spatial predicates
computed on demand at query time instead of being stored as facts.

All spatial reasoning happens in 2D scene coordinates; per-camera homographies
map view pixels onto the scene ground plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, TYPE_CHECKING

if TYPE_CHECKING:
    from .kb import Box, CameraModel, KnowledgeBase

Matrix3 = tuple[float, float, float, float, float, float, float, float, float]
Point = tuple[float, float]

_W_EPS = 1e-12
_DET_EPS = 1e-12


class DegenerateProjection(ArithmeticError):
    """Homogeneous transform produced a point at infinity."""


@dataclass(frozen=True)
class GeometryConfig:
    """Tolerances for the derived spatial predicates.

    los_block_radius: footprint radius of a dynamic blocking entity.
    near_threshold: max ground-plane distance for "near" (inclusive).
    iou_threshold_def: min box overlap for definition matching.
    projection_tolerance: allowed round-trip error through a homography.
    """

    los_block_radius: float = 0.4
    near_threshold: float = 2.0
    iou_threshold_def: float = 0.5
    projection_tolerance: float = 1e-6

    def __post_init__(self) -> None:
        for name in (
            "los_block_radius",
            "near_threshold",
            "iou_threshold_def",
            "projection_tolerance",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.iou_threshold_def > 1:
            raise ValueError("iou_threshold_def must be <= 1")


DEFAULT_GEOMETRY = GeometryConfig()


# --------------------------------------------------------------------------
# 3x3 homogeneous transforms
# --------------------------------------------------------------------------


def det3(m: Matrix3) -> float:
    a, b, c, d, e, f, g, h, i = m
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def invert3(m: Matrix3) -> Matrix3:
    d = det3(m)
    if abs(d) <= _DET_EPS:
        raise ValueError("matrix is not invertible")
    a, b, c, dd, e, f, g, h, i = m
    return (
        (e * i - f * h) / d,
        (c * h - b * i) / d,
        (b * f - c * e) / d,
        (f * g - dd * i) / d,
        (a * i - c * g) / d,
        (c * dd - a * f) / d,
        (dd * h - e * g) / d,
        (b * g - a * h) / d,
        (a * e - b * dd) / d,
    )


def apply_homography(m: Matrix3, p: Point) -> Point:
    x, y = p
    w = m[6] * x + m[7] * y + m[8]
    if abs(w) < _W_EPS:
        raise DegenerateProjection(f"point {p} maps to infinity")
    return (
        (m[0] * x + m[1] * y + m[2]) / w,
        (m[3] * x + m[4] * y + m[5]) / w,
    )


def view_to_scene(cam: "CameraModel", p: Point, frame: int = 0) -> Point:
    return apply_homography(cam.homography_at(frame), p)


def scene_to_view(cam: "CameraModel", p: Point, frame: int = 0) -> Point:
    return apply_homography(invert3(cam.homography_at(frame)), p)


def frame_to_scene_time(cam: "CameraModel", frame: int) -> float:
    return cam.clock_offset + frame / cam.frame_rate


def scene_time_to_frame(cam: "CameraModel", t: float) -> int:
    frame = round((t - cam.clock_offset) * cam.frame_rate)
    return max(0, int(frame))


# --------------------------------------------------------------------------
# boxes
# --------------------------------------------------------------------------


def bbox_iou(a: "Box", b: "Box") -> float:
    ix = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    iy = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = ix * iy
    if inter == 0.0:
        return 0.0
    union = a.area + b.area - inter
    return inter / union


# --------------------------------------------------------------------------
# points, segments, polygons
# --------------------------------------------------------------------------


def dist(p: Point, q: Point) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return dist(p, a)
    t = ((px - ax) * dx + (py - ay) * dy) / seg2
    t = max(0.0, min(1.0, t))
    return dist(p, (ax + t * dx, ay + t * dy))


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool:
    """Closed-segment intersection test (touching counts)."""
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if ((o1 > 0) != (o2 > 0) and o1 != 0 and o2 != 0) and (
        (o3 > 0) != (o4 > 0) and o3 != 0 and o4 != 0
    ):
        return True

    def on_seg(p: Point, q: Point, r: Point) -> bool:
        return (
            _orient(p, q, r) == 0
            and min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
            and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])
        )

    return on_seg(a, b, c) or on_seg(a, b, d) or on_seg(c, d, a) or on_seg(c, d, b)


def point_in_polygon(p: Point, poly: Sequence[Point]) -> bool:
    """Ray-cast containment test; boundary points count as inside."""
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        if point_segment_distance(p, a, b) < 1e-12:
            return True
    inside = False
    x, y = p
    j = n - 1
    for i in range(n):
        xi, yi = poly[i]
        xj, yj = poly[j]
        if (yi > y) != (yj > y):
            x_cross = (xj - xi) * (y - yi) / (yj - yi) + xi
            if x < x_cross:
                inside = not inside
        j = i
    return inside


def segment_crosses_polygon(a: Point, b: Point, poly: Sequence[Point]) -> bool:
    """True when the segment a-b intersects the polygon (boundary or interior)."""
    n = len(poly)
    for i in range(n):
        if segments_intersect(a, b, poly[i], poly[(i + 1) % n]):
            return True
    mid = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
    return point_in_polygon(mid, poly)


def point_polygon_distance(p: Point, poly: Sequence[Point]) -> float:
    if point_in_polygon(p, poly):
        return 0.0
    n = len(poly)
    return min(point_segment_distance(p, poly[i], poly[(i + 1) % n]) for i in range(n))


def convex_hull(points: Sequence[Point]) -> list[Point]:
    """Monotone-chain hull in counter-clockwise order; collinear sets collapse."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and _orient(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _orient(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return hull if len(hull) >= 3 else pts


def polygon_centroid(poly: Sequence[Point]) -> Point:
    area2 = 0.0
    cx = 0.0
    cy = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        cross = x1 * y2 - x2 * y1
        area2 += cross
        cx += (x1 + x2) * cross
        cy += (y1 + y2) * cross
    if abs(area2) < 1e-15:
        xs = [p[0] for p in poly]
        ys = [p[1] for p in poly]
        return (sum(xs) / n, sum(ys) / n)
    return (cx / (3.0 * area2), cy / (3.0 * area2))


def buffered_polygon(points: Sequence[Point], r: float) -> list[Point]:
    """Turn a degenerate point set (single point or collinear run) into a
    proper polygon: a square of side 2r around a point, or the segment's
    oriented rectangle extended by r at both ends."""
    pts = sorted(set(points))
    if len(pts) == 1:
        x, y = pts[0]
        return [(x - r, y - r), (x + r, y - r), (x + r, y + r), (x - r, y + r)]
    a, b = pts[0], pts[-1]
    dx, dy = b[0] - a[0], b[1] - a[1]
    length = math.hypot(dx, dy)
    ux, uy = dx / length, dy / length
    nx, ny = -uy, ux
    ax, ay = a[0] - ux * r, a[1] - uy * r
    bx, by = b[0] + ux * r, b[1] + uy * r
    return [
        (ax + nx * r, ay + ny * r),
        (ax - nx * r, ay - ny * r),
        (bx - nx * r, by - ny * r),
        (bx + nx * r, by + ny * r),
    ]


# --------------------------------------------------------------------------
# derived predicates over a knowledge base
# --------------------------------------------------------------------------


def distance_at(kb: "KnowledgeBase", a: str, b: str, t: float) -> Optional[float]:
    pa = kb.position_at(a, t)
    pb = kb.position_at(b, t)
    if pa is None or pb is None:
        return None
    return dist(pa, pb)


def near(
    kb: "KnowledgeBase", a: str, b: str, t: float, cfg: GeometryConfig = DEFAULT_GEOMETRY
) -> Optional[bool]:
    d = distance_at(kb, a, b, t)
    if d is None:
        return None
    return d <= cfg.near_threshold


def _segment_blocked(
    kb: "KnowledgeBase",
    pa: Point,
    pb: Point,
    exclude: frozenset[str],
    t: float,
    r: float,
) -> bool:
    for ent in kb.entities.values():
        if ent.entity_id in exclude:
            continue
        if ent.static:
            if ent.footprint and segment_crosses_polygon(pa, pb, ent.footprint):
                return True
            continue
        pe = kb.position_at(ent.entity_id, t)
        if pe is not None and point_segment_distance(pe, pa, pb) <= r:
            return True
    return False


def clear_line_of_sight(
    kb: "KnowledgeBase", a: str, b: str, t: float, cfg: GeometryConfig = DEFAULT_GEOMETRY
) -> Optional[bool]:
    """True when the open ground-plane segment between a and b at time t
    neither crosses a static occluder footprint nor passes within
    los_block_radius of a third dynamic entity's position."""
    pa = kb.position_at(a, t)
    pb = kb.position_at(b, t)
    if pa is None or pb is None:
        return None
    return not _segment_blocked(
        kb, pa, pb, frozenset({a, b}), t, cfg.los_block_radius
    )


def occluding(
    kb: "KnowledgeBase",
    blocker: str,
    a: str,
    b: str,
    t: float,
    cfg: GeometryConfig = DEFAULT_GEOMETRY,
) -> Optional[bool]:
    """True when `blocker` specifically interrupts the a-b line of sight."""
    if blocker == a or blocker == b:
        return False
    pa = kb.position_at(a, t)
    pb = kb.position_at(b, t)
    ent = kb.entities.get(blocker)
    if pa is None or pb is None or ent is None:
        return None
    if ent.static:
        if not ent.footprint:
            return None
        return segment_crosses_polygon(pa, pb, ent.footprint)
    pe = kb.position_at(blocker, t)
    if pe is None:
        return None
    return point_segment_distance(pe, pa, pb) <= cfg.los_block_radius


def inside(
    kb: "KnowledgeBase", a: str, b: str, t: float, cfg: GeometryConfig = DEFAULT_GEOMETRY
) -> Optional[bool]:
    """True when a's position lies inside the footprint polygon of static b."""
    pa = kb.position_at(a, t)
    ent = kb.entities.get(b)
    if pa is None or ent is None or not ent.static or not ent.footprint:
        return None
    return point_in_polygon(pa, ent.footprint)


def touching(
    kb: "KnowledgeBase", a: str, b: str, t: float, cfg: GeometryConfig = DEFAULT_GEOMETRY
) -> Optional[bool]:
    """Contact test between two body disks (dynamic) or a disk and a footprint."""
    ea = kb.entities.get(a)
    eb = kb.entities.get(b)
    if ea is None or eb is None:
        return None
    r = cfg.los_block_radius
    if ea.static and ea.footprint and not eb.static:
        pb = kb.position_at(b, t)
        if pb is None:
            return None
        return point_polygon_distance(pb, ea.footprint) <= r
    if eb.static and eb.footprint and not ea.static:
        pa = kb.position_at(a, t)
        if pa is None:
            return None
        return point_polygon_distance(pa, eb.footprint) <= r
    d = distance_at(kb, a, b, t)
    if d is None:
        return None
    return d <= 2.0 * r
