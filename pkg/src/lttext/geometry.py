"""Planar polygon arithmetic for text-region matching.

Polygons are simple (non self-intersecting) rings of float vertices. The
intersection area of two arbitrary simple polygons, convex or not, is
obtained by clipping every edge of each polygon against the other and
integrating the shoelace form along the fragments that bound the common
region. This gives the same area a Weiler-Atherton style clipper would,
without materialising the output rings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DegeneratePolygon, SelfIntersectingPolygon

Point = tuple[float, float]

DUPLICATE_TOL = 1e-6
_PARAM_EPS = 1e-12


def _signed_area(pts: Sequence[Point]) -> float:
    n = len(pts)
    s = 0.0
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    # assumes a, b, p collinear
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """Closed-segment intersection test (touching counts)."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
            ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _on_segment(q1, q2, p1):
        return True
    if d2 == 0 and _on_segment(q1, q2, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, q1):
        return True
    if d4 == 0 and _on_segment(p1, p2, q2):
        return True
    return False


def _merge_duplicates(pts: list[Point], tol: float) -> list[Point]:
    out: list[Point] = []
    for p in pts:
        if out and abs(p[0] - out[-1][0]) <= tol and abs(p[1] - out[-1][1]) <= tol:
            continue
        out.append(p)
    while len(out) > 1 and abs(out[0][0] - out[-1][0]) <= tol and abs(out[0][1] - out[-1][1]) <= tol:
        out.pop()
    return out


def _find_self_intersection(pts: Sequence[Point]) -> tuple[int, int] | None:
    n = len(pts)
    for i in range(n):
        a0, a1 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            b0, b1 = pts[j], pts[(j + 1) % n]
            if j == i + 1 or (i == 0 and j == n - 1):
                # adjacent edges share one vertex; they may only meet there
                shared = a1 if j == i + 1 else a0
                other_a = a0 if j == i + 1 else a1
                other_b = b1 if j == i + 1 else b0
                if _orient(shared, other_a, other_b) == 0:
                    # collinear adjacent edges folding back onto each other
                    ax, ay = other_a[0] - shared[0], other_a[1] - shared[1]
                    bx, by = other_b[0] - shared[0], other_b[1] - shared[1]
                    if ax * bx + ay * by > 0:
                        return i, j
                continue
            if segments_intersect(a0, a1, b0, b1):
                return i, j
    return None


@dataclass(frozen=True)
class Polygon:
    """A validated simple polygon.

    ``points`` keeps the caller's vertex order (after merging repeated
    consecutive vertices) so serialisation round-trips; ``ring`` is the
    counter-clockwise copy every computation uses.
    """

    points: tuple[Point, ...]
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self) -> None:
        raw = []
        for p in self.points:
            if len(p) != 2:
                raise DegeneratePolygon(f"vertex {p!r} is not an (x, y) pair")
            x, y = float(p[0]), float(p[1])
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DegeneratePolygon(f"non-finite vertex ({x}, {y})")
            raw.append((x, y))
        pts = _merge_duplicates(raw, DUPLICATE_TOL)
        object.__setattr__(self, "points", tuple(pts))
        object.__setattr__(self, "_signed", _signed_area(pts) if len(pts) >= 3 else 0.0)
        if self.validate:
            self.check()

    def check(self) -> None:
        """Raise unless the polygon is simple with positive area."""
        if len(self.points) < 3:
            raise DegeneratePolygon(f"polygon needs 3 distinct vertices, got {len(self.points)}")
        if not abs(self._signed) > 0.0:
            raise DegeneratePolygon("polygon has zero area")
        hit = _find_self_intersection(self.points)
        if hit is not None:
            raise SelfIntersectingPolygon(f"edges {hit[0]} and {hit[1]} intersect")

    @classmethod
    def from_flat(cls, coords: Sequence[float]) -> "Polygon":
        if len(coords) % 2:
            raise DegeneratePolygon("odd number of coordinates")
        return cls(tuple((coords[i], coords[i + 1]) for i in range(0, len(coords), 2)))

    @classmethod
    def box(cls, x0: float, y0: float, x1: float, y1: float) -> "Polygon":
        return cls(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    @cached_property
    def ring(self) -> tuple[Point, ...]:
        return self.points if self._signed > 0 else self.points[::-1]

    @cached_property
    def bounds(self) -> tuple[float, float, float, float]:
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        return min(xs), min(ys), max(xs), max(ys)

    @property
    def is_ccw(self) -> bool:
        return self._signed > 0

    def __len__(self) -> int:
        return len(self.points)

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(tuple((x + dx, y + dy) for x, y in self.points), validate=False)

    def scaled(self, s: float) -> "Polygon":
        return Polygon(tuple((x * s, y * s) for x, y in self.points), validate=False)


def area(p: Polygon) -> float:
    if len(p.points) < 3 or p._signed == 0.0:
        raise DegeneratePolygon("polygon has fewer than 3 distinct vertices or zero area")
    return abs(p._signed)


def _locate(pt: Point, ring: Sequence[Point], tol: float) -> tuple[int, tuple[float, float] | None]:
    """Return (1, None) inside, (0, None) outside, (-1, edge_dir) on the boundary."""
    x, y = pt
    n = len(ring)
    inside = False
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        l2 = ex * ex + ey * ey
        t = ((x - x0) * ex + (y - y0) * ey) / l2
        if -_PARAM_EPS <= t <= 1 + _PARAM_EPS:
            cx, cy = x0 + t * ex, y0 + t * ey
            if math.hypot(x - cx, y - cy) <= tol:
                return -1, (ex, ey)
        if (y0 > y) != (y1 > y):
            xi = x0 + (y - y0) * ex / ey
            if x < xi:
                inside = not inside
    return (1 if inside else 0), None


def _fragment_integral(a: Sequence[Point], b: Sequence[Point], keep_shared: bool, tol: float) -> float:
    """Twice the signed area contributed by the parts of ring ``a`` bounding a∩b."""
    total = 0.0
    nb = len(b)
    na = len(a)
    for i in range(na):
        a0 = a[i]
        a1 = a[(i + 1) % na]
        rx, ry = a1[0] - a0[0], a1[1] - a0[1]
        rr = rx * rx + ry * ry
        ts = [0.0, 1.0]
        for j in range(nb):
            b0 = b[j]
            b1 = b[(j + 1) % nb]
            sx, sy = b1[0] - b0[0], b1[1] - b0[1]
            qx, qy = b0[0] - a0[0], b0[1] - a0[1]
            denom = rx * sy - ry * sx
            if abs(denom) > 1e-12 * rr:
                t = (qx * sy - qy * sx) / denom
                u = (qx * ry - qy * rx) / denom
                if -_PARAM_EPS <= t <= 1 + _PARAM_EPS and -_PARAM_EPS <= u <= 1 + _PARAM_EPS:
                    ts.append(min(1.0, max(0.0, t)))
            elif abs(qx * ry - qy * rx) <= tol * math.sqrt(rr):
                # collinear: split at the other edge's endpoints
                for px, py in (b0, b1):
                    t = ((px - a0[0]) * rx + (py - a0[1]) * ry) / rr
                    if 0.0 < t < 1.0:
                        ts.append(t)
        ts.sort()
        for k in range(len(ts) - 1):
            t0, t1 = ts[k], ts[k + 1]
            if t1 - t0 <= _PARAM_EPS:
                continue
            px, py = a0[0] + rx * t0, a0[1] + ry * t0
            qx, qy = a0[0] + rx * t1, a0[1] + ry * t1
            loc, edge = _locate(((px + qx) * 0.5, (py + qy) * 0.5), b, tol)
            if loc == 1 or (loc == -1 and keep_shared and edge[0] * rx + edge[1] * ry > 0):
                total += px * qy - qx * py
    return total


def _shift(ring: Sequence[Point], ox: float, oy: float) -> list[Point]:
    return [(x - ox, y - oy) for x, y in ring]


def intersection_area(a: Polygon, b: Polygon) -> float:
    area_a, area_b = area(a), area(b)
    ax0, ay0, ax1, ay1 = a.bounds
    bx0, by0, bx1, by1 = b.bounds
    if ax1 <= bx0 or bx1 <= ax0 or ay1 <= by0 or by1 <= ay0:
        return 0.0
    # work in a frame local to the overlap so large offsets don't cost precision
    ox, oy = max(ax0, bx0), max(ay0, by0)
    ra = _shift(a.ring, ox, oy)
    rb = _shift(b.ring, ox, oy)
    scale = max(ax1 - ax0, ay1 - ay0, bx1 - bx0, by1 - by0)
    tol = 1e-9 * scale
    twice = _fragment_integral(ra, rb, True, tol) + _fragment_integral(rb, ra, False, tol)
    inter = max(0.0, 0.5 * twice)
    return min(inter, area_a, area_b)


def iou(a: Polygon, b: Polygon) -> float:
    inter = intersection_area(a, b)
    if inter <= 0.0:
        return 0.0
    union = area(a) + area(b) - inter
    return min(1.0, inter / union)


def intersection_over_first(a: Polygon, b: Polygon) -> float:
    return min(1.0, intersection_area(a, b) / area(a))


def _raster_mask(ring: Sequence[Point], xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    # even-odd rule at cell centres, counted by scanline crossings
    res_y, res_x = len(ys), len(xs)
    toggles = np.zeros((res_y, res_x + 1), dtype=np.int32)
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        if y0 == y1:
            continue
        lo, hi = (y0, y1) if y0 < y1 else (y1, y0)
        rows = np.nonzero((ys >= lo) & (ys < hi))[0]
        if rows.size == 0:
            continue
        xi = x0 + (ys[rows] - y0) * (x1 - x0) / (y1 - y0)
        cols = np.searchsorted(xs, xi, side="right")
        np.add.at(toggles, (rows, cols), 1)
    return (np.cumsum(toggles[:, :-1], axis=1) & 1).astype(bool)


def rasterized_iou_oracle(a: Polygon, b: Polygon, resolution: int = 1024) -> float:
    """Grid estimate of IoU, for cross-checking ``iou`` in tests."""
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    ax0, ay0, ax1, ay1 = a.bounds
    bx0, by0, bx1, by1 = b.bounds
    x0, y0 = min(ax0, bx0), min(ay0, by0)
    x1, y1 = max(ax1, bx1), max(ay1, by1)
    xs = x0 + (np.arange(resolution) + 0.5) * ((x1 - x0) / resolution)
    ys = y0 + (np.arange(resolution) + 0.5) * ((y1 - y0) / resolution)
    ma = _raster_mask(a.points, xs, ys)
    mb = _raster_mask(b.points, xs, ys)
    union = np.count_nonzero(ma | mb)
    if union == 0:
        return 0.0
    return np.count_nonzero(ma & mb) / union


def polygons_from(points_list: Iterable[Sequence[Point]]) -> list[Polygon]:
    return [Polygon(tuple(map(tuple, pts))) for pts in points_list]
