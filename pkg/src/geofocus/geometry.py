"""Planar geometry primitives shared by resolution and prediction.

Coordinates are (latitude, longitude) degree pairs treated as a flat plane.
The only concession to the sphere is an optional longitude re-branching:
when a document's points leave a gap wider than 180 degrees, the points on
one side are shifted by 360 so that distances are measured across the short
way around. Everything else is plain Euclidean math, which keeps the
brute-force test oracles trivial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class GeoPoint:
    lat: float
    lon: float


def distance(p: GeoPoint, q: GeoPoint) -> float:
    return math.hypot(p.lat - q.lat, p.lon - q.lon)


def point_segment_distance(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> float:
    """Distance from p to the closed segment a-b."""
    ax, ay = a.lat, a.lon
    dx, dy = b.lat - a.lat, b.lon - a.lon
    seg_len_sq = dx * dx + dy * dy
    if seg_len_sq == 0.0:
        return distance(p, a)
    t = ((p.lat - ax) * dx + (p.lon - ay) * dy) / seg_len_sq
    t = min(1.0, max(0.0, t))
    return math.hypot(p.lat - (ax + t * dx), p.lon - (ay + t * dy))


def mean_point(points: list[GeoPoint]) -> GeoPoint:
    n = len(points)
    return GeoPoint(sum(p.lat for p in points) / n, sum(p.lon for p in points) / n)


def ccw_sort(points: list[GeoPoint]) -> list[GeoPoint]:
    """Order points counter-clockwise by angle around their arithmetic mean.

    Ties on angle (collinear with the mean) are broken by radius so the
    ordering is deterministic. The resulting ring is simple whenever no two
    points share an angle, because the boundary winds monotonically around
    the mean.
    """
    if len(points) <= 2:
        return list(points)
    c = mean_point(points)

    def key(p: GeoPoint) -> tuple[float, float]:
        return (math.atan2(p.lon - c.lon, p.lat - c.lat), distance(p, c))

    return sorted(points, key=key)


def ring_area(ring: list[GeoPoint]) -> float:
    """Signed shoelace area of a closed ring (vertices given once)."""
    total = 0.0
    n = len(ring)
    for i in range(n):
        p, q = ring[i], ring[(i + 1) % n]
        total += p.lat * q.lon - q.lat * p.lon
    return total / 2.0


def ring_centroid(ring: list[GeoPoint]) -> GeoPoint:
    """Area centroid of a ring; falls back to the length-weighted centroid
    when the ring is degenerate (collinear vertices), and to the single
    vertex when it has no extent at all."""
    if len(ring) == 1:
        return ring[0]
    if len(ring) == 2:
        return GeoPoint((ring[0].lat + ring[1].lat) / 2.0, (ring[0].lon + ring[1].lon) / 2.0)
    area = ring_area(ring)
    if abs(area) > 1e-12:
        cx = cy = 0.0
        n = len(ring)
        for i in range(n):
            p, q = ring[i], ring[(i + 1) % n]
            cross = p.lat * q.lon - q.lat * p.lon
            cx += (p.lat + q.lat) * cross
            cy += (p.lon + q.lon) * cross
        return GeoPoint(cx / (6.0 * area), cy / (6.0 * area))
    # Zero-area ring: weight each edge midpoint by edge length.
    total_len = 0.0
    cx = cy = 0.0
    n = len(ring)
    for i in range(n):
        p, q = ring[i], ring[(i + 1) % n]
        seg = distance(p, q)
        total_len += seg
        cx += seg * (p.lat + q.lat) / 2.0
        cy += seg * (p.lon + q.lon) / 2.0
    if total_len <= 1e-12:
        return ring[0]
    return GeoPoint(cx / total_len, cy / total_len)


def point_in_ring(p: GeoPoint, ring: list[GeoPoint]) -> bool:
    """Boundary-inclusive point-in-polygon test (ray casting)."""
    n = len(ring)
    if n < 3:
        return False
    inside = False
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        if point_segment_distance(p, a, b) <= 1e-12:
            return True
        if (a.lon > p.lon) != (b.lon > p.lon):
            x_cross = a.lat + (p.lon - a.lon) * (b.lat - a.lat) / (b.lon - a.lon)
            if p.lat < x_cross:
                inside = not inside
    return inside


def point_ring_distance(p: GeoPoint, ring: list[GeoPoint]) -> float:
    """Distance from p to the polygon bounded by ring; 0 when inside."""
    if point_in_ring(p, ring):
        return 0.0
    n = len(ring)
    return min(point_segment_distance(p, ring[i], ring[(i + 1) % n]) for i in range(n))


def normalize_branch(points: list[GeoPoint]) -> list[GeoPoint]:
    """Shift longitudes onto the branch that minimizes spread.

    If the sorted longitudes of the set leave an internal gap wider than
    180 degrees, everything at or below the gap is moved up by 360 so the
    set becomes contiguous. At most one such gap can exist.
    """
    if len(points) < 2:
        return list(points)
    lons = sorted({p.lon for p in points})
    cut: float | None = None
    for lo, hi in zip(lons, lons[1:]):
        if hi - lo > 180.0:
            cut = lo
            break
    if cut is None:
        return list(points)
    return [GeoPoint(p.lat, p.lon + 360.0) if p.lon <= cut else p for p in points]
