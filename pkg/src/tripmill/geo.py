"""Spherical-earth geodesy helpers shared by every pipeline stage.

All distances are great-circle meters on a fixed-radius sphere; no planar
shortcuts, so the same code path serves both desk-scale grids and real
coordinates. Polylines are parameterized linearly in (lat, lon) between
consecutive vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0

# golden-section constants for the point-to-segment projection
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """A WGS84 position in decimal degrees."""

    latitude: float
    longitude: float

    def is_valid(self) -> bool:
        return -90.0 <= self.latitude <= 90.0 and -180.0 <= self.longitude <= 180.0


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points."""

    lat1 = math.radians(a.latitude)
    lat2 = math.radians(b.latitude)
    dlat = lat2 - lat1
    dlon = math.radians(b.longitude - a.longitude)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def path_length(points: list[GeoPoint]) -> float:
    """Sum of great-circle distances over consecutive pairs; 0 for < 2 points."""

    total = 0.0
    for prev, cur in zip(points, points[1:]):
        total += haversine_distance(prev, cur)
    return total


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Forward azimuth from a to b, degrees clockwise from true north in [0, 360)."""

    lat1 = math.radians(a.latitude)
    lat2 = math.radians(b.latitude)
    dlon = math.radians(b.longitude - a.longitude)
    y = math.sin(dlon) * math.cos(lat2)
    x = math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlon)
    return math.degrees(math.atan2(y, x)) % 360.0


def interpolate(a: GeoPoint, b: GeoPoint, t: float) -> GeoPoint:
    """Point at parameter t in [0, 1] along the lat/lon-linear edge a->b."""

    return GeoPoint(
        a.latitude + (b.latitude - a.latitude) * t,
        a.longitude + (b.longitude - a.longitude) * t,
    )


def offset_by_meters(p: GeoPoint, east_m: float, north_m: float) -> GeoPoint:
    """Shift a point by a small local-tangent-frame displacement in meters."""

    lat = p.latitude + north_m / METERS_PER_DEG_LAT
    lon = p.longitude + east_m / (METERS_PER_DEG_LAT * math.cos(math.radians(p.latitude)))
    return GeoPoint(lat, lon)


def project_to_edge(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> tuple[float, GeoPoint, float]:
    """Closest position on the edge a->b to p.

    Returns (t, snapped_point, distance_m). The objective
    haversine(p, interpolate(a, b, t)) is unimodal for road-scale edges, so a
    golden-section search converges to the global minimum.
    """

    lo, hi = 0.0, 1.0
    m1 = lo + _INV_PHI2
    m2 = lo + _INV_PHI
    f1 = haversine_distance(p, interpolate(a, b, m1))
    f2 = haversine_distance(p, interpolate(a, b, m2))
    while hi - lo > 1e-10:
        if f1 <= f2:
            hi = m2
            m2 = m1
            f2 = f1
            m1 = lo + _INV_PHI2 * (hi - lo)
            f1 = haversine_distance(p, interpolate(a, b, m1))
        else:
            lo = m1
            m1 = m2
            f1 = f2
            m2 = lo + _INV_PHI * (hi - lo)
            f2 = haversine_distance(p, interpolate(a, b, m2))
    t = (lo + hi) / 2.0
    # endpoints are often the true optimum; prefer them when they win outright
    candidates = [(haversine_distance(p, a), 0.0, a), (haversine_distance(p, b), 1.0, b)]
    snapped = interpolate(a, b, t)
    candidates.append((haversine_distance(p, snapped), t, snapped))
    dist, t_best, best = min(candidates, key=lambda c: c[0])
    return t_best, best, dist


def project_to_polyline(p: GeoPoint, polyline: list[GeoPoint]) -> tuple[float, GeoPoint, float]:
    """Closest position on a polyline to p.

    Returns (distance_along_m from the first vertex, snapped_point,
    distance_m from p). The polyline must have at least 2 vertices.
    """

    best: tuple[float, GeoPoint, float] | None = None
    offset = 0.0
    for a, b in zip(polyline, polyline[1:]):
        edge_len = haversine_distance(a, b)
        t, snapped, dist = project_to_edge(p, a, b)
        if best is None or dist < best[2]:
            best = (offset + t * edge_len, snapped, dist)
        offset += edge_len
    assert best is not None, "polyline must have at least 2 vertices"
    return best


def point_at_distance(polyline: list[GeoPoint], distance_m: float) -> GeoPoint:
    """Point at the given arc distance from the polyline start (clamped to the ends)."""

    if distance_m <= 0.0:
        return polyline[0]
    remaining = distance_m
    for a, b in zip(polyline, polyline[1:]):
        edge_len = haversine_distance(a, b)
        if remaining <= edge_len:
            return interpolate(a, b, remaining / edge_len if edge_len > 0 else 0.0)
        remaining -= edge_len
    return polyline[-1]


def point_in_ring(p: GeoPoint, ring: list[GeoPoint]) -> bool:
    """Even-odd ray-casting containment test; points on an edge count as inside.

    The ring must be closed (first vertex == last vertex).
    """

    x, y = p.longitude, p.latitude
    inside = False
    for a, b in zip(ring, ring[1:]):
        x1, y1 = a.longitude, a.latitude
        x2, y2 = b.longitude, b.latitude
        if _on_edge(x, y, x1, y1, x2, y2):
            return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def _on_edge(x: float, y: float, x1: float, y1: float, x2: float, y2: float) -> bool:
    if not (min(x1, x2) - 1e-12 <= x <= max(x1, x2) + 1e-12):
        return False
    if not (min(y1, y2) - 1e-12 <= y <= max(y1, y2) + 1e-12):
        return False
    cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
    return abs(cross) <= 1e-12
