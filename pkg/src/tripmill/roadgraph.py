"""Road network: segment storage, spatial candidate lookup, LRS and regions.

The graph is immutable after load. Connectivity comes from shared segment
endpoints (quantized to 1e-7 degrees); a uniform grid over segment bounding
boxes answers radius queries; bounded best-first search over endpoint nodes
supplies route distances for the matcher. Segments are undirected for
snapping; the oneway flag only constrains route distances.
"""

from __future__ import annotations

import csv
import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .geo import (
    METERS_PER_DEG_LAT,
    GeoPoint,
    haversine_distance,
    path_length,
    point_in_ring,
    project_to_polyline,
)
from .model import MPS_PER_MPH

ROAD_CLASSES = ("motorway", "arterial", "collector", "local", "other")

_CELL_DEG = 250.0 / METERS_PER_DEG_LAT  # ~250 m spatial-index cells


@dataclass(frozen=True, slots=True)
class LrsAttributes:
    way_id: str
    route_name: str
    direction: str
    mile_start: float
    mile_end: float


@dataclass
class RoadSegment:
    way_id: str
    polyline: tuple[GeoPoint, ...]
    road_class: str = "other"
    speed_limit: float | None = None  # m/s
    lanes: int | None = None
    oneway: bool = False
    length: float = 0.0
    lrs: LrsAttributes | None = None

    def __post_init__(self) -> None:
        if not self.length:
            self.length = path_length(list(self.polyline))


@dataclass(frozen=True, slots=True)
class Candidate:
    way_id: str
    snapped_point: GeoPoint
    distance_along: float
    perpendicular_distance: float


def _node_key(p: GeoPoint) -> tuple[float, float]:
    return (round(p.latitude, 7), round(p.longitude, 7))


class RoadGraph:
    """Loaded network with spatial index, connectivity, and route search."""

    def __init__(self, segments: list[RoadSegment], rejected: list[str] | None = None):
        self.segments: dict[str, RoadSegment] = {}
        self.rejected_way_ids: list[str] = rejected or []
        self._node_ids: dict[tuple[float, float], int] = {}
        self.node_points: list[GeoPoint] = []
        self._adjacency: list[list[tuple[int, float]]] = []
        self._segment_nodes: dict[str, tuple[int, int]] = {}
        self._grid: dict[tuple[int, int], list[str]] = {}
        self._route_cache: dict[int, tuple[float, dict[int, float]]] = {}
        for seg in segments:
            self._add_segment(seg)

    def _node(self, p: GeoPoint) -> int:
        key = _node_key(p)
        node = self._node_ids.get(key)
        if node is None:
            node = len(self.node_points)
            self._node_ids[key] = node
            self.node_points.append(p)
            self._adjacency.append([])
        return node

    def _add_segment(self, seg: RoadSegment) -> None:
        if seg.way_id in self.segments:
            raise ValueError(f"duplicate way_id {seg.way_id!r}")
        self.segments[seg.way_id] = seg
        a = self._node(seg.polyline[0])
        b = self._node(seg.polyline[-1])
        self._segment_nodes[seg.way_id] = (a, b)
        self._adjacency[a].append((b, seg.length))
        if not seg.oneway:
            self._adjacency[b].append((a, seg.length))
        lats = [v.latitude for v in seg.polyline]
        lons = [v.longitude for v in seg.polyline]
        for ix in range(int(min(lats) // _CELL_DEG), int(max(lats) // _CELL_DEG) + 1):
            for iy in range(int(min(lons) // _CELL_DEG), int(max(lons) // _CELL_DEG) + 1):
                self._grid.setdefault((ix, iy), []).append(seg.way_id)

    @property
    def node_count(self) -> int:
        return len(self.node_points)

    def segment_endpoints(self, way_id: str) -> tuple[int, int]:
        return self._segment_nodes[way_id]

    def _cells_near(self, point: GeoPoint, radius: float) -> set[str]:
        dlat = radius / METERS_PER_DEG_LAT
        lat_lo = point.latitude - dlat
        lat_hi = point.latitude + dlat
        cos_min = min(
            abs(math.cos(math.radians(max(-90.0, min(90.0, lat)))))
            for lat in (lat_lo, lat_hi, point.latitude)
        )
        dlon = dlat / max(cos_min, 1e-9) * 1.01
        found: set[str] = set()
        for ix in range(int(lat_lo // _CELL_DEG), int(lat_hi // _CELL_DEG) + 1):
            for iy in range(int((point.longitude - dlon) // _CELL_DEG), int((point.longitude + dlon) // _CELL_DEG) + 1):
                found.update(self._grid.get((ix, iy), ()))
        return found

    def nearest_candidates(self, point: GeoPoint, radius: float) -> list[Candidate]:
        """One candidate per segment within radius, nearest first.

        Each candidate sits at the segment's closest centerline position;
        ties in perpendicular distance order by way_id.
        """

        if radius <= 0:
            raise ValueError("radius must be > 0")
        out = []
        for way_id in self._cells_near(point, radius):
            seg = self.segments[way_id]
            along, snapped, dist = project_to_polyline(point, list(seg.polyline))
            if dist <= radius:
                out.append(Candidate(way_id, snapped, along, dist))
        out.sort(key=lambda c: (c.perpendicular_distance, c.way_id))
        return out

    def node_distances(self, source: int, cutoff: float) -> dict[int, float]:
        """Bounded best-first shortest-path distances from one endpoint node.

        The per-source map is cached together with the cutoff it was explored
        to; larger requests re-explore with doubled headroom.
        """

        cached = self._route_cache.get(source)
        if cached is not None and cached[0] >= cutoff:
            return cached[1]
        explore_to = max(cutoff * 2.0, 1_000.0)
        dist: dict[int, float] = {source: 0.0}
        heap = [(0.0, source)]
        while heap:
            d, node = heapq.heappop(heap)
            if d > dist.get(node, math.inf):
                continue
            if d > explore_to:
                break
            for nbr, w in self._adjacency[node]:
                nd = d + w
                if nd <= explore_to and nd < dist.get(nbr, math.inf):
                    dist[nbr] = nd
                    heapq.heappush(heap, (nd, nbr))
        self._route_cache[source] = (explore_to, dist)
        return dist

    def route_distance(self, a: Candidate, b: Candidate, cutoff: float) -> float | None:
        """Shortest driving distance between two snapped positions, or None
        if every route exceeds the cutoff. Oneway segments are traversed
        start-to-end only."""

        best = math.inf
        seg_a = self.segments[a.way_id]
        seg_b = self.segments[b.way_id]
        if a.way_id == b.way_id:
            delta = b.distance_along - a.distance_along
            if not seg_a.oneway:
                best = abs(delta)
            elif delta >= 0:
                best = delta
        node_a0, node_a1 = self._segment_nodes[a.way_id]
        node_b0, node_b1 = self._segment_nodes[b.way_id]
        exits = [(node_a1, seg_a.length - a.distance_along)]
        if not seg_a.oneway:
            exits.append((node_a0, a.distance_along))
        entries = [(node_b0, b.distance_along)]
        if not seg_b.oneway:
            entries.append((node_b1, seg_b.length - b.distance_along))
        for exit_node, exit_cost in exits:
            if exit_cost > cutoff:
                continue
            dmap = self.node_distances(exit_node, cutoff)
            for entry_node, entry_cost in entries:
                via = dmap.get(entry_node)
                if via is not None:
                    total = exit_cost + via + entry_cost
                    if total < best:
                        best = total
        if best > cutoff:
            return None
        return best


def load_network(path: str | Path) -> RoadGraph:
    """Load the JSON network interchange file.

    Segments with fewer than 2 distinct vertices or invalid coordinates are
    rejected and recorded on the graph; a duplicate way_id aborts the load.
    """

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    segments: list[RoadSegment] = []
    rejected: list[str] = []
    for raw in doc.get("segments", []):
        way_id = str(raw["way_id"])
        coords = raw.get("coordinates") or []
        polyline = tuple(GeoPoint(lat, lon) for lon, lat in coords)
        if len(polyline) < 2 or not all(v.is_valid() for v in polyline):
            rejected.append(way_id)
            continue
        limit_mph = raw.get("speed_limit_mph")
        seg = RoadSegment(
            way_id=way_id,
            polyline=polyline,
            road_class=raw.get("road_class", "other"),
            speed_limit=limit_mph * MPS_PER_MPH if limit_mph is not None else None,
            lanes=raw.get("lanes"),
            oneway=bool(raw.get("oneway", False)),
        )
        if seg.length <= 0:
            rejected.append(way_id)
            continue
        segments.append(seg)
    return RoadGraph(segments, rejected=rejected)


def load_lrs(path: str | Path) -> list[LrsAttributes]:
    """Read the LRS CSV (way_id,route_name,direction,mile_start,mile_end)."""

    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            attrs = LrsAttributes(
                way_id=row["way_id"],
                route_name=row["route_name"],
                direction=row["direction"],
                mile_start=float(row["mile_start"]),
                mile_end=float(row["mile_end"]),
            )
            if attrs.mile_start > attrs.mile_end:
                raise ValueError(f"way {attrs.way_id!r}: mile_start > mile_end")
            rows.append(attrs)
    return rows


def conflate_lrs(graph: RoadGraph, rows: list[LrsAttributes]) -> list[LrsAttributes]:
    """Attach LRS attributes by way_id; returns rows with no matching segment.

    Duplicate way_ids in the table abort; geometry and connectivity are
    never altered.
    """

    seen: set[str] = set()
    unmatched = []
    for attrs in rows:
        if attrs.way_id in seen:
            raise ValueError(f"duplicate LRS row for way {attrs.way_id!r}")
        seen.add(attrs.way_id)
        seg = graph.segments.get(attrs.way_id)
        if seg is None:
            unmatched.append(attrs)
        else:
            seg.lrs = attrs
    return unmatched


@dataclass
class RegionIndex:
    """postal_code -> closed polygon ring, for zip lookup fallback."""

    regions: dict[str, tuple[GeoPoint, ...]] = field(default_factory=dict)

    def add(self, postal_code: str, ring: list[GeoPoint]) -> None:
        if ring and ring[0] != ring[-1]:
            ring = ring + [ring[0]]
        self.regions[postal_code] = tuple(ring)


def load_regions(path: str | Path) -> RegionIndex:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    index = RegionIndex()
    for raw in doc.get("regions", []):
        ring = [GeoPoint(lat, lon) for lon, lat in raw["ring"]]
        index.add(str(raw["postal_code"]), ring)
    return index


def zip_lookup(point: GeoPoint, regions: RegionIndex) -> str | None:
    """Containing postal code, or None; boundary ties go to the smallest code."""

    matches = [
        code for code, ring in regions.regions.items() if point_in_ring(point, list(ring))
    ]
    return min(matches) if matches else None
