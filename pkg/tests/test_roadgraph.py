import json
import math
import random

import pytest

from tripmill.geo import EARTH_RADIUS_M, GeoPoint, interpolate, offset_by_meters, project_to_polyline
from tripmill.roadgraph import (
    Candidate,
    LrsAttributes,
    RegionIndex,
    RoadGraph,
    RoadSegment,
    conflate_lrs,
    load_lrs,
    load_network,
    load_regions,
    zip_lookup,
)
from tripmill.synthgen import SynthConfig, generate_network

DEG_M = EARTH_RADIUS_M * math.pi / 180.0


def seg(way_id: str, a: GeoPoint, b: GeoPoint, **kwargs) -> RoadSegment:
    return RoadSegment(way_id=way_id, polyline=(a, b), **kwargs)


def write_network(tmp_path, segments: list[dict]):
    path = tmp_path / "network.json"
    path.write_text(json.dumps({"segments": segments}))
    return path


class TestLoadNetwork:
    def test_two_segments_sharing_endpoint(self, tmp_path):
        path = write_network(
            tmp_path,
            [
                {"way_id": "w1", "coordinates": [[0.0, 0.0], [0.001, 0.0]], "road_class": "local"},
                {"way_id": "w2", "coordinates": [[0.001, 0.0], [0.001, 0.001]], "road_class": "local"},
            ],
        )
        graph = load_network(path)
        assert len(graph.segments) == 2
        assert graph.node_count == 3

    def test_empty_network(self, tmp_path):
        graph = load_network(write_network(tmp_path, []))
        assert graph.segments == {}
        assert graph.nearest_candidates(GeoPoint(0.0, 0.0), 100.0) == []

    def test_degenerate_segment_rejected_with_way_named(self, tmp_path):
        path = write_network(
            tmp_path,
            [
                {"way_id": "bad", "coordinates": [[0.0, 0.0]]},
                {"way_id": "ok", "coordinates": [[0.0, 0.0], [0.001, 0.0]]},
            ],
        )
        graph = load_network(path)
        assert graph.rejected_way_ids == ["bad"]
        assert list(graph.segments) == ["ok"]

    def test_duplicate_way_id_fails(self, tmp_path):
        path = write_network(
            tmp_path,
            [
                {"way_id": "w1", "coordinates": [[0.0, 0.0], [0.001, 0.0]]},
                {"way_id": "w1", "coordinates": [[0.0, 0.001], [0.001, 0.001]]},
            ],
        )
        with pytest.raises(ValueError, match="w1"):
            load_network(path)

    def test_speed_limit_converted_to_mps(self, tmp_path):
        path = write_network(
            tmp_path,
            [{"way_id": "w1", "coordinates": [[0.0, 0.0], [0.001, 0.0]], "speed_limit_mph": 65}],
        )
        graph = load_network(path)
        assert graph.segments["w1"].speed_limit == pytest.approx(65 * 0.44704)

    def test_synthetic_grid_has_expected_segments(self, tmp_path):
        paths = generate_network(SynthConfig(grid_rows=10, grid_cols=10, segment_length=200.0), tmp_path)
        graph = load_network(paths["network"])
        assert len(graph.segments) == 220
        for s in graph.segments.values():
            assert abs(s.length - 200.0) < 0.1

    def test_unit_grid(self, tmp_path):
        paths = generate_network(SynthConfig(grid_rows=1, grid_cols=1), tmp_path / "unit")
        graph = load_network(paths["network"])
        assert len(graph.segments) == 4


def make_parallel_graph(separation_m: float = 100.0) -> RoadGraph:
    """Two horizontal segments, the second `separation_m` north of the first."""

    dlat = separation_m / DEG_M
    a = seg("south", GeoPoint(0.0, 0.0), GeoPoint(0.0, 0.01))
    b = seg("north", GeoPoint(dlat, 0.0), GeoPoint(dlat, 0.01))
    return RoadGraph([a, b])


class TestNearestCandidates:
    def test_point_on_centerline(self):
        graph = make_parallel_graph()
        point = interpolate(GeoPoint(0.0, 0.0), GeoPoint(0.0, 0.01), 0.3)
        out = graph.nearest_candidates(point, 50.0)
        assert out[0].way_id == "south"
        assert out[0].perpendicular_distance < 1e-6

    def test_radius_excludes_far_segment(self):
        graph = make_parallel_graph()
        point = offset_by_meters(GeoPoint(0.0, 0.005), 0.0, -30.0)  # 30 m south of "south"
        assert graph.nearest_candidates(point, 20.0) == []
        assert [c.way_id for c in graph.nearest_candidates(point, 40.0)] == ["south"]

    def test_equidistant_parallel_segments(self):
        graph = make_parallel_graph(100.0)
        midpoint = offset_by_meters(GeoPoint(0.0, 0.005), 0.0, 50.0)
        out = graph.nearest_candidates(midpoint, 80.0)
        assert len(out) == 2
        for c in out:
            assert c.perpendicular_distance == pytest.approx(50.0, abs=0.01)
        assert [c.way_id for c in out] == ["north", "south"]  # tie broken by way_id

    def test_matches_brute_force_scan(self, tmp_path):
        paths = generate_network(SynthConfig(grid_rows=5, grid_cols=5, segment_length=150.0), tmp_path)
        graph = load_network(paths["network"])
        rng = random.Random(17)
        base = GeoPoint(38.0, -78.5)
        for _ in range(120):
            point = offset_by_meters(base, rng.uniform(-200, 950), rng.uniform(-200, 950))
            radius = rng.choice([30.0, 80.0, 160.0])
            got = graph.nearest_candidates(point, radius)
            expected = []
            for s in graph.segments.values():
                along, snapped, dist = project_to_polyline(point, list(s.polyline))
                if dist <= radius:
                    expected.append(Candidate(s.way_id, snapped, along, dist))
            expected.sort(key=lambda c: (c.perpendicular_distance, c.way_id))
            assert [c.way_id for c in got] == [c.way_id for c in expected]
            for g, e in zip(got, expected):
                assert g.perpendicular_distance == pytest.approx(e.perpendicular_distance, abs=1e-6)
                assert g.distance_along == pytest.approx(e.distance_along, abs=1e-6)

    def test_snapped_point_lies_on_polyline(self, tmp_path):
        paths = generate_network(SynthConfig(grid_rows=3, grid_cols=3), tmp_path)
        graph = load_network(paths["network"])
        rng = random.Random(3)
        base = GeoPoint(38.0, -78.5)
        for _ in range(60):
            point = offset_by_meters(base, rng.uniform(0, 600), rng.uniform(0, 600))
            for cand in graph.nearest_candidates(point, 120.0):
                poly = list(graph.segments[cand.way_id].polyline)
                _, _, dist = project_to_polyline(cand.snapped_point, poly)
                assert dist < 1e-6
                assert -1e-9 <= cand.distance_along <= graph.segments[cand.way_id].length + 1e-6

    def test_invalid_radius(self):
        graph = make_parallel_graph()
        with pytest.raises(ValueError):
            graph.nearest_candidates(GeoPoint(0.0, 0.0), 0.0)


class TestRouteDistance:
    def grid(self, tmp_path) -> RoadGraph:
        paths = generate_network(SynthConfig(grid_rows=3, grid_cols=3, segment_length=200.0), tmp_path)
        return load_network(paths["network"])

    def cand(self, graph: RoadGraph, way_id: str, t: float) -> Candidate:
        s = graph.segments[way_id]
        return Candidate(way_id, interpolate(s.polyline[0], s.polyline[-1], t), t * s.length, 0.0)

    def test_same_segment(self, tmp_path):
        graph = self.grid(tmp_path)
        a = self.cand(graph, "wh-00-00", 0.2)
        b = self.cand(graph, "wh-00-00", 0.7)
        d = graph.route_distance(a, b, 1e6)
        assert d == pytest.approx(0.5 * graph.segments["wh-00-00"].length, abs=0.01)
        assert graph.route_distance(b, a, 1e6) == pytest.approx(d, abs=1e-9)

    def test_adjacent_segments_via_shared_node(self, tmp_path):
        graph = self.grid(tmp_path)
        a = self.cand(graph, "wh-00-00", 0.5)  # 100 m from shared node at col 1
        b = self.cand(graph, "wh-00-01", 0.25)  # 50 m past it
        assert graph.route_distance(a, b, 1e6) == pytest.approx(150.0, abs=0.1)

    def test_cutoff_returns_none(self, tmp_path):
        graph = self.grid(tmp_path)
        a = self.cand(graph, "wh-00-00", 0.0)
        b = self.cand(graph, "wh-03-00", 1.0)
        assert graph.route_distance(a, b, 100.0) is None
        assert graph.route_distance(a, b, 1e6) is not None

    def test_oneway_blocks_backward_travel(self):
        fwd = seg("ow", GeoPoint(0.0, 0.0), GeoPoint(0.0, 0.01), oneway=True)
        graph = RoadGraph([fwd])
        a = Candidate("ow", interpolate(fwd.polyline[0], fwd.polyline[1], 0.2), 0.2 * fwd.length, 0.0)
        b = Candidate("ow", interpolate(fwd.polyline[0], fwd.polyline[1], 0.8), 0.8 * fwd.length, 0.0)
        assert graph.route_distance(a, b, 1e6) == pytest.approx(0.6 * fwd.length, abs=0.01)
        # backward has no route at all on an isolated oneway segment
        assert graph.route_distance(b, a, 1e6) is None


class TestConflateLrs:
    def rows(self):
        return [
            LrsAttributes("w1", "RT-1", "EB", 0.0, 0.12),
            LrsAttributes("missing", "RT-1", "EB", 0.12, 0.25),
        ]

    def graph(self):
        return RoadGraph([seg("w1", GeoPoint(0.0, 0.0), GeoPoint(0.0, 0.001))])

    def test_attach_and_report_unmatched(self):
        graph = self.graph()
        unmatched = conflate_lrs(graph, self.rows())
        assert graph.segments["w1"].lrs.route_name == "RT-1"
        assert [u.way_id for u in unmatched] == ["missing"]

    def test_duplicate_rows_fail(self):
        rows = [
            LrsAttributes("w1", "RT-1", "EB", 0.0, 0.1),
            LrsAttributes("w1", "RT-2", "WB", 0.1, 0.2),
        ]
        with pytest.raises(ValueError, match="w1"):
            conflate_lrs(self.graph(), rows)

    def test_geometry_untouched(self):
        graph = self.graph()
        before = graph.segments["w1"].polyline
        conflate_lrs(graph, self.rows())
        assert graph.segments["w1"].polyline == before

    def test_grid_fixture_enrichment_count(self, tmp_path):
        paths = generate_network(SynthConfig(grid_rows=10, grid_cols=10), tmp_path)
        graph = load_network(paths["network"])
        rows = load_lrs(paths["lrs"])
        unmatched = conflate_lrs(graph, rows)
        assert unmatched == []
        enriched = [s for s in graph.segments.values() if s.lrs is not None]
        assert len(enriched) == len(rows)

    def test_lrs_csv_mile_order_enforced(self, tmp_path):
        path = tmp_path / "lrs.csv"
        path.write_text("way_id,route_name,direction,mile_start,mile_end\nw1,RT-1,EB,2.0,1.0\n")
        with pytest.raises(ValueError, match="mile_start"):
            load_lrs(path)


class TestZipLookup:
    def regions(self) -> RegionIndex:
        index = RegionIndex()
        index.add("22030", [GeoPoint(0.0, 0.0), GeoPoint(0.0, 1.0), GeoPoint(1.0, 1.0), GeoPoint(1.0, 0.0)])
        index.add("22031", [GeoPoint(0.0, 1.0), GeoPoint(0.0, 2.0), GeoPoint(1.0, 2.0), GeoPoint(1.0, 1.0)])
        return index

    def test_centroid(self):
        assert zip_lookup(GeoPoint(0.5, 0.5), self.regions()) == "22030"
        assert zip_lookup(GeoPoint(0.5, 1.5), self.regions()) == "22031"

    def test_outside_all(self):
        assert zip_lookup(GeoPoint(5.0, 5.0), self.regions()) is None

    def test_shared_edge_tie_breaks_to_smallest_code(self):
        assert zip_lookup(GeoPoint(0.5, 1.0), self.regions()) == "22030"

    def test_load_regions_closes_rings(self, tmp_path):
        path = tmp_path / "regions.json"
        path.write_text(
            json.dumps({"regions": [{"postal_code": "z1", "ring": [[0, 0], [1, 0], [1, 1], [0, 1]]}]})
        )
        regions = load_regions(path)
        ring = regions.regions["z1"]
        assert ring[0] == ring[-1]
        assert zip_lookup(GeoPoint(0.5, 0.5), regions) == "z1"
