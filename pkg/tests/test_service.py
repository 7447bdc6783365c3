import math

import pytest
from fastapi.testclient import TestClient

from tripmill.geo import EARTH_RADIUS_M, GeoPoint
from tripmill.model import MPS_PER_MPH
from tripmill.roadgraph import LrsAttributes, RegionIndex, RoadGraph, RoadSegment
from tripmill.service import ServiceState, create_app
from tripmill.summarize import HistogramStore, OdStore, StoreMeta, TripSummary

DEG_M = EARTH_RADIUS_M * math.pi / 180.0
ANCHOR = 1_646_611_200_000  # Monday 2022-03-07 00:00 UTC
TZ = -300


def seg(way_id: str, lat_deg: float, lon0: float, lon1: float, limit_mph: float | None, lrs=None):
    s = RoadSegment(
        way_id=way_id,
        polyline=(GeoPoint(lat_deg, lon0), GeoPoint(lat_deg, lon1)),
        road_class="arterial",
        speed_limit=limit_mph * MPS_PER_MPH if limit_mph is not None else None,
    )
    s.lrs = lrs
    return s


def trip_summary(jid, start_zip, end_zip, hour=12, day="mon", end_time=ANCHOR + 60_000):
    return TripSummary(
        journey_id=jid,
        start_time=ANCHOR,
        end_time=end_time,
        start_point=GeoPoint(0.0, 0.0),
        end_point=GeoPoint(0.0, 0.01),
        start_zip=start_zip,
        end_zip=end_zip,
        duration=60.0,
        path_length=1000.0,
        straight_line=900.0,
        point_count=20,
        start_hour_local=hour,
        start_day_of_week=day,
    )


@pytest.fixture()
def state() -> ServiceState:
    graph = RoadGraph(
        [
            seg("w-a", 0.000, 0.0, 0.002, 45.0, LrsAttributes("w-a", "RT-1", "EB", 0.0, 0.124)),
            seg("w-b", 0.002, 0.0, 0.002, 45.0, LrsAttributes("w-b", "RT-1", "EB", 0.124, 0.248)),
            seg("w-nolimit", 0.004, 0.0, 0.002, None),
            seg("w-nodata", 0.006, 0.0, 0.002, 30.0, LrsAttributes("w-nodata", "RT-1", "EB", 0.248, 0.372)),
        ]
    )
    hist = HistogramStore(5.0)
    # Monday 2022-03-07 hour 8 local: three traversals in [40,45), one in [10,15)
    hist.data[("w-a", "2022-03-07", 8)] = {8: 3, 2: 1}
    # Tuesday hour 17: two in [45,50)
    hist.data[("w-a", "2022-03-08", 17)] = {9: 2}
    # Saturday hour 12 on w-b
    hist.data[("w-b", "2022-03-12", 12)] = {8: 1}
    hist.data[("w-nolimit", "2022-03-07", 9)] = {5: 2}

    od = OdStore()
    od.cells[("A", "B", 12, "mon")] = 3
    od.cells[("A", "C", 12, "mon")] = 1
    od.cells[("A", "A", 12, "mon")] = 1
    od.cells[("B", "A", 17, "sat")] = 2

    trips = [
        trip_summary("t1", "A", "B"),
        trip_summary("t2", "A", "B"),
        trip_summary("t3", "A", "C", day="tue"),
        trip_summary("t4", "B", "A", hour=12, day="sat"),
    ]
    regions = RegionIndex()
    regions.add("A", [GeoPoint(0.0, 0.0), GeoPoint(0.0, 1.0), GeoPoint(1.0, 1.0), GeoPoint(1.0, 0.0)])
    return ServiceState(
        graph=graph,
        histograms=hist,
        od=od,
        trip_summaries=trips,
        meta=StoreMeta(bin_width_mph=5.0, tz_offset_minutes=TZ, corpus_digest="fixture"),
        regions=regions,
    )


@pytest.fixture()
def client(state) -> TestClient:
    return TestClient(create_app(state))


class TestSpeedDistribution:
    def test_default_filters(self, client):
        body = client.get("/segments/w-a/speed-distribution").json()
        assert body["total_traversals"] == 6
        assert sum(b["count"] for b in body["bins"]) == 6
        assert body["bins"][0] == {"lower_mph": 10.0, "upper_mph": 15.0, "count": 1}
        grid_total = sum(sum(row) for row in body["traversal_grid"])
        assert grid_total == 6
        assert body["traversal_grid"][0][8] == 4  # monday 8am
        assert body["traversal_grid"][1][17] == 2  # tuesday 5pm
        assert body["route_name"] == "RT-1"
        assert body["metrics"]["speed_limit_mph"] == 45.0
        assert body["metrics"]["p25"] <= body["metrics"]["p50"] <= body["metrics"]["p95"]

    def test_filters_and_eccho(self, client):
        body = client.get("/segments/w-a/speed-distribution?days=tue&hours=17").json()
        assert body["filters"] == {"days": ["tue"], "hours": [17]}
        assert body["total_traversals"] == 2
        assert body["bins"] == [{"lower_mph": 45.0, "upper_mph": 50.0, "count": 2}]

    def test_empty_hours_returns_200_with_zero(self, client):
        body = client.get("/segments/w-a/speed-distribution?hours=3")
        assert body.status_code == 200
        payload = body.json()
        assert payload["total_traversals"] == 0
        assert payload["bins"] == []
        assert payload["metrics"] is None

    def test_unknown_way_404(self, client):
        assert client.get("/segments/nope/speed-distribution").status_code == 404

    def test_malformed_filters_400(self, client):
        assert client.get("/segments/w-a/speed-distribution?days=funday").status_code == 400
        assert client.get("/segments/w-a/speed-distribution?hours=25").status_code == 400
        assert client.get("/segments/w-a/speed-distribution?hours=x").status_code == 400

    def test_limitless_segment_omits_limit_metrics(self, client):
        body = client.get("/segments/w-nolimit/speed-distribution").json()
        assert body["metrics"] is not None
        assert "speed_limit_mph" not in body["metrics"]
        assert "median_minus_limit" not in body["metrics"]


class TestRouteOverview:
    def test_sorted_by_mile_start(self, client):
        body = client.get("/routes/RT-1/overview?metric=median").json()
        ways = [s["way_id"] for s in body["segments"]]
        assert ways == ["w-a", "w-b", "w-nodata"]
        miles = [s["mile_start"] for s in body["segments"]]
        assert miles == sorted(miles)

    def test_single_traversal_percentile_is_its_value(self, client, state):
        body = client.get("/routes/RT-1/overview?metric=p95").json()
        w_b = [s for s in body["segments"] if s["way_id"] == "w-b"][0]
        # lone traversal in bin [40,45) -> midpoint convention gives 42.5
        assert w_b["metric_value"] == pytest.approx(42.5, abs=1e-9)

    def test_no_data_segment_has_null_metric(self, client):
        body = client.get("/routes/RT-1/overview?metric=median").json()
        w_nodata = [s for s in body["segments"] if s["way_id"] == "w-nodata"][0]
        assert w_nodata["metric_value"] is None

    def test_unknown_metric_400(self, client):
        assert client.get("/routes/RT-1/overview?metric=banana").status_code == 400

    def test_unknown_route_404(self, client):
        assert client.get("/routes/RT-9/overview?metric=median").status_code == 404


class TestOd:
    def test_origin_excluding_intra(self, client):
        body = client.get("/od?zip=A&direction=origin").json()
        assert body["total"] == 4
        assert body["rows"] == [
            {"zip": "B", "trips": 3, "percent": 75.0},
            {"zip": "C", "trips": 1, "percent": 25.0},
        ]

    def test_include_intra_adds_row(self, client):
        body = client.get("/od?zip=A&direction=origin&include_intra=true").json()
        assert body["total"] == 5
        assert {"zip": "A", "trips": 1, "percent": 20.0} in body["rows"]

    def test_destination_grouping(self, client):
        body = client.get("/od?zip=B&direction=destination").json()
        assert body["rows"] == [{"zip": "A", "trips": 3, "percent": 100.0}]

    def test_unknown_zip_empty_200(self, client):
        body = client.get("/od?zip=ZZ")
        assert body.status_code == 200
        assert body.json()["total"] == 0
        assert body.json()["rows"] == []

    def test_bad_direction_400(self, client):
        assert client.get("/od?zip=A&direction=sideways").status_code == 400

    def test_percent_sums_to_100_with_awkward_splits(self, state):
        # seven equal rows: plain rounding of 1/7 would sum to 100.1
        od = OdStore()
        for i in range(7):
            od.cells[("Z", f"D{i}", 12, "mon")] = 1
        state.od = od
        client = TestClient(create_app(state))
        body = client.get("/od?zip=Z").json()
        assert sum(r["trips"] for r in body["rows"]) == body["total"] == 7
        assert sum(r["percent"] for r in body["rows"]) == pytest.approx(100.0, abs=0.1)


class TestHeatmap:
    def test_start_endpoint_weekday(self, client):
        # t1, t2 start in A on monday noon; t3 starts in A on tuesday noon
        body = client.get("/heatmap?hour=12&dayclass=weekday&endpoint=start").json()
        assert body["cells"] == [{"zip": "A", "trips": 3}]

    def test_weekend(self, client):
        body = client.get("/heatmap?hour=12&dayclass=weekend&endpoint=start").json()
        assert body["cells"] == [{"zip": "B", "trips": 1}]

    def test_end_endpoint_uses_end_time(self, client):
        # end_time = ANCHOR + 60s -> 19:01 local sunday -> weekend, hour 19
        body = client.get("/heatmap?hour=19&dayclass=weekend&endpoint=end").json()
        by_zip = {c["zip"]: c["trips"] for c in body["cells"]}
        assert by_zip == {"A": 1, "B": 2, "C": 1}

    @pytest.mark.parametrize(
        "query",
        ["hour=25&dayclass=weekday", "hour=x&dayclass=weekday", "hour=12&dayclass=midweek", "hour=12&dayclass=weekday&endpoint=middle"],
    )
    def test_malformed_params_400(self, client, query):
        assert client.get(f"/heatmap?{query}").status_code == 400


class TestEnumerations:
    def test_routes(self, client):
        assert client.get("/routes").json() == {"routes": ["RT-1"]}

    def test_route_segments_sorted_with_geometry(self, client):
        body = client.get("/routes/RT-1/segments").json()
        assert [s["way_id"] for s in body["segments"]] == ["w-a", "w-b", "w-nodata"]
        assert body["segments"][0]["coordinates"] == [[0.0, 0.0], [0.002, 0.0]]
        assert body["segments"][0]["speed_limit_mph"] == 45.0

    def test_unknown_route_segments_empty(self, client):
        assert client.get("/routes/RT-9/segments").json()["segments"] == []

    def test_no_lrs_empty_routes(self, state):
        for s in state.graph.segments.values():
            s.lrs = None
        client = TestClient(create_app(state))
        assert client.get("/routes").json() == {"routes": []}

    def test_zips_union_of_regions_and_od(self, client):
        body = client.get("/zips").json()
        codes = [z["postal_code"] for z in body["zips"]]
        assert codes == ["A", "B", "C"]
        assert body["zips"][0]["ring"] is not None  # from regions
        assert body["zips"][1]["ring"] is None  # od-only zip


def test_responses_are_byte_deterministic(client):
    for path in (
        "/segments/w-a/speed-distribution?days=mon,tue&hours=8,17",
        "/od?zip=A&direction=origin&include_intra=true",
        "/heatmap?hour=12&dayclass=weekday&endpoint=start",
        "/routes/RT-1/segments",
    ):
        assert client.get(path).content == client.get(path).content


def test_cors_headers_are_permissive(client):
    resp = client.get("/routes", headers={"Origin": "http://dashboard.local"})
    assert resp.headers.get("access-control-allow-origin") == "*"


def test_default_filter_totals_match_traversal_store(fixture_run):
    # pipeline-backed integration: speed-distribution with no filters reports
    # exactly the traversal-summary row count of each way
    from collections import Counter

    from fixture_config import state_from_run
    from tripmill.summarize import read_traversal_summaries

    state = state_from_run(fixture_run)
    live = TestClient(create_app(state))
    rows, _ = read_traversal_summaries(fixture_run.stores_dir / "traversal_summaries.csv")
    per_way = Counter(r.way_id for r in rows)
    for way_id, count in sorted(per_way.items()):
        body = live.get(f"/segments/{way_id}/speed-distribution").json()
        assert body["total_traversals"] == count
