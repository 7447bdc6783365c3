"""Read-only HTTP+JSON facade over the summary stores.

All stores load into memory at startup; every endpoint is a pure function of
(stores, query), so identical requests return byte-identical bodies. Speeds
in responses are MPH; conversion happens only at this boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

from .model import DAY_KEYS, mps_to_mph
from .roadgraph import RegionIndex, RoadGraph, conflate_lrs, load_lrs, load_network, load_regions
from .summarize import (
    PERCENTILES,
    HistogramStore,
    OdStore,
    StoreMeta,
    TripSummary,
    local_datetime,
    read_trip_summaries,
    speed_percentiles,
)

WEEKDAYS = frozenset(DAY_KEYS[:5])
WEEKENDS = frozenset(DAY_KEYS[5:])

OVERVIEW_METRICS = ("median", "p95", "median_minus_limit", "p95_minus_limit")


@dataclass
class ServiceState:
    graph: RoadGraph
    histograms: HistogramStore
    od: OdStore
    trip_summaries: list[TripSummary]
    meta: StoreMeta
    regions: RegionIndex | None = None


def load_service_state(
    stores_dir: str | Path,
    network_path: str | Path,
    lrs_path: str | Path | None = None,
    regions_path: str | Path | None = None,
) -> ServiceState:
    stores_dir = Path(stores_dir)
    for name in ("way_histograms.json", "od_matrix.json", "trip_summaries.csv"):
        if not (stores_dir / name).exists():
            raise FileNotFoundError(f"missing store: {stores_dir / name}")
    graph = load_network(network_path)
    if lrs_path is not None:
        conflate_lrs(graph, load_lrs(lrs_path))
    histograms, meta = HistogramStore.read(stores_dir / "way_histograms.json")
    od, _ = OdStore.read(stores_dir / "od_matrix.json")
    trips, _ = read_trip_summaries(stores_dir / "trip_summaries.csv")
    regions = load_regions(regions_path) if regions_path is not None else None
    return ServiceState(
        graph=graph, histograms=histograms, od=od, trip_summaries=trips, meta=meta, regions=regions
    )


def _bad(msg: str) -> HTTPException:
    return HTTPException(status_code=400, detail=msg)


def _parse_days(raw: str | None) -> frozenset[str]:
    if raw is None or raw == "":
        return frozenset(DAY_KEYS)
    days = set()
    for token in raw.split(","):
        token = token.strip().lower()
        if token not in DAY_KEYS:
            raise _bad(f"unknown day {token!r}; expected one of {', '.join(DAY_KEYS)}")
        days.add(token)
    return frozenset(days)


def _parse_hours(raw: str | None) -> frozenset[int]:
    if raw is None or raw == "":
        return frozenset(range(24))
    hours = set()
    for token in raw.split(","):
        try:
            hour = int(token.strip())
        except ValueError:
            raise _bad(f"hour {token.strip()!r} is not an integer")
        if not 0 <= hour <= 23:
            raise _bad(f"hour {hour} out of range 0-23")
        hours.add(hour)
    return frozenset(hours)


def _parse_bool(raw: str | None, default: bool, name: str) -> bool:
    if raw is None or raw == "":
        return default
    low = raw.lower()
    if low in ("true", "1"):
        return True
    if low in ("false", "0"):
        return False
    raise _bad(f"{name} must be true or false")


_DAY_OF_DATE: dict[str, str] = {}


def _day_of_date(iso_date: str) -> str:
    day = _DAY_OF_DATE.get(iso_date)
    if day is None:
        day = DAY_KEYS[date.fromisoformat(iso_date).weekday()]
        _DAY_OF_DATE[iso_date] = day
    return day


def _round_mph(value: float) -> float:
    return round(value, 3)


def _percent_rows(counts: list[int]) -> list[float]:
    """Percent per row to one decimal, largest-remainder so they sum to 100."""

    total = sum(counts)
    units = []
    for c in counts:
        q, r = divmod(c * 1000, total)
        units.append([q, r])
    shortfall = 1000 - sum(q for q, _ in units)
    by_remainder = sorted(range(len(units)), key=lambda i: (-units[i][1], i))
    for i in by_remainder[:shortfall]:
        units[i][0] += 1
    return [q / 10.0 for q, _ in units]


def speed_distribution_response(
    state: ServiceState, way_id: str, days: frozenset[str], hours: frozenset[int]
) -> dict:
    seg = state.graph.segments.get(way_id)
    if seg is None:
        raise HTTPException(status_code=404, detail=f"unknown way_id {way_id!r}")
    width = state.histograms.bin_width_mph
    merged: dict[int, int] = {}
    grid = [[0] * 24 for _ in range(7)]
    for (wid, date_local, hour), bins in state.histograms.data.items():
        if wid != way_id or hour not in hours:
            continue
        day = _day_of_date(date_local)
        if day not in days:
            continue
        n_key = 0
        for idx, n in bins.items():
            merged[idx] = merged.get(idx, 0) + n
            n_key += n
        grid[DAY_KEYS.index(day)][hour] += n_key
    total = sum(merged.values())

    metrics = None
    pcts = speed_percentiles(merged, PERCENTILES, bin_width=width)
    if pcts is not None:
        metrics = {f"p{p}": _round_mph(pcts[p]) for p in PERCENTILES}
        if seg.speed_limit is not None:
            limit_mph = mps_to_mph(seg.speed_limit)
            metrics["speed_limit_mph"] = _round_mph(limit_mph)
            metrics["median_minus_limit"] = _round_mph(pcts[50] - limit_mph)
            metrics["p95_minus_limit"] = _round_mph(pcts[95] - limit_mph)

    return {
        "way_id": way_id,
        "route_name": seg.lrs.route_name if seg.lrs else None,
        "mile_start": seg.lrs.mile_start if seg.lrs else None,
        "mile_end": seg.lrs.mile_end if seg.lrs else None,
        "filters": {
            "days": [d for d in DAY_KEYS if d in days],
            "hours": sorted(hours),
        },
        "total_traversals": total,
        "bins": [
            {"lower_mph": _round_mph(idx * width), "upper_mph": _round_mph((idx + 1) * width), "count": n}
            for idx, n in sorted(merged.items())
        ],
        "metrics": metrics,
        "traversal_grid": grid,
    }


def _way_metric(state: ServiceState, way_id: str, metric: str) -> float | None:
    merged: dict[int, int] = {}
    for (wid, _, _), bins in state.histograms.data.items():
        if wid != way_id:
            continue
        for idx, n in bins.items():
            merged[idx] = merged.get(idx, 0) + n
    pcts = speed_percentiles(merged, (50, 95), bin_width=state.histograms.bin_width_mph)
    if pcts is None:
        return None
    if metric == "median":
        return _round_mph(pcts[50])
    if metric == "p95":
        return _round_mph(pcts[95])
    limit = state.graph.segments[way_id].speed_limit
    if limit is None:
        return None
    limit_mph = mps_to_mph(limit)
    if metric == "median_minus_limit":
        return _round_mph(pcts[50] - limit_mph)
    return _round_mph(pcts[95] - limit_mph)


def route_overview_response(state: ServiceState, route: str, metric: str) -> dict:
    if metric not in OVERVIEW_METRICS:
        raise _bad(f"unknown metric {metric!r}; expected one of {', '.join(OVERVIEW_METRICS)}")
    members = [
        seg for seg in state.graph.segments.values() if seg.lrs and seg.lrs.route_name == route
    ]
    if not members:
        raise HTTPException(status_code=404, detail=f"unknown route {route!r}")
    members.sort(key=lambda seg: (seg.lrs.mile_start, seg.way_id))
    return {
        "route_name": route,
        "metric": metric,
        "segments": [
            {
                "way_id": seg.way_id,
                "mile_start": seg.lrs.mile_start,
                "mile_end": seg.lrs.mile_end,
                "metric_value": _way_metric(state, seg.way_id, metric),
            }
            for seg in members
        ],
    }


def od_response(
    state: ServiceState,
    selected_zip: str,
    hours: frozenset[int],
    days: frozenset[str],
    direction: str,
    include_intra: bool,
) -> dict:
    grouped: dict[str, int] = {}
    for (origin, dest, hour, day), n in state.od.cells.items():
        if hour not in hours or day not in days:
            continue
        if not include_intra and origin == dest:
            continue
        if direction == "origin":
            if origin != selected_zip:
                continue
            other = dest
        else:
            if dest != selected_zip:
                continue
            other = origin
        grouped[other] = grouped.get(other, 0) + n
    rows = sorted(grouped.items(), key=lambda kv: (-kv[1], kv[0]))
    total = sum(n for _, n in rows)
    percents = _percent_rows([n for _, n in rows]) if rows else []
    return {
        "selected_zip": selected_zip,
        "direction": direction,
        "include_intra": include_intra,
        "filters": {"days": [d for d in DAY_KEYS if d in days], "hours": sorted(hours)},
        "total": total,
        "rows": [
            {"zip": z, "trips": n, "percent": pct} for (z, n), pct in zip(rows, percents)
        ],
    }


def heatmap_response(state: ServiceState, hour: int, dayclass: str, endpoint: str) -> dict:
    wanted_days = WEEKDAYS if dayclass == "weekday" else WEEKENDS
    counts: dict[str, int] = {}
    for s in state.trip_summaries:
        if endpoint == "start":
            z, h, day = s.start_zip, s.start_hour_local, s.start_day_of_week
        else:
            end_local = local_datetime(s.end_time, state.meta.tz_offset_minutes)
            z, h, day = s.end_zip, end_local.hour, DAY_KEYS[end_local.weekday()]
        if z is None or h != hour or day not in wanted_days:
            continue
        counts[z] = counts.get(z, 0) + 1
    return {
        "hour": hour,
        "dayclass": dayclass,
        "endpoint": endpoint,
        "cells": [{"zip": z, "trips": n} for z, n in sorted(counts.items())],
    }


def routes_response(state: ServiceState) -> dict:
    names = sorted({seg.lrs.route_name for seg in state.graph.segments.values() if seg.lrs})
    return {"routes": names}


def route_segments_response(state: ServiceState, route: str) -> dict:
    members = [
        seg for seg in state.graph.segments.values() if seg.lrs and seg.lrs.route_name == route
    ]
    members.sort(key=lambda seg: (seg.lrs.mile_start, seg.way_id))
    return {
        "route_name": route,
        "segments": [
            {
                "way_id": seg.way_id,
                "mile_start": seg.lrs.mile_start,
                "mile_end": seg.lrs.mile_end,
                "direction": seg.lrs.direction,
                "road_class": seg.road_class,
                "speed_limit_mph": _round_mph(mps_to_mph(seg.speed_limit))
                if seg.speed_limit is not None
                else None,
                "coordinates": [[v.longitude, v.latitude] for v in seg.polyline],
            }
            for seg in members
        ],
    }


def zips_response(state: ServiceState) -> dict:
    codes: set[str] = set(state.od.zips())
    rings: dict[str, list[list[float]]] = {}
    if state.regions is not None:
        for code, ring in state.regions.regions.items():
            codes.add(code)
            rings[code] = [[v.longitude, v.latitude] for v in ring]
    return {"zips": [{"postal_code": code, "ring": rings.get(code)} for code in sorted(codes)]}


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="tripmill query service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET"], allow_headers=["*"]
    )

    @app.get("/segments/{way_id}/speed-distribution")
    def speed_distribution(way_id: str, days: str | None = Query(None), hours: str | None = Query(None)):
        return speed_distribution_response(state, way_id, _parse_days(days), _parse_hours(hours))

    @app.get("/routes")
    def routes():
        return routes_response(state)

    @app.get("/routes/{route}/segments")
    def route_segments(route: str):
        return route_segments_response(state, route)

    @app.get("/routes/{route}/overview")
    def route_overview(route: str, metric: str = Query("median")):
        return route_overview_response(state, route, metric)

    @app.get("/od")
    def od(
        zip: str = Query(...),
        hours: str | None = Query(None),
        days: str | None = Query(None),
        direction: str = Query("origin"),
        include_intra: str | None = Query(None),
    ):
        if direction not in ("origin", "destination"):
            raise _bad("direction must be origin or destination")
        return od_response(
            state,
            zip,
            _parse_hours(hours),
            _parse_days(days),
            direction,
            _parse_bool(include_intra, False, "include_intra"),
        )

    @app.get("/heatmap")
    def heatmap(
        hour: str = Query(...), dayclass: str = Query(...), endpoint: str = Query("start")
    ):
        try:
            hour_num = int(hour)
        except ValueError:
            raise _bad("hour must be an integer")
        if not 0 <= hour_num <= 23:
            raise _bad(f"hour {hour_num} out of range 0-23")
        if dayclass not in ("weekday", "weekend"):
            raise _bad("dayclass must be weekday or weekend")
        if endpoint not in ("start", "end"):
            raise _bad("endpoint must be start or end")
        return heatmap_response(state, hour_num, dayclass, endpoint)

    @app.get("/zips")
    def zips():
        return zips_response(state)

    return app
