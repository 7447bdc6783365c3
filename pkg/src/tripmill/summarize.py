"""Derived stores: trip summaries, traversal summaries, speed bins, zip OD.

Traversal speed statistics are population statistics over recorded point
speeds (m/s); speed bins are keyed in MPH because that is the display unit.
Local time is UTC plus a fixed configured offset. Stores merge by pointwise
count addition, so sharded builds reduce to the single-pass result.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .geo import GeoPoint, haversine_distance
from .matcher import Traversal
from .model import DAY_KEYS, SpeedStats, Trip, mps_to_mph, speed_stats
from .roadgraph import RegionIndex, zip_lookup

DEFAULT_BIN_WIDTH_MPH = 5.0
DEFAULT_TZ_OFFSET_MINUTES = -300  # UTC-05:00

PERCENTILES = (25, 50, 75, 85, 95)


def local_datetime(ts_ms: int, tz_offset_minutes: int) -> datetime:
    tz = timezone(timedelta(minutes=tz_offset_minutes))
    return datetime.fromtimestamp(ts_ms / 1000.0, tz=tz)


@dataclass(frozen=True, slots=True)
class StoreMeta:
    """Header block every store carries on disk."""

    bin_width_mph: float = DEFAULT_BIN_WIDTH_MPH
    tz_offset_minutes: int = DEFAULT_TZ_OFFSET_MINUTES
    corpus_digest: str = ""

    def to_json_obj(self) -> dict:
        return {
            "bin_width_mph": self.bin_width_mph,
            "tz_offset_minutes": self.tz_offset_minutes,
            "corpus_digest": self.corpus_digest,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "StoreMeta":
        return cls(
            bin_width_mph=float(obj["bin_width_mph"]),
            tz_offset_minutes=int(obj["tz_offset_minutes"]),
            corpus_digest=str(obj["corpus_digest"]),
        )


@dataclass(frozen=True, slots=True)
class TripSummary:
    journey_id: str
    start_time: int
    end_time: int
    start_point: GeoPoint
    end_point: GeoPoint
    start_zip: str | None
    end_zip: str | None
    duration: float
    path_length: float
    straight_line: float
    point_count: int
    start_hour_local: int
    start_day_of_week: str


@dataclass(frozen=True, slots=True)
class TraversalSummary:
    journey_id: str
    way_id: str
    run_index: int
    speed: SpeedStats
    dwell_time: float
    point_count: int
    date_local: str
    hour_local: int
    day_of_week: str


def summarize_trip(
    trip: Trip,
    regions: RegionIndex | None = None,
    tz_offset_minutes: int = DEFAULT_TZ_OFFSET_MINUTES,
) -> TripSummary:
    """Trip-level record; zips prefer point metadata over region lookup."""

    first, last = trip.points[0], trip.points[-1]
    start_zip = first.postal_code
    end_zip = last.postal_code
    if regions is not None:
        if start_zip is None:
            start_zip = zip_lookup(trip.start_point, regions)
        if end_zip is None:
            end_zip = zip_lookup(trip.end_point, regions)
    start_local = local_datetime(first.timestamp, tz_offset_minutes)
    return TripSummary(
        journey_id=trip.journey_id,
        start_time=first.timestamp,
        end_time=last.timestamp,
        start_point=trip.start_point,
        end_point=trip.end_point,
        start_zip=start_zip,
        end_zip=end_zip,
        duration=trip.duration,
        path_length=trip.path_length,
        straight_line=haversine_distance(trip.start_point, trip.end_point),
        point_count=len(trip.points),
        start_hour_local=start_local.hour,
        start_day_of_week=DAY_KEYS[start_local.weekday()],
    )


def summarize_traversal(
    traversal: Traversal, tz_offset_minutes: int = DEFAULT_TZ_OFFSET_MINUTES
) -> TraversalSummary:
    """Traversal-level record; date/hour/day come from the first point."""

    speeds = [p.source.speed for p in traversal.points]
    entry_local = local_datetime(traversal.entry_time, tz_offset_minutes)
    return TraversalSummary(
        journey_id=traversal.journey_id,
        way_id=traversal.way_id,
        run_index=traversal.run_index,
        speed=speed_stats(speeds),
        dwell_time=(traversal.exit_time - traversal.entry_time) / 1000.0,
        point_count=len(traversal.points),
        date_local=entry_local.date().isoformat(),
        hour_local=entry_local.hour,
        day_of_week=DAY_KEYS[entry_local.weekday()],
    )


class HistogramStore:
    """(way_id, date, hour) -> sparse {bin_index: traversal count}."""

    def __init__(self, bin_width_mph: float = DEFAULT_BIN_WIDTH_MPH):
        if bin_width_mph <= 0:
            raise ValueError("bin_width_mph must be > 0")
        self.bin_width_mph = bin_width_mph
        self.data: dict[tuple[str, str, int], dict[int, int]] = {}

    def add(self, summary: TraversalSummary) -> None:
        bin_index = int(math.floor(mps_to_mph(summary.speed.mean) / self.bin_width_mph))
        key = (summary.way_id, summary.date_local, summary.hour_local)
        bins = self.data.setdefault(key, {})
        bins[bin_index] = bins.get(bin_index, 0) + 1

    def total_for_way(self, way_id: str) -> int:
        return sum(
            n for (wid, _, _), bins in self.data.items() if wid == way_id for n in bins.values()
        )

    def to_json_obj(self, meta: StoreMeta) -> dict:
        entries = [
            {
                "way_id": wid,
                "date": date,
                "hour": hour,
                "bins": {str(b): n for b, n in sorted(bins.items())},
            }
            for (wid, date, hour), bins in sorted(self.data.items())
        ]
        return {"meta": meta.to_json_obj(), "entries": entries}

    @classmethod
    def from_json_obj(cls, obj: dict) -> tuple["HistogramStore", StoreMeta]:
        meta = StoreMeta.from_json_obj(obj["meta"])
        store = cls(bin_width_mph=meta.bin_width_mph)
        for entry in obj["entries"]:
            key = (entry["way_id"], entry["date"], int(entry["hour"]))
            store.data[key] = {int(b): int(n) for b, n in entry["bins"].items()}
        return store, meta

    def write(self, path: str | Path, meta: StoreMeta) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_obj(meta), indent=1, sort_keys=False) + "\n", encoding="utf-8"
        )

    @classmethod
    def read(cls, path: str | Path) -> tuple["HistogramStore", StoreMeta]:
        return cls.from_json_obj(json.loads(Path(path).read_text(encoding="utf-8")))


def build_way_histograms(
    summaries: Iterable[TraversalSummary], bin_width_mph: float = DEFAULT_BIN_WIDTH_MPH
) -> HistogramStore:
    store = HistogramStore(bin_width_mph=bin_width_mph)
    for s in summaries:
        store.add(s)
    return store


def merge_summaries(a: HistogramStore, b: HistogramStore) -> HistogramStore:
    """Pointwise count addition; bin widths must match."""

    if a.bin_width_mph != b.bin_width_mph:
        raise ValueError(f"bin_width mismatch: {a.bin_width_mph} != {b.bin_width_mph}")
    merged = HistogramStore(bin_width_mph=a.bin_width_mph)
    for src in (a, b):
        for key, bins in src.data.items():
            out = merged.data.setdefault(key, {})
            for idx, n in bins.items():
                out[idx] = out.get(idx, 0) + n
    return merged


class OdStore:
    """(origin_zip, dest_zip, start hour, start day) -> trip count."""

    def __init__(self) -> None:
        self.cells: dict[tuple[str, str, int, str], int] = {}
        self.skipped_missing_zip = 0

    def add(self, summary: TripSummary) -> None:
        if summary.start_zip is None or summary.end_zip is None:
            self.skipped_missing_zip += 1
            return
        key = (summary.start_zip, summary.end_zip, summary.start_hour_local, summary.start_day_of_week)
        self.cells[key] = self.cells.get(key, 0) + 1

    def merge(self, other: "OdStore") -> "OdStore":
        merged = OdStore()
        merged.skipped_missing_zip = self.skipped_missing_zip + other.skipped_missing_zip
        for src in (self, other):
            for key, n in src.cells.items():
                merged.cells[key] = merged.cells.get(key, 0) + n
        return merged

    def total_trips(self) -> int:
        return sum(self.cells.values())

    def zips(self) -> list[str]:
        seen = {o for o, _, _, _ in self.cells} | {d for _, d, _, _ in self.cells}
        return sorted(seen)

    def to_json_obj(self, meta: StoreMeta) -> dict:
        def day_index(key: tuple[str, str, int, str]) -> tuple:
            return (key[0], key[1], key[2], DAY_KEYS.index(key[3]))

        entries = [
            {"origin_zip": o, "dest_zip": d, "hour": h, "day": day, "trips": n}
            for (o, d, h, day), n in sorted(self.cells.items(), key=lambda kv: day_index(kv[0]))
        ]
        return {
            "meta": meta.to_json_obj(),
            "skipped_missing_zip": self.skipped_missing_zip,
            "cells": entries,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> tuple["OdStore", StoreMeta]:
        meta = StoreMeta.from_json_obj(obj["meta"])
        store = cls()
        store.skipped_missing_zip = int(obj.get("skipped_missing_zip", 0))
        for entry in obj["cells"]:
            key = (entry["origin_zip"], entry["dest_zip"], int(entry["hour"]), entry["day"])
            store.cells[key] = int(entry["trips"])
        return store, meta

    def write(self, path: str | Path, meta: StoreMeta) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_obj(meta), indent=1, sort_keys=False) + "\n", encoding="utf-8"
        )

    @classmethod
    def read(cls, path: str | Path) -> tuple["OdStore", StoreMeta]:
        return cls.from_json_obj(json.loads(Path(path).read_text(encoding="utf-8")))


def build_od_matrix(summaries: Iterable[TripSummary]) -> OdStore:
    """Count trips per (origin, destination, start hour, start day).

    Trips missing either zip are excluded and tallied; intra-zip trips stay
    in the store (filtering them is a query-time choice).
    """

    store = OdStore()
    for s in summaries:
        store.add(s)
    return store


def speed_percentiles(
    data: Sequence[float] | Mapping[int, int],
    percentiles: Iterable[float],
    bin_width: float | None = None,
) -> dict[float, float] | None:
    """Percentile speeds from raw values or from a sparse bin histogram.

    Exact mode interpolates linearly between order statistics at zero-based
    rank p/100*(n-1). Histogram mode spreads each bin's count evenly across
    the bin span and applies the same rank interpolation. Returns None for
    empty data.
    """

    if isinstance(data, Mapping):
        if bin_width is None:
            raise ValueError("histogram mode requires bin_width")
        return _histogram_percentiles(data, percentiles, bin_width)
    values = sorted(data)
    if not values:
        return None
    n = len(values)
    out = {}
    for p in percentiles:
        rank = p / 100.0 * (n - 1)
        k = int(math.floor(rank))
        frac = rank - k
        if k + 1 < n and frac > 0:
            out[p] = values[k] + frac * (values[k + 1] - values[k])
        else:
            out[p] = values[min(k, n - 1)]
    return out


def _histogram_percentiles(
    bins: Mapping[int, int], percentiles: Iterable[float], bin_width: float
) -> dict[float, float] | None:
    ordered = sorted((idx, n) for idx, n in bins.items() if n > 0)
    total = sum(n for _, n in ordered)
    if total == 0:
        return None

    starts = []  # cumulative count before each bin
    c = 0
    for idx, n in ordered:
        starts.append(c)
        c += n

    def value_at(rank: int) -> float:
        for (idx, n), before in zip(ordered, starts):
            if rank < before + n:
                return (idx + (rank - before + 0.5) / n) * bin_width
        idx, n = ordered[-1]
        return (idx + (n - 0.5) / n) * bin_width

    out = {}
    for p in percentiles:
        rank = p / 100.0 * (total - 1)
        k = int(math.floor(rank))
        frac = rank - k
        if frac > 0 and k + 1 < total:
            out[p] = value_at(k) + frac * (value_at(k + 1) - value_at(k))
        else:
            out[p] = value_at(min(k, total - 1))
    return out


# --- CSV stores -------------------------------------------------------------

TRIP_CSV_FIELDS = (
    "journey_id",
    "start_time_ms",
    "end_time_ms",
    "start_lat",
    "start_lon",
    "end_lat",
    "end_lon",
    "start_zip",
    "end_zip",
    "duration_s",
    "path_length_m",
    "straight_line_m",
    "point_count",
    "start_hour_local",
    "start_day_of_week",
)

TRAVERSAL_CSV_FIELDS = (
    "journey_id",
    "way_id",
    "run_index",
    "mean_speed_mps",
    "min_speed_mps",
    "max_speed_mps",
    "stddev_speed_mps",
    "dwell_time_s",
    "point_count",
    "date_local",
    "hour_local",
    "day_of_week",
)


def _write_header_block(fh, meta: StoreMeta) -> None:
    fh.write(f"# bin_width_mph={meta.bin_width_mph!r}\n")
    fh.write(f"# tz_offset_minutes={meta.tz_offset_minutes}\n")
    fh.write(f"# corpus_digest={meta.corpus_digest}\n")


def _read_header_block(fh) -> StoreMeta:
    values: dict[str, str] = {}
    pos = fh.tell()
    while True:
        line = fh.readline()
        if not line.startswith("#"):
            fh.seek(pos)
            break
        pos = fh.tell()
        key, _, value = line[1:].strip().partition("=")
        values[key.strip()] = value.strip()
    return StoreMeta(
        bin_width_mph=float(values.get("bin_width_mph", DEFAULT_BIN_WIDTH_MPH)),
        tz_offset_minutes=int(values.get("tz_offset_minutes", DEFAULT_TZ_OFFSET_MINUTES)),
        corpus_digest=values.get("corpus_digest", ""),
    )


def write_trip_summaries(path: str | Path, rows: Iterable[TripSummary], meta: StoreMeta) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_header_block(fh, meta)
        writer = csv.writer(fh)
        writer.writerow(TRIP_CSV_FIELDS)
        for s in rows:
            writer.writerow(
                [
                    s.journey_id,
                    s.start_time,
                    s.end_time,
                    repr(s.start_point.latitude),
                    repr(s.start_point.longitude),
                    repr(s.end_point.latitude),
                    repr(s.end_point.longitude),
                    s.start_zip or "",
                    s.end_zip or "",
                    repr(s.duration),
                    repr(s.path_length),
                    repr(s.straight_line),
                    s.point_count,
                    s.start_hour_local,
                    s.start_day_of_week,
                ]
            )
            count += 1
    return count


def read_trip_summaries(path: str | Path) -> tuple[list[TripSummary], StoreMeta]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        meta = _read_header_block(fh)
        for row in csv.DictReader(fh):
            rows.append(
                TripSummary(
                    journey_id=row["journey_id"],
                    start_time=int(row["start_time_ms"]),
                    end_time=int(row["end_time_ms"]),
                    start_point=GeoPoint(float(row["start_lat"]), float(row["start_lon"])),
                    end_point=GeoPoint(float(row["end_lat"]), float(row["end_lon"])),
                    start_zip=row["start_zip"] or None,
                    end_zip=row["end_zip"] or None,
                    duration=float(row["duration_s"]),
                    path_length=float(row["path_length_m"]),
                    straight_line=float(row["straight_line_m"]),
                    point_count=int(row["point_count"]),
                    start_hour_local=int(row["start_hour_local"]),
                    start_day_of_week=row["start_day_of_week"],
                )
            )
    return rows, meta


def write_traversal_summaries(
    path: str | Path, rows: Iterable[TraversalSummary], meta: StoreMeta
) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_header_block(fh, meta)
        writer = csv.writer(fh)
        writer.writerow(TRAVERSAL_CSV_FIELDS)
        for s in rows:
            writer.writerow(
                [
                    s.journey_id,
                    s.way_id,
                    s.run_index,
                    repr(s.speed.mean),
                    repr(s.speed.min),
                    repr(s.speed.max),
                    repr(s.speed.stddev),
                    repr(s.dwell_time),
                    s.point_count,
                    s.date_local,
                    s.hour_local,
                    s.day_of_week,
                ]
            )
            count += 1
    return count


def read_traversal_summaries(path: str | Path) -> tuple[list[TraversalSummary], StoreMeta]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        meta = _read_header_block(fh)
        for row in csv.DictReader(fh):
            rows.append(
                TraversalSummary(
                    journey_id=row["journey_id"],
                    way_id=row["way_id"],
                    run_index=int(row["run_index"]),
                    speed=SpeedStats(
                        mean=float(row["mean_speed_mps"]),
                        min=float(row["min_speed_mps"]),
                        max=float(row["max_speed_mps"]),
                        stddev=float(row["stddev_speed_mps"]),
                    ),
                    dwell_time=float(row["dwell_time_s"]),
                    point_count=int(row["point_count"]),
                    date_local=row["date_local"],
                    hour_local=int(row["hour_local"]),
                    day_of_week=row["day_of_week"],
                )
            )
    return rows, meta
