"""Stage orchestration: index -> repack -> match -> summarize (+ serve).

Each stage consumes the previous stage's artifacts under the output root and
emits its own plus a JSON stage report with row counts and wall time. Worker
count bounds the parallel stages; one worker forces fully serial execution.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import shardio
from .matcher import MatchedPoint, MatchParams, Traversal, UnmatchedPoint, match_trip, segment_traversals
from .model import Trip, validate_trip
from .parallel import ordered_map
from .repack import JourneyIndex, build_journey_index, plan_packing, repack_execute
from .roadgraph import RegionIndex, RoadGraph, load_network, load_regions
from .summarize import (
    DEFAULT_BIN_WIDTH_MPH,
    DEFAULT_TZ_OFFSET_MINUTES,
    StoreMeta,
    build_od_matrix,
    build_way_histograms,
    summarize_trip,
    summarize_traversal,
    write_traversal_summaries,
    write_trip_summaries,
)


class ConfigError(Exception):
    """Invalid configuration; reported before any work starts."""


class MissingArtifactError(Exception):
    """An upstream stage's output is absent."""


@dataclass
class PipelineConfig:
    corpus: Path | None = None
    network: Path | None = None
    lrs: Path | None = None
    regions: Path | None = None
    out_root: Path = Path("out")
    batch_size: int = 10_000
    match_params: MatchParams = field(default_factory=MatchParams)
    bin_width_mph: float = DEFAULT_BIN_WIDTH_MPH
    tz_offset_minutes: int = DEFAULT_TZ_OFFSET_MINUTES
    speed_unit: str | None = None
    workers: int = 1
    write_rejects: bool = False

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.bin_width_mph <= 0:
            raise ConfigError("bin_width_mph must be > 0")
        if self.speed_unit is not None and self.speed_unit not in ("mps", "mph", "kph"):
            raise ConfigError(f"speed_unit must be mps, mph or kph, not {self.speed_unit!r}")
        try:
            self.match_params.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # artifact locations under out_root
    @property
    def index_path(self) -> Path:
        return self.out_root / "index.json"

    @property
    def packed_dir(self) -> Path:
        return self.out_root / "packed"

    @property
    def matched_dir(self) -> Path:
        return self.out_root / "matched"

    @property
    def stores_dir(self) -> Path:
        return self.out_root / "stores"

    @property
    def reports_dir(self) -> Path:
        return self.out_root / "reports"


def _write_stage_report(cfg: PipelineConfig, stage: str, counts: dict, wall_time: float) -> dict:
    cfg.reports_dir.mkdir(parents=True, exist_ok=True)
    report = {"stage": stage, "wall_time_s": round(wall_time, 6), "counts": counts}
    (cfg.reports_dir / f"{stage}.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return report


def _resolve_unit(cfg: PipelineConfig) -> tuple[list[Path], str]:
    if cfg.corpus is None or not Path(cfg.corpus).exists():
        raise ConfigError(f"corpus path does not exist: {cfg.corpus}")
    shards, manifest_unit = shardio.resolve_shards(cfg.corpus)
    return shards, cfg.speed_unit or manifest_unit


def stage_index(cfg: PipelineConfig) -> dict:
    started = time.perf_counter()
    shards, unit = _resolve_unit(cfg)
    index = build_journey_index([p.resolve() for p in shards], unit)
    cfg.out_root.mkdir(parents=True, exist_ok=True)
    obj = index.to_json_obj()
    obj["speed_unit"] = unit
    cfg.index_path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    counts = {
        "shards": len(index.shard_paths),
        "journeys": len(index.entries),
        "points": sum(n for refs in index.entries.values() for _, n in refs),
        "malformed_records": index.malformed_total,
    }
    return _write_stage_report(cfg, "index", counts, time.perf_counter() - started)


def _load_index(cfg: PipelineConfig) -> tuple[JourneyIndex, str]:
    if not cfg.index_path.exists():
        raise MissingArtifactError(f"index stage output missing: {cfg.index_path}")
    obj = json.loads(cfg.index_path.read_text(encoding="utf-8"))
    return JourneyIndex.from_json_obj(obj), obj.get("speed_unit", "mps")


def stage_repack(cfg: PipelineConfig) -> dict:
    started = time.perf_counter()
    index, unit = _load_index(cfg)
    plan = plan_packing(index, cfg.batch_size)
    report = repack_execute(
        plan, index, cfg.packed_dir, speed_unit=unit, workers=cfg.workers, write_rejects=cfg.write_rejects
    )
    report.write(cfg.packed_dir / "repack_report.json")
    counts = report.to_json_obj()
    counts["packed_files"] = len(plan.groups)
    return _write_stage_report(cfg, "repack", counts, time.perf_counter() - started)


_WORKER_GRAPH: RoadGraph | None = None


def _init_match_worker(network_path: str) -> None:
    global _WORKER_GRAPH
    _WORKER_GRAPH = load_network(network_path)


def _match_chunk(args: tuple) -> list[tuple[str, list[tuple], int]]:
    journeys, params = args
    graph = _WORKER_GRAPH
    assert graph is not None
    out = []
    for jid, points in journeys:
        trip = validate_trip(points)
        if not isinstance(trip, Trip):
            raise ValueError(f"packed journey {jid!r} fails validation: {trip.value}")
        rows = []
        unmatched = 0
        for el in match_trip(trip, graph, params):
            if isinstance(el, UnmatchedPoint):
                rows.append((el.source, None))
                unmatched += 1
            else:
                rows.append(
                    (
                        el.source,
                        {
                            "way_id": el.way_id,
                            "snapped_lat": el.snapped_point.latitude,
                            "snapped_lon": el.snapped_point.longitude,
                            "distance_along_m": el.distance_along,
                        },
                    )
                )
        out.append((jid, rows, unmatched))
    return out


def _chunked(seq: list, size: int) -> list[list]:
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def stage_match(cfg: PipelineConfig, chunk_size: int = 25) -> dict:
    started = time.perf_counter()
    if cfg.network is None or not Path(cfg.network).exists():
        raise ConfigError(f"network path does not exist: {cfg.network}")
    pack_files = sorted(cfg.packed_dir.glob("pack-*.jsonl")) if cfg.packed_dir.exists() else []
    if not pack_files:
        raise MissingArtifactError(f"repack stage output missing under {cfg.packed_dir}")
    for pack in pack_files:
        if not shardio.done_marker(pack).exists():
            raise ValueError(f"packed file without completion marker: {pack}")

    cfg.matched_dir.mkdir(parents=True, exist_ok=True)
    network_path = str(cfg.network)
    counts = {"trips_in": 0, "points_in": 0, "matched_points": 0, "unmatched_points": 0, "matched_files": 0}
    for pack in pack_files:
        journeys = list(shardio.iter_packed_journeys(pack))
        tasks = [(chunk, cfg.match_params) for chunk in _chunked(journeys, chunk_size)]
        results = ordered_map(
            _match_chunk, tasks, cfg.workers, initializer=_init_match_worker, initargs=(network_path,)
        )
        file_id = pack.stem.replace("pack-", "matched-")
        rows_by_journey = []
        for chunk_result in results:
            for jid, rows, unmatched in chunk_result:
                rows_by_journey.append((jid, rows))
                counts["trips_in"] += 1
                counts["points_in"] += len(rows)
                counts["unmatched_points"] += unmatched
                counts["matched_points"] += len(rows) - unmatched
        shardio.write_matched_file(cfg.matched_dir / f"{file_id}.jsonl", file_id, rows_by_journey)
        counts["matched_files"] += 1
    return _write_stage_report(cfg, "match", counts, time.perf_counter() - started)


def _rebuild_matched_sequence(rows: list[tuple]) -> list[MatchedPoint | UnmatchedPoint]:
    from .geo import GeoPoint

    seq: list[MatchedPoint | UnmatchedPoint] = []
    for rec, match in rows:
        if match is None:
            seq.append(UnmatchedPoint(rec))
        else:
            seq.append(
                MatchedPoint(
                    source=rec,
                    way_id=match["way_id"],
                    snapped_point=GeoPoint(match["snapped_lat"], match["snapped_lon"]),
                    distance_along=match["distance_along_m"],
                    perpendicular_distance=0.0,  # not part of the wire format
                )
            )
    return seq


def stage_summarize(cfg: PipelineConfig) -> dict:
    started = time.perf_counter()
    matched_files = sorted(cfg.matched_dir.glob("matched-*.jsonl")) if cfg.matched_dir.exists() else []
    if not matched_files:
        raise MissingArtifactError(f"match stage output missing under {cfg.matched_dir}")
    regions: RegionIndex | None = None
    if cfg.regions is not None:
        regions = load_regions(cfg.regions)

    trip_rows = []
    traversal_rows = []
    for path in matched_files:
        for jid, rows in shardio.iter_matched_journeys(path):
            points = [rec for rec, _ in rows]
            trip = validate_trip(points)
            if not isinstance(trip, Trip):
                raise ValueError(f"matched journey {jid!r} fails validation: {trip.value}")
            trip_rows.append(summarize_trip(trip, regions, cfg.tz_offset_minutes))
            seq = _rebuild_matched_sequence(rows)
            for traversal in segment_traversals(seq, cfg.match_params.max_time_gap):
                traversal_rows.append(summarize_traversal(traversal, cfg.tz_offset_minutes))

    histograms = build_way_histograms(traversal_rows, cfg.bin_width_mph)
    od = build_od_matrix(trip_rows)
    meta = StoreMeta(
        bin_width_mph=cfg.bin_width_mph,
        tz_offset_minutes=cfg.tz_offset_minutes,
        corpus_digest=shardio.corpus_digest(matched_files),
    )
    cfg.stores_dir.mkdir(parents=True, exist_ok=True)
    write_trip_summaries(cfg.stores_dir / "trip_summaries.csv", trip_rows, meta)
    write_traversal_summaries(cfg.stores_dir / "traversal_summaries.csv", traversal_rows, meta)
    histograms.write(cfg.stores_dir / "way_histograms.json", meta)
    od.write(cfg.stores_dir / "od_matrix.json", meta)
    counts = {
        "trip_summaries": len(trip_rows),
        "traversal_summaries": len(traversal_rows),
        "histogram_keys": len(histograms.data),
        "od_cells": len(od.cells),
        "od_skipped_missing_zip": od.skipped_missing_zip,
    }
    return _write_stage_report(cfg, "summarize", counts, time.perf_counter() - started)


def run_all(cfg: PipelineConfig) -> list[dict]:
    """Chain index -> repack -> match -> summarize over an existing corpus."""

    return [stage_index(cfg), stage_repack(cfg), stage_match(cfg), stage_summarize(cfg)]
