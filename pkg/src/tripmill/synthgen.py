"""Deterministic synthetic corpus generator with full ground truth.

Builds a grid road network, drives seeded random trips over shortest routes,
and scatters the resulting points across raw shards with the usual corpus
pathologies: trips split across files, nested metadata, duplicated records.
Everything derives from one seeded RNG, so (seed, config) fixes every output
byte.
"""

from __future__ import annotations

import bisect
import dataclasses
import heapq
import json
import math
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .geo import (
    METERS_PER_DEG_LAT,
    GeoPoint,
    haversine_distance,
    initial_bearing,
    interpolate,
    offset_by_meters,
)
from .model import MPS_PER_MPH, Ignition, RawPointRecord
from .roadgraph import RegionIndex, zip_lookup

BASE_LAT = 38.0
BASE_LON = -78.5
ANCHOR_MS = 1_646_611_200_000  # 2022-03-07T00:00:00Z, a Monday
START_WINDOW_DAYS = 14

_LOCAL_DEFAULT_LIMIT_MPH = 25.0

_GEOHASH32 = "0123456789bcdefghjkmnpqrstuvwxyz"


@dataclass(frozen=True, slots=True)
class SynthConfig:
    seed: int = 7
    grid_rows: int = 10
    grid_cols: int = 10
    segment_length: float = 200.0
    n_trips: int = 1000
    sampling_period: float = 3.0
    gps_noise_sigma: float = 0.0
    shard_count: int = 8
    duplicate_rate: float = 0.0
    split_degree: int = 1
    congested_fraction: float = 0.0

    def validate(self) -> None:
        for name in ("grid_rows", "grid_cols", "n_trips", "shard_count", "split_degree"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.segment_length <= 0 or self.sampling_period <= 0:
            raise ValueError("segment_length and sampling_period must be > 0")
        for name in ("duplicate_rate", "congested_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.gps_noise_sigma < 0:
            raise ValueError("gps_noise_sigma must be >= 0")


def geohash_encode(lat: float, lon: float, precision: int = 7) -> str:
    lat_lo, lat_hi = -90.0, 90.0
    lon_lo, lon_hi = -180.0, 180.0
    chars: list[str] = []
    even = True
    bit = 0
    ch = 0
    while len(chars) < precision:
        if even:
            mid = (lon_lo + lon_hi) / 2.0
            ch = ch * 2 + (1 if lon >= mid else 0)
            if lon >= mid:
                lon_lo = mid
            else:
                lon_hi = mid
        else:
            mid = (lat_lo + lat_hi) / 2.0
            ch = ch * 2 + (1 if lat >= mid else 0)
            if lat >= mid:
                lat_lo = mid
            else:
                lat_hi = mid
        even = not even
        bit += 1
        if bit == 5:
            chars.append(_GEOHASH32[ch])
            bit = 0
            ch = 0
    return "".join(chars)


@dataclass
class GridNetwork:
    """In-memory view of the generated grid used to drive trips."""

    rows: int
    cols: int
    dlat: float
    dlon: float
    segments: dict[str, dict] = field(default_factory=dict)
    adjacency: dict[tuple[int, int], list[tuple[tuple[int, int], str]]] = field(default_factory=dict)
    regions: RegionIndex = field(default_factory=RegionIndex)

    def node_point(self, i: int, j: int) -> GeoPoint:
        return GeoPoint(BASE_LAT + i * self.dlat, BASE_LON + j * self.dlon)


def _segment_spec(kind: str, i: int, j: int, rows: int, cols: int) -> tuple[str, float | None, int | None]:
    if kind == "h":
        if i == rows // 2:
            return "motorway", 65.0, 3
        if i % 5 == 0:
            return "arterial", 45.0, 2
        return "local", None, None
    if j % 4 == 0:
        return "collector", 35.0, 2
    return "local", None, None


def generate_network(config: SynthConfig, out_dir: str | Path) -> dict[str, Path]:
    """Write network.json, lrs.csv and regions.json for the configured grid.

    Horizontal segments run west-east per row, vertical ones south-north per
    column; arterial/motorway rows are conflated into LRS routes; rectangular
    postal regions tile the grid two cells per side.
    """

    config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    net = build_grid(config)

    seg_docs = []
    for way_id, seg in net.segments.items():
        doc = {
            "way_id": way_id,
            "coordinates": [[v.longitude, v.latitude] for v in seg["polyline"]],
            "road_class": seg["road_class"],
        }
        if seg["speed_limit_mph"] is not None:
            doc["speed_limit_mph"] = seg["speed_limit_mph"]
        if seg["lanes"] is not None:
            doc["lanes"] = seg["lanes"]
        seg_docs.append(doc)
    network_path = out_dir / "network.json"
    network_path.write_text(json.dumps({"segments": seg_docs}, indent=1) + "\n", encoding="utf-8")

    mile_per_seg = config.segment_length / 1609.344
    lrs_lines = ["way_id,route_name,direction,mile_start,mile_end"]
    for i in range(config.grid_rows + 1):
        road_class, _, _ = _segment_spec("h", i, 0, config.grid_rows, config.grid_cols)
        if road_class not in ("motorway", "arterial"):
            continue
        for j in range(config.grid_cols):
            lrs_lines.append(
                f"wh-{i:02d}-{j:02d},RT-{i:02d},EB,{j * mile_per_seg!r},{(j + 1) * mile_per_seg!r}"
            )
    lrs_path = out_dir / "lrs.csv"
    lrs_path.write_text("\n".join(lrs_lines) + "\n", encoding="utf-8")

    region_docs = []
    for code in sorted(net.regions.regions):
        ring = net.regions.regions[code]
        region_docs.append(
            {"postal_code": code, "ring": [[v.longitude, v.latitude] for v in ring]}
        )
    regions_path = out_dir / "regions.json"
    regions_path.write_text(json.dumps({"regions": region_docs}, indent=1) + "\n", encoding="utf-8")

    return {"network": network_path, "lrs": lrs_path, "regions": regions_path}


def build_grid(config: SynthConfig) -> GridNetwork:
    dlat = config.segment_length / METERS_PER_DEG_LAT
    dlon = config.segment_length / (METERS_PER_DEG_LAT * math.cos(math.radians(BASE_LAT)))
    net = GridNetwork(rows=config.grid_rows, cols=config.grid_cols, dlat=dlat, dlon=dlon)

    def add_segment(way_id: str, a: tuple[int, int], b: tuple[int, int], kind: str, i: int, j: int) -> None:
        road_class, limit_mph, lanes = _segment_spec(kind, i, j, net.rows, net.cols)
        pa, pb = net.node_point(*a), net.node_point(*b)
        net.segments[way_id] = {
            "polyline": (pa, pb),
            "road_class": road_class,
            "speed_limit_mph": limit_mph,
            "lanes": lanes,
            "length": haversine_distance(pa, pb),
        }
        net.adjacency.setdefault(a, []).append((b, way_id))
        net.adjacency.setdefault(b, []).append((a, way_id))

    for i in range(net.rows + 1):
        for j in range(net.cols):
            add_segment(f"wh-{i:02d}-{j:02d}", (i, j), (i, j + 1), "h", i, j)
    for i in range(net.rows):
        for j in range(net.cols + 1):
            add_segment(f"wv-{i:02d}-{j:02d}", (i, j), (i + 1, j), "v", i, j)

    pad_lat = 0.6 * dlat
    pad_lon = 0.6 * dlon
    block = 2
    for bi in range((net.rows + block - 1) // block):
        for bj in range((net.cols + block - 1) // block):
            lat_lo = BASE_LAT + bi * block * dlat - (pad_lat if bi == 0 else 0.0)
            lat_hi = BASE_LAT + min((bi + 1) * block, net.rows) * dlat
            if (bi + 1) * block >= net.rows:
                lat_hi += pad_lat
            lon_lo = BASE_LON + bj * block * dlon - (pad_lon if bj == 0 else 0.0)
            lon_hi = BASE_LON + min((bj + 1) * block, net.cols) * dlon
            if (bj + 1) * block >= net.cols:
                lon_hi += pad_lon
            code = f"{22000 + bi * 50 + bj:05d}"
            ring = [
                GeoPoint(lat_lo, lon_lo),
                GeoPoint(lat_lo, lon_hi),
                GeoPoint(lat_hi, lon_hi),
                GeoPoint(lat_hi, lon_lo),
            ]
            net.regions.add(code, ring)
    return net


@dataclass
class SynthTrip:
    journey_id: str
    records: list[RawPointRecord]
    true_ways: list[str]
    route_ways: list[str]
    congested: bool
    start_zip: str | None
    end_zip: str | None


def _shortest_route(
    net: GridNetwork,
    origin: tuple[int, int],
    dest: tuple[int, int],
    cache: dict[tuple[int, int], dict],
) -> list[tuple[tuple[int, int], str]]:
    """Dijkstra route as [(next_node, way_id), ...]; ties resolve by node order."""

    state = cache.get(origin)
    if state is None:
        dist: dict[tuple[int, int], float] = {origin: 0.0}
        pred: dict[tuple[int, int], tuple[tuple[int, int], str]] = {}
        heap: list[tuple[float, tuple[int, int]]] = [(0.0, origin)]
        while heap:
            d, node = heapq.heappop(heap)
            if d > dist.get(node, math.inf):
                continue
            for nbr, way_id in net.adjacency[node]:
                nd = d + net.segments[way_id]["length"]
                if nd < dist.get(nbr, math.inf):
                    dist[nbr] = nd
                    pred[nbr] = (node, way_id)
                    heapq.heappush(heap, (nd, nbr))
        state = {"pred": pred}
        cache[origin] = state
    pred = state["pred"]
    hops: list[tuple[tuple[int, int], str]] = []
    node = dest
    while node != origin:
        prev, way_id = pred[node]
        hops.append((node, way_id))
        node = prev
    hops.reverse()
    return hops


def _trip_speed_mps(limit_mph: float | None, congested: bool, rng: random.Random) -> float:
    base = limit_mph if limit_mph is not None else _LOCAL_DEFAULT_LIMIT_MPH
    factor = rng.uniform(0.18, 0.35) if congested else rng.uniform(0.88, 1.05)
    return base * factor * MPS_PER_MPH


def generate_trips(net: GridNetwork, config: SynthConfig, rng: random.Random) -> list[SynthTrip]:
    """Drive n_trips over shortest routes, sampled every sampling_period.

    Point speed equals the per-segment driven speed; positions optionally get
    zero-mean tangent-frame noise. Ground-truth way labels assign boundary
    samples to the segment being entered.
    """

    trips: list[SynthTrip] = []
    route_cache: dict[tuple[int, int], dict] = {}
    n_nodes_i = net.rows + 1
    n_nodes_j = net.cols + 1
    period_ms = int(round(config.sampling_period * 1000))

    for k in range(config.n_trips):
        journey_id = f"j-{k:06d}"
        oi, oj = rng.randrange(n_nodes_i), rng.randrange(n_nodes_j)
        while True:
            di, dj = rng.randrange(n_nodes_i), rng.randrange(n_nodes_j)
            if abs(di - oi) + abs(dj - oj) >= 2:
                break
        hops = _shortest_route(net, (oi, oj), (di, dj), route_cache)
        congested = rng.random() < config.congested_fraction

        vertices = [net.node_point(oi, oj)]
        route_ways: list[str] = []
        seg_speeds: list[float] = []
        cum = [0.0]
        for node, way_id in hops:
            vertices.append(net.node_point(*node))
            route_ways.append(way_id)
            seg = net.segments[way_id]
            seg_speeds.append(_trip_speed_mps(seg["speed_limit_mph"], congested, rng))
            cum.append(cum[-1] + seg["length"])
        total = cum[-1]

        day = rng.randrange(START_WINDOW_DAYS)
        hour = rng.randrange(24)
        second = rng.randrange(3600)
        start_ms = ANCHOR_MS + ((day * 24 + hour) * 3600 + second) * 1000

        records: list[RawPointRecord] = []
        true_ways: list[str] = []
        # first sample lands a random fraction into the first step so no
        # point sits exactly on an intersection node (which is ambiguous)
        s = seg_speeds[0] * config.sampling_period * rng.uniform(0.1, 0.9)
        ts = start_ms
        while s < total - 1e-9:
            idx = min(bisect.bisect_right(cum, s) - 1, len(route_ways) - 1)
            frac = (s - cum[idx]) / (cum[idx + 1] - cum[idx])
            true_pos = interpolate(vertices[idx], vertices[idx + 1], frac)
            pos = true_pos
            if config.gps_noise_sigma > 0:
                east = rng.gauss(0.0, config.gps_noise_sigma)
                north = rng.gauss(0.0, config.gps_noise_sigma)
                pos = offset_by_meters(true_pos, east, north)
            postal = zip_lookup(true_pos, net.regions)
            records.append(
                RawPointRecord(
                    journey_id=journey_id,
                    timestamp=ts,
                    latitude=pos.latitude,
                    longitude=pos.longitude,
                    speed=seg_speeds[idx],
                    ignition=Ignition.ON,
                    heading=initial_bearing(vertices[idx], vertices[idx + 1]),
                    geohash=geohash_encode(pos.latitude, pos.longitude),
                    postal_code=postal,
                    country_code="US",
                )
            )
            true_ways.append(route_ways[idx])
            s += seg_speeds[idx] * config.sampling_period
            ts += period_ms
        if records:
            records[-1] = dataclasses.replace(records[-1], ignition=Ignition.OFF)
        trips.append(
            SynthTrip(
                journey_id=journey_id,
                records=records,
                true_ways=true_ways,
                route_ways=route_ways,
                congested=congested,
                start_zip=records[0].postal_code if records else None,
                end_zip=records[-1].postal_code if records else None,
            )
        )
    return trips


def _raw_shard_obj(rec: RawPointRecord) -> dict:
    return {
        "journey_id": rec.journey_id,
        "timestamp": rec.timestamp,
        "latitude": rec.latitude,
        "longitude": rec.longitude,
        "heading": rec.heading,
        "speed": rec.speed,
        "ignition": rec.ignition.value,
        "metadata": {
            "geohash": rec.geohash,
            "postal_code": rec.postal_code,
            "country_code": rec.country_code,
        },
    }


def emit_shards(
    trips: list[SynthTrip], config: SynthConfig, corpus_dir: str | Path, rng: random.Random
) -> dict[str, Path]:
    """Scatter trip points over shard files and write manifest + ground truth.

    Each trip lands on up to split_degree shards in contiguous chunks; a
    duplicate_rate fraction of points is copied into a random shard; each
    shard's line order is shuffled. Ground truth records per-trip routes,
    per-point way labels, and injected duplicate counts.
    """

    corpus_dir = Path(corpus_dir)
    corpus_dir.mkdir(parents=True, exist_ok=True)
    buckets: list[list[dict]] = [[] for _ in range(config.shard_count)]
    truth_trips: dict[str, dict] = {}
    total_points = 0
    total_duplicates = 0

    for trip in trips:
        n_points = len(trip.records)
        n_shards = rng.randint(1, min(config.split_degree, config.shard_count, max(n_points, 1)))
        chosen = rng.sample(range(config.shard_count), n_shards)
        duplicates = 0
        for idx, rec in enumerate(trip.records):
            obj = _raw_shard_obj(rec)
            buckets[chosen[idx * n_shards // n_points]].append(obj)
            if rng.random() < config.duplicate_rate:
                buckets[rng.randrange(config.shard_count)].append(obj)
                duplicates += 1
        total_points += n_points
        total_duplicates += duplicates
        truth_trips[trip.journey_id] = {
            "route": trip.route_ways,
            "point_ways": trip.true_ways,
            "n_points": n_points,
            "injected_duplicates": duplicates,
            "congested": trip.congested,
            "start_zip": trip.start_zip,
            "end_zip": trip.end_zip,
        }

    shard_names = []
    for i, bucket in enumerate(buckets):
        rng.shuffle(bucket)
        name = f"shard-{i:03d}.jsonl"
        shard_names.append(name)
        with open(corpus_dir / name, "w", encoding="utf-8") as fh:
            for obj in bucket:
                fh.write(json.dumps(obj, separators=(",", ":")) + "\n")

    manifest_path = corpus_dir / "manifest.json"
    manifest_path.write_text(
        json.dumps({"shards": shard_names, "speed_unit": "mps"}, indent=1, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    truth_path = corpus_dir / "groundtruth.json"
    truth = {
        "config": asdict(config),
        "totals": {
            "trips": len(trips),
            "points": total_points,
            "injected_duplicates": total_duplicates,
        },
        "trips": truth_trips,
    }
    truth_path.write_text(json.dumps(truth, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return {"manifest": manifest_path, "groundtruth": truth_path}


def generate_corpus(config: SynthConfig, out_dir: str | Path) -> dict[str, Path]:
    """Full fixture: network files in out_dir, raw corpus in out_dir/corpus."""

    config.validate()
    out_dir = Path(out_dir)
    paths = generate_network(config, out_dir)
    rng = random.Random(config.seed)
    net = build_grid(config)
    trips = generate_trips(net, config, rng)
    paths.update(emit_shards(trips, config, out_dir / "corpus", rng))
    paths["corpus"] = out_dir / "corpus"
    return paths


def duplicate_corpus(src_corpus: str | Path, dst_corpus: str | Path, suffix: str = "-d") -> None:
    """Copy a raw corpus while adding a second copy of every trip under a
    fresh journey_id; doubles trips and points without touching timestamps."""

    src_corpus = Path(src_corpus)
    dst_corpus = Path(dst_corpus)
    dst_corpus.mkdir(parents=True, exist_ok=True)
    with open(src_corpus / "manifest.json", "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    for name in manifest["shards"]:
        out_lines = []
        with open(src_corpus / name, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                out_lines.append(line)
                dup = {**obj, "journey_id": obj["journey_id"] + suffix}
                out_lines.append(json.dumps(dup, separators=(",", ":")))
        (dst_corpus / name).write_text("\n".join(out_lines) + "\n", encoding="utf-8")
    (dst_corpus / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
