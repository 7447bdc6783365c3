"""Readers and writers for the corpus file formats.

Raw shards are newline-delimited JSON records (metadata may arrive nested
under a "metadata" object) or flat CSV with a header row. Packed and matched
files use the same record grammar with flat fields only, preceded by a
one-line header object and accompanied by a ".done" completion marker.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from pathlib import Path
from typing import Iterable, Iterator

from .model import Ignition, RawPointRecord, speed_to_mps

RECORD_FIELDS = (
    "journey_id",
    "timestamp",
    "latitude",
    "longitude",
    "heading",
    "speed",
    "ignition",
    "geohash",
    "postal_code",
    "country_code",
)

MATCH_FIELDS = ("way_id", "snapped_lat", "snapped_lon", "distance_along_m")

_METADATA_FIELDS = ("geohash", "postal_code", "country_code")


class MalformedRecord(ValueError):
    """A line that parses as JSON/CSV but does not form a valid record."""


def parse_record(obj: dict, speed_unit: str = "mps") -> RawPointRecord:
    """Build a RawPointRecord from a decoded raw-shard object.

    Flattens nested "metadata" and converts speed from the declared input
    unit to m/s. Raises MalformedRecord when required fields are missing or
    non-numeric; range violations are left for the cleaning pass.
    """

    meta = obj.get("metadata")
    if isinstance(meta, dict):
        obj = {**obj, **{k: meta.get(k) for k in _METADATA_FIELDS if meta.get(k) is not None}}
    try:
        journey_id = obj["journey_id"]
        timestamp = int(obj["timestamp"])
        latitude = float(obj["latitude"])
        longitude = float(obj["longitude"])
        speed = float(obj["speed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(str(exc)) from exc
    if not isinstance(journey_id, str) or not journey_id:
        raise MalformedRecord("journey_id must be a non-empty string")
    if speed < 0 or math.isnan(speed):
        raise MalformedRecord(f"negative speed {speed}")

    heading = obj.get("heading")
    if heading is not None:
        try:
            heading = float(heading) % 360.0
        except (TypeError, ValueError) as exc:
            raise MalformedRecord(f"bad heading {heading!r}") from exc
    try:
        ignition = Ignition(obj.get("ignition") or "unknown")
    except ValueError:
        ignition = Ignition.UNKNOWN

    return RawPointRecord(
        journey_id=journey_id,
        timestamp=timestamp,
        latitude=latitude,
        longitude=longitude,
        speed=speed_to_mps(speed, speed_unit),
        ignition=ignition,
        heading=heading,
        geohash=obj.get("geohash") or None,
        postal_code=obj.get("postal_code") or None,
        country_code=obj.get("country_code") or None,
    )


def record_to_obj(rec: RawPointRecord) -> dict:
    """Flat JSON-ready object in the fixed packed-file field order."""

    return {
        "journey_id": rec.journey_id,
        "timestamp": rec.timestamp,
        "latitude": rec.latitude,
        "longitude": rec.longitude,
        "heading": rec.heading,
        "speed": rec.speed,
        "ignition": rec.ignition.value,
        "geohash": rec.geohash,
        "postal_code": rec.postal_code,
        "country_code": rec.country_code,
    }


def iter_shard_records(
    path: str | Path, speed_unit: str = "mps"
) -> Iterator[RawPointRecord | MalformedRecord]:
    """Yield records from one raw shard; malformed rows yield the error instead.

    Accepts JSONL (optionally starting with a packed-file header line, which
    is skipped) and flat CSV with a header row. Raises OSError if the shard
    cannot be opened.
    """

    path = Path(path)
    if path.suffix.lower() == ".csv":
        yield from _iter_csv(path, speed_unit)
        return
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                yield MalformedRecord(f"line {lineno + 1}: {exc}")
                continue
            if not isinstance(obj, dict):
                yield MalformedRecord(f"line {lineno + 1}: not an object")
                continue
            if lineno == 0 and "file_id" in obj and "journey_id" not in obj:
                continue  # packed-file header
            try:
                yield parse_record(obj, speed_unit)
            except MalformedRecord as exc:
                yield MalformedRecord(f"line {lineno + 1}: {exc}")


def _iter_csv(path: Path, speed_unit: str) -> Iterator[RawPointRecord | MalformedRecord]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader):
            obj = {k: (v if v != "" else None) for k, v in row.items() if k is not None}
            try:
                yield parse_record(obj, speed_unit)
            except MalformedRecord as exc:
                yield MalformedRecord(f"row {lineno + 2}: {exc}")


def write_packed_file(
    path: str | Path, file_id: str, journeys: Iterable[tuple[str, list[RawPointRecord]]]
) -> tuple[int, int]:
    """Write whole journeys to one packed file plus its .done marker.

    Returns (journey_count, point_count). The header line is rewritten with
    final counts; the marker is only created after a complete write.
    """

    path = Path(path)
    journeys = list(journeys)
    journey_count = len(journeys)
    point_count = sum(len(points) for _, points in journeys)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        header = {"file_id": file_id, "journey_count": journey_count, "point_count": point_count}
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for _, points in journeys:
            for rec in points:
                fh.write(json.dumps(record_to_obj(rec), separators=(",", ":")) + "\n")
    os.replace(tmp, path)
    done_marker(path).touch()
    return journey_count, point_count


def done_marker(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".done")


def read_packed_header(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
    obj = json.loads(first)
    if "file_id" not in obj:
        raise ValueError(f"{path}: missing packed-file header")
    return obj


def iter_packed_journeys(path: str | Path) -> Iterator[tuple[str, list[RawPointRecord]]]:
    """Yield (journey_id, points) blocks from a packed file, in file order."""

    current_id: str | None = None
    block: list[RawPointRecord] = []
    for rec in iter_shard_records(path, "mps"):
        if isinstance(rec, MalformedRecord):
            raise ValueError(f"{path}: {rec}")
        if rec.journey_id != current_id:
            if current_id is not None:
                yield current_id, block
            current_id = rec.journey_id
            block = []
        block.append(rec)
    if current_id is not None:
        yield current_id, block


def write_matched_file(
    path: str | Path,
    file_id: str,
    journeys: Iterable[tuple[str, list[tuple[RawPointRecord, dict | None]]]],
) -> tuple[int, int]:
    """Write matched journeys: each point carries its match fields or None.

    A matched point's dict holds way_id, snapped_lat, snapped_lon and
    distance_along_m; unmatched points carry way_id = "" and null positions.
    """

    path = Path(path)
    journeys = list(journeys)
    journey_count = len(journeys)
    point_count = sum(len(points) for _, points in journeys)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        header = {"file_id": file_id, "journey_count": journey_count, "point_count": point_count}
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for _, points in journeys:
            for rec, match in points:
                obj = record_to_obj(rec)
                if match is None:
                    obj.update({"way_id": "", "snapped_lat": None, "snapped_lon": None, "distance_along_m": None})
                else:
                    obj.update(match)
                fh.write(json.dumps(obj, separators=(",", ":")) + "\n")
    os.replace(tmp, path)
    done_marker(path).touch()
    return journey_count, point_count


def iter_matched_journeys(path: str | Path) -> Iterator[tuple[str, list[tuple[RawPointRecord, dict | None]]]]:
    """Yield (journey_id, [(record, match-or-None), ...]) from a matched file."""

    current_id: str | None = None
    block: list[tuple[RawPointRecord, dict | None]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if lineno == 0 and "file_id" in obj and "journey_id" not in obj:
                continue
            rec = parse_record(obj, "mps")
            way_id = obj.get("way_id") or ""
            match = None
            if way_id:
                match = {
                    "way_id": way_id,
                    "snapped_lat": obj["snapped_lat"],
                    "snapped_lon": obj["snapped_lon"],
                    "distance_along_m": obj["distance_along_m"],
                }
            if rec.journey_id != current_id:
                if current_id is not None:
                    yield current_id, block
                current_id = rec.journey_id
                block = []
            block.append((rec, match))
    if current_id is not None:
        yield current_id, block


def load_manifest(path: str | Path) -> dict:
    """Corpus manifest: shard file names plus the declared raw speed unit."""

    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if "shards" not in obj:
        raise ValueError(f"{path}: manifest missing 'shards'")
    obj.setdefault("speed_unit", "mps")
    return obj


def resolve_shards(corpus: str | Path) -> tuple[list[Path], str]:
    """Resolve a corpus location to (shard paths, speed unit).

    `corpus` is either a manifest.json, or a directory containing one, or a
    directory of shard files (unit then defaults to m/s).
    """

    corpus = Path(corpus)
    manifest_path = corpus if corpus.is_file() else corpus / "manifest.json"
    if manifest_path.is_file():
        manifest = load_manifest(manifest_path)
        base = manifest_path.parent
        return [base / name for name in manifest["shards"]], manifest["speed_unit"]
    shards = sorted(
        p
        for p in corpus.iterdir()
        if p.suffix.lower() in (".jsonl", ".csv")
        and not p.name.endswith(".done")
        and not p.name.endswith(".rejects.jsonl")
    )
    return shards, "mps"


def corpus_digest(paths: Iterable[str | Path]) -> str:
    """Order-independent content digest recorded in the summary stores."""

    h = hashlib.sha256()
    for p in sorted(Path(p) for p in paths):
        h.update(p.name.encode("utf-8"))
        h.update(b"\0")
        with open(p, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
        h.update(b"\0")
    return h.hexdigest()
