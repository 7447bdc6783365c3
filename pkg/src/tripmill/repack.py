"""Rebuild raw shards into packed files that hold only complete trips.

Two passes: an index scan that records which shards contain each journey_id,
then an execute pass that gathers each journey across shards, cleans and
validates it, and writes accepted trips as contiguous timestamp-sorted blocks.
Every group of journeys is an independent unit of work.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import shardio
from .model import RejectionReason, Trip, clean_points, validate_trip
from .parallel import ordered_map

DEFAULT_BATCH_SIZE = 10_000


@dataclass
class JourneyIndex:
    """journey_id -> [(shard_id, point_count)] plus per-shard scan stats."""

    entries: dict[str, list[tuple[str, int]]]
    shard_paths: dict[str, Path]
    malformed: dict[str, int]

    @property
    def malformed_total(self) -> int:
        return sum(self.malformed.values())

    def to_json_obj(self) -> dict:
        return {
            "journeys": {jid: [[sid, n] for sid, n in refs] for jid, refs in sorted(self.entries.items())},
            "shards": {sid: str(p) for sid, p in sorted(self.shard_paths.items())},
            "malformed": dict(sorted(self.malformed.items())),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "JourneyIndex":
        return cls(
            entries={jid: [(sid, n) for sid, n in refs] for jid, refs in obj["journeys"].items()},
            shard_paths={sid: Path(p) for sid, p in obj["shards"].items()},
            malformed=dict(obj["malformed"]),
        )


@dataclass(frozen=True)
class PackGroup:
    output_file_id: str
    journey_ids: tuple[str, ...]
    shard_ids: frozenset[str]


@dataclass
class PackingPlan:
    groups: list[PackGroup]


@dataclass
class RepackReport:
    """Audit tallies; input = output + duplicates + invalid + rejected points."""

    input_points: int = 0
    output_points: int = 0
    dropped_duplicates: int = 0
    dropped_invalid: int = 0
    rejected_points: int = 0
    journeys_in: int = 0
    trips_accepted: int = 0
    trips_rejected: dict[str, int] = field(default_factory=dict)
    malformed_records: int = 0

    def merge(self, other: "RepackReport") -> "RepackReport":
        merged = RepackReport(
            input_points=self.input_points + other.input_points,
            output_points=self.output_points + other.output_points,
            dropped_duplicates=self.dropped_duplicates + other.dropped_duplicates,
            dropped_invalid=self.dropped_invalid + other.dropped_invalid,
            rejected_points=self.rejected_points + other.rejected_points,
            journeys_in=self.journeys_in + other.journeys_in,
            trips_accepted=self.trips_accepted + other.trips_accepted,
            trips_rejected=dict(self.trips_rejected),
            malformed_records=self.malformed_records + other.malformed_records,
        )
        for reason, n in other.trips_rejected.items():
            merged.trips_rejected[reason] = merged.trips_rejected.get(reason, 0) + n
        return merged

    def trips_rejected_total(self) -> int:
        return sum(self.trips_rejected.values())

    def to_json_obj(self) -> dict:
        return {
            "input_points": self.input_points,
            "output_points": self.output_points,
            "dropped_duplicates": self.dropped_duplicates,
            "dropped_invalid": self.dropped_invalid,
            "rejected_points": self.rejected_points,
            "journeys_in": self.journeys_in,
            "trips_accepted": self.trips_accepted,
            "trips_rejected": dict(sorted(self.trips_rejected.items())),
            "malformed_records": self.malformed_records,
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_obj(), indent=2) + "\n", encoding="utf-8")


def build_journey_index(shard_paths: list[str | Path], speed_unit: str = "mps") -> JourneyIndex:
    """Scan every shard once and record where each journey's points live.

    Unreadable shards abort with the shard named; malformed rows are skipped
    and counted per shard.
    """

    entries: dict[str, list[tuple[str, int]]] = {}
    paths: dict[str, Path] = {}
    malformed: dict[str, int] = {}
    for path in sorted(Path(p) for p in shard_paths):
        shard_id = path.name
        if shard_id in paths:
            raise ValueError(f"duplicate shard_id {shard_id!r}")
        paths[shard_id] = path
        malformed[shard_id] = 0
        counts: dict[str, int] = {}
        try:
            for rec in shardio.iter_shard_records(path, speed_unit):
                if isinstance(rec, shardio.MalformedRecord):
                    malformed[shard_id] += 1
                    continue
                counts[rec.journey_id] = counts.get(rec.journey_id, 0) + 1
        except OSError as exc:
            raise OSError(f"cannot read shard {shard_id!r}: {exc}") from exc
        for jid, n in counts.items():
            entries.setdefault(jid, []).append((shard_id, n))
    return JourneyIndex(entries=entries, shard_paths=paths, malformed=malformed)


def plan_packing(index: JourneyIndex, batch_size: int = DEFAULT_BATCH_SIZE) -> PackingPlan:
    """Assign journeys to output groups of batch_size, ascending by journey_id."""

    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    ordered = sorted(index.entries)
    groups = []
    for i in range(0, len(ordered), batch_size):
        chunk = ordered[i : i + batch_size]
        shard_ids = frozenset(sid for jid in chunk for sid, _ in index.entries[jid])
        groups.append(
            PackGroup(
                output_file_id=f"pack-{i // batch_size:05d}",
                journey_ids=tuple(chunk),
                shard_ids=shard_ids,
            )
        )
    return PackingPlan(groups=groups)


def repack_execute(
    plan: PackingPlan,
    index: JourneyIndex,
    out_dir: str | Path,
    speed_unit: str = "mps",
    workers: int = 1,
    write_rejects: bool = False,
) -> RepackReport:
    """Run the plan: one packed file per group, plus the merged audit report.

    Each group gathers its journeys across shards, cleans and validates them,
    and writes accepted trips contiguously in ascending journey_id order.
    Workers own disjoint groups, so any worker count yields identical output.
    """

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [
        (group, {sid: index.shard_paths[sid] for sid in group.shard_ids}, out_dir, speed_unit, write_rejects)
        for group in plan.groups
    ]
    report = RepackReport(malformed_records=index.malformed_total)
    for group_report in ordered_map(_execute_group, tasks, workers):
        report = report.merge(group_report)
    return report


def _execute_group(task: tuple) -> RepackReport:
    group, shard_paths, out_dir, speed_unit, write_rejects = task
    wanted = set(group.journey_ids)
    raw: dict[str, list] = {jid: [] for jid in group.journey_ids}
    for shard_id in sorted(group.shard_ids):
        path = shard_paths[shard_id]
        if not path.exists():
            raise FileNotFoundError(f"group {group.output_file_id}: missing shard {shard_id!r}")
        for rec in shardio.iter_shard_records(path, speed_unit):
            if isinstance(rec, shardio.MalformedRecord):
                continue  # already counted by the index pass
            if rec.journey_id in wanted:
                raw[rec.journey_id].append(rec)

    report = RepackReport(journeys_in=len(group.journey_ids))
    accepted: list[tuple[str, list]] = []
    rejected_rows: list[dict] = []
    for jid in group.journey_ids:
        points = raw[jid]
        report.input_points += len(points)
        valid = [p for p in points if p.is_valid()]
        report.dropped_invalid += len(points) - len(valid)
        cleaned = clean_points(points)
        report.dropped_duplicates += len(valid) - len(cleaned)
        result = validate_trip(cleaned)
        if isinstance(result, Trip):
            accepted.append((jid, list(result.points)))
            report.output_points += len(result.points)
            report.trips_accepted += 1
        else:
            reason = result.value
            report.trips_rejected[reason] = report.trips_rejected.get(reason, 0) + 1
            report.rejected_points += len(cleaned)
            if write_rejects:
                for rec in cleaned:
                    row = shardio.record_to_obj(rec)
                    row["rejection_reason"] = reason
                    rejected_rows.append(row)

    shardio.write_packed_file(out_dir / f"{group.output_file_id}.jsonl", group.output_file_id, accepted)
    if write_rejects and rejected_rows:
        reject_path = out_dir / f"{group.output_file_id}.rejects.jsonl"
        with open(reject_path, "w", encoding="utf-8") as fh:
            for row in rejected_rows:
                fh.write(json.dumps(row, separators=(",", ":")) + "\n")
    return report
