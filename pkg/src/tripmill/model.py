"""Canonical telemetry records, unit conventions, and trip validation.

The canonical speed unit everywhere downstream of ingestion is meters/second;
display layers convert to MPH at the boundary. Trips are accepted only when
they are longer than 100 meters and shorter than 24 hours.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .geo import GeoPoint, haversine_distance

MIN_TRIP_PATH_M = 100.0
MAX_TRIP_DURATION_S = 86_400.0

MPS_PER_MPH = 0.44704
MPS_PER_KPH = 1000.0 / 3600.0

SPEED_UNITS = ("mps", "mph", "kph")

DAY_KEYS = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


def speed_to_mps(value: float, unit: str) -> float:
    if unit == "mps":
        return value
    if unit == "mph":
        return value * MPS_PER_MPH
    if unit == "kph":
        return value * MPS_PER_KPH
    raise ValueError(f"unknown speed unit: {unit!r}")


def mps_to_mph(value: float) -> float:
    return value / MPS_PER_MPH


class Ignition(str, enum.Enum):
    ON = "on"
    OFF = "off"
    UNKNOWN = "unknown"


class RejectionReason(str, enum.Enum):
    NO_VALID_COORDINATES = "no_valid_coordinates"
    INSUFFICIENT_POINTS = "insufficient_points"
    PATH_TOO_SHORT = "path_too_short"
    DURATION_TOO_LONG = "duration_too_long"


@dataclass(frozen=True, slots=True)
class RawPointRecord:
    """One telemetry sample as delivered by the aggregator.

    timestamp is UTC epoch milliseconds; speed is meters/second after
    ingestion. geohash/postal_code/country_code arrive as nested metadata in
    raw shards and are flattened to these fields.
    """

    journey_id: str
    timestamp: int
    latitude: float
    longitude: float
    speed: float
    ignition: Ignition = Ignition.UNKNOWN
    heading: float | None = None
    geohash: str | None = None
    postal_code: str | None = None
    country_code: str | None = None

    def position(self) -> GeoPoint:
        return GeoPoint(self.latitude, self.longitude)

    def is_valid(self) -> bool:
        """Coordinate/timestamp sanity used by the cleaning pass."""

        if not (-90.0 <= self.latitude <= 90.0 and -180.0 <= self.longitude <= 180.0):
            return False
        if math.isnan(self.latitude) or math.isnan(self.longitude):
            return False
        return self.timestamp > 0


@dataclass(frozen=True, slots=True)
class Trip:
    """A validated, time-ordered point sequence for one journey_id."""

    journey_id: str
    points: tuple[RawPointRecord, ...]
    path_length: float
    duration: float
    start_point: GeoPoint = field(repr=False)
    end_point: GeoPoint = field(repr=False)


@dataclass(frozen=True, slots=True)
class SpeedStats:
    mean: float
    min: float
    max: float
    stddev: float


def speed_stats(speeds: list[float]) -> SpeedStats:
    """Population statistics over a non-empty speed sample (m/s)."""

    n = len(speeds)
    mean = sum(speeds) / n
    var = sum((s - mean) ** 2 for s in speeds) / n
    return SpeedStats(mean=mean, min=min(speeds), max=max(speeds), stddev=math.sqrt(var))


def clean_points(points: list[RawPointRecord]) -> list[RawPointRecord]:
    """Order one journey's records and drop invalid or duplicate timestamps.

    Records with out-of-range coordinates or nonpositive timestamps are
    dropped; survivors are sorted ascending by timestamp; among records
    sharing a timestamp the first-encountered one is kept. The result has
    strictly increasing timestamps, so the pass is idempotent.
    """

    kept = sorted((p for p in points if p.is_valid()), key=lambda p: p.timestamp)
    out: list[RawPointRecord] = []
    last_ts = None
    for p in kept:
        if p.timestamp == last_ts:
            continue
        out.append(p)
        last_ts = p.timestamp
    return out


def validate_trip(points: list[RawPointRecord]) -> Trip | RejectionReason:
    """Apply the trip acceptance rules to an already-cleaned point sequence.

    Accepts iff there are >= 2 points, the path is longer than 100 m, and the
    duration is under 24 h. Rejection returns the first failing reason in the
    order: no_valid_coordinates, insufficient_points, path_too_short,
    duration_too_long.
    """

    if not points:
        return RejectionReason.NO_VALID_COORDINATES
    if len(points) < 2:
        return RejectionReason.INSUFFICIENT_POINTS

    positions = [p.position() for p in points]
    length = 0.0
    for prev, cur in zip(positions, positions[1:]):
        length += haversine_distance(prev, cur)
    if length <= MIN_TRIP_PATH_M:
        return RejectionReason.PATH_TOO_SHORT

    duration = (points[-1].timestamp - points[0].timestamp) / 1000.0
    if duration >= MAX_TRIP_DURATION_S:
        return RejectionReason.DURATION_TOO_LONG

    return Trip(
        journey_id=points[0].journey_id,
        points=tuple(points),
        path_length=length,
        duration=duration,
        start_point=positions[0],
        end_point=positions[-1],
    )
