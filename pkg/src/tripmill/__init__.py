"""tripmill: batch telematics trip pipeline with summary stores and query service."""

__version__ = "0.1.0"

from .geo import GeoPoint, haversine_distance, path_length
from .model import (
    Ignition,
    RawPointRecord,
    RejectionReason,
    SpeedStats,
    Trip,
    clean_points,
    validate_trip,
)

__all__ = [
    "GeoPoint",
    "haversine_distance",
    "path_length",
    "Ignition",
    "RawPointRecord",
    "RejectionReason",
    "SpeedStats",
    "Trip",
    "clean_points",
    "validate_trip",
    "__version__",
]
