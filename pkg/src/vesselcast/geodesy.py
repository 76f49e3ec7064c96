"""Spherical-Earth primitives: course wrapping, haversine distance, angular distance.

All trigonometry is in 64-bit floats and degree/radian conversion goes through
the single shared DEG2RAD constant so that downstream residual checks are
bit-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

DEG2RAD = math.pi / 180.0
RAD2DEG = 180.0 / math.pi

EARTH_RADIUS_M = 6_371_000.0

# cos(lat) below this is treated as "at the pole" for the flat-step formulas
MIN_COS_LAT = 1e-3


@dataclass(frozen=True)
class EarthModel:
    """Spherical Earth, fixed radius for a whole run."""

    radius_m: float = EARTH_RADIUS_M

    def __post_init__(self) -> None:
        if not (self.radius_m > 0.0):
            raise ValueError(f"earth radius must be positive, got {self.radius_m}")


EARTH = EarthModel()


@dataclass(frozen=True)
class GeoPoint:
    """Position in degrees. Longitude is canonicalized to [-180, 180).

    Latitudes outside [-90, 90] are rejected rather than clamped: they indicate
    corrupt data, not wraparound.
    """

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinates ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        lon = self.lon
        if not -180.0 <= lon < 180.0:
            lon = math.fmod(lon + 180.0, 360.0)
            if lon < 0.0:
                lon += 360.0
            object.__setattr__(self, "lon", lon - 180.0)


def wrap_course(course: float) -> float:
    """Wrap a course in degrees to [0, 360)."""
    if not math.isfinite(course):
        raise ValueError(f"course must be finite, got {course}")
    wrapped = math.fmod(course, 360.0)
    if wrapped < 0.0:
        wrapped += 360.0
    if wrapped == 360.0:  # tiny negative inputs round up to 360 after the shift
        wrapped = 0.0
    return wrapped


def signed_course_delta(from_deg: float, to_deg: float) -> float:
    """Shortest signed arc from one course to another, in [-180, 180)."""
    delta = math.fmod(to_deg - from_deg + 180.0, 360.0)
    if delta < 0.0:
        delta += 360.0
    return delta - 180.0


def haversine_m(a: GeoPoint, b: GeoPoint, earth: EarthModel = EARTH) -> float:
    """Great-circle distance in meters between two points."""
    lat1 = a.lat * DEG2RAD
    lat2 = b.lat * DEG2RAD
    dlat = (b.lat - a.lat) * DEG2RAD
    dlon = (b.lon - a.lon) * DEG2RAD
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * earth.radius_m * math.asin(min(1.0, math.sqrt(h)))


def initial_bearing_deg(a: GeoPoint, b: GeoPoint) -> float:
    """Initial great-circle bearing from a to b, degrees clockwise from north."""
    lat1 = a.lat * DEG2RAD
    lat2 = b.lat * DEG2RAD
    dlon = (b.lon - a.lon) * DEG2RAD
    x = math.sin(dlon) * math.cos(lat2)
    y = math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlon)
    return wrap_course(math.atan2(x, y) * RAD2DEG)


def angular_distance(sog_ms: float, accel_ms2: float, dt_s: float, earth: EarthModel = EARTH) -> float:
    """Angular distance (radians) traveled in dt at speed sog with constant accel."""
    if not dt_s > 0.0:
        raise ValueError(f"dt must be positive, got {dt_s}")
    return ((sog_ms + 0.5 * accel_ms2 * dt_s) * dt_s) / earth.radius_m


def check_not_polar(lat_deg: float) -> None:
    """Raise DomainError when cos(lat) is too small for the flat-step formulas."""
    if math.cos(lat_deg * DEG2RAD) < MIN_COS_LAT:
        raise DomainError(f"latitude {lat_deg} too close to a pole")
