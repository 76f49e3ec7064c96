"""Expected-displacement models and multi-step dead reckoning.

Two single-step families are provided:

* first-order flat ("small-angle") and great-circle displacements, both
  refined with a Taylor midpoint course, for the constant-state horizon
  treatment;
* Heun's second-order predictor-corrector built on the instantaneous
  kinematic derivative.

Multi-step rollout supports two horizon semantics. ``LITERAL`` repeats the
identical single-step displacement (speed, course, and their rates held at
the anchor values). ``PROPAGATED`` advances course and speed every step and
steps with the plain first-order derivative (Euler) or Heun's method; this is
the mode under which the integrators exhibit their nominal convergence
orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError
from .geodesy import DEG2RAD, EARTH, RAD2DEG, EarthModel, GeoPoint, check_not_polar, wrap_course


class Integrator(Enum):
    EULER1 = "euler"
    HEUN2 = "heun"


class Approx(Enum):
    SMALL_ANGLE = "small"
    GREAT_CIRCLE = "great"


class HorizonMode(Enum):
    LITERAL = "literal"
    PROPAGATED = "propagated"


@dataclass(frozen=True)
class Scheme:
    """Integration order plus Earth-curvature approximation choice."""

    order: Integrator
    approx: Approx = Approx.SMALL_ANGLE


@dataclass(frozen=True)
class KinematicState:
    """Position plus the speed/course state held over a prediction horizon.

    Course is canonicalized to [0, 360); speed must be non-negative.
    """

    pos: GeoPoint
    sog: float  # m/s
    cog: float  # degrees
    accel: float = 0.0  # m/s^2
    cog_rate: float = 0.0  # degrees/s

    def __post_init__(self) -> None:
        for name in ("sog", "cog", "accel", "cog_rate"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.sog < 0.0:
            raise ValueError(f"sog must be non-negative, got {self.sog}")
        object.__setattr__(self, "cog", wrap_course(self.cog))


@dataclass(frozen=True)
class Displacement:
    dlat: float  # degrees
    dlon: float  # degrees


def midpoint_course_rad(cog_deg: float, cog_rate_dps: float, dt_s: float) -> float:
    """Course at t + dt/2 via first-order Taylor expansion, in radians.

    Deliberately not wrapped: the result only feeds trigonometry, and wrapping
    would put a discontinuity into gradients.
    """
    if not dt_s > 0.0:
        raise ValueError(f"dt must be positive, got {dt_s}")
    return (cog_deg + 0.5 * cog_rate_dps * dt_s) * DEG2RAD


def displacement_small_angle(s: KinematicState, dt_s: float, earth: EarthModel = EARTH) -> Displacement:
    """Flat-step expected displacement with midpoint course, in degrees."""
    check_not_polar(s.pos.lat)
    psi = midpoint_course_rad(s.cog, s.cog_rate, dt_s)
    factor = (dt_s / earth.radius_m) * RAD2DEG
    speed = s.sog + 0.5 * s.accel * dt_s
    dlat = speed * math.cos(psi) * factor
    dlon = speed * math.sin(psi) * factor / math.cos(s.pos.lat * DEG2RAD)
    return Displacement(dlat, dlon)


def displacement_great_circle(
    s: KinematicState,
    dt_s: float,
    earth: EarthModel = EARTH,
    paper_literal_lon: bool = False,
) -> Displacement:
    """Great-circle (destination-point) expected displacement with midpoint course.

    ``paper_literal_lon`` switches the longitude denominator to the
    sin(phi1)*sin(phi1) variant; the default uses sin(phi1)*sin(phi2) with
    phi2 the destination latitude, which is exact on the sphere.
    """
    psi = midpoint_course_rad(s.cog, s.cog_rate, dt_s)
    d = ((s.sog + 0.5 * s.accel * dt_s) * dt_s) / earth.radius_m
    if d == 0.0:  # keep zero-input invariance exact (asin/sin round-trip is not)
        return Displacement(0.0, 0.0)
    phi1 = s.pos.lat * DEG2RAD
    sin_phi1, cos_phi1 = math.sin(phi1), math.cos(phi1)
    dlat_rad = math.asin(min(1.0, max(-1.0, sin_phi1 * math.cos(d) + cos_phi1 * math.sin(d) * math.cos(psi)))) - phi1
    phi2 = phi1 if paper_literal_lon else phi1 + dlat_rad
    dlon_rad = math.atan2(
        math.sin(psi) * math.sin(d) * cos_phi1,
        math.cos(d) - sin_phi1 * math.sin(phi2),
    )
    return Displacement(dlat_rad * RAD2DEG, dlon_rad * RAD2DEG)


def _derivative(lat_deg: float, sog: float, cog_deg: float, earth: EarthModel) -> tuple[float, float]:
    """Instantaneous (dlat/dt, dlon/dt) in degrees/s at the given raw state."""
    if math.cos(lat_deg * DEG2RAD) < 1e-3:
        raise DomainError(f"latitude {lat_deg} too close to a pole")
    psi = cog_deg * DEG2RAD
    dlat = sog * math.cos(psi) / earth.radius_m * RAD2DEG
    dlon = sog * math.sin(psi) / (earth.radius_m * math.cos(lat_deg * DEG2RAD)) * RAD2DEG
    return dlat, dlon


def state_derivative(s: KinematicState, earth: EarthModel = EARTH) -> tuple[float, float]:
    """Kinematic time derivative of (lat, lon) in degrees/s."""
    return _derivative(s.pos.lat, s.sog, s.cog, earth)


def _heun_step(
    lat: float,
    sog: float,
    cog: float,
    accel: float,
    cog_rate: float,
    dt_s: float,
    earth: EarthModel,
) -> tuple[float, float]:
    k1 = _derivative(lat, sog, cog, earth)
    pred_lat = lat + k1[0] * dt_s
    if not -90.0 <= pred_lat <= 90.0:
        raise DomainError(f"predictor latitude {pred_lat} outside [-90, 90]")
    k2 = _derivative(pred_lat, sog + accel * dt_s, cog + cog_rate * dt_s, earth)
    return 0.5 * (k1[0] + k2[0]) * dt_s, 0.5 * (k1[1] + k2[1]) * dt_s


def displacement_heun(s: KinematicState, dt_s: float, earth: EarthModel = EARTH) -> Displacement:
    """Heun (predictor-corrector) expected displacement in degrees.

    The predictor is a forward-Euler step of position; the corrector
    re-evaluates the kinematic derivative at the predicted state with speed
    sog + accel*dt and course cog + cog_rate*dt, then both derivative samples
    are averaged.
    """
    if not dt_s > 0.0:
        raise ValueError(f"dt must be positive, got {dt_s}")
    dlat, dlon = _heun_step(s.pos.lat, s.sog, s.cog, s.accel, s.cog_rate, dt_s, earth)
    return Displacement(dlat, dlon)


def _single_step(s: KinematicState, dt_s: float, scheme: Scheme, earth: EarthModel) -> Displacement:
    if scheme.order is Integrator.HEUN2:
        return displacement_heun(s, dt_s, earth)
    if scheme.approx is Approx.GREAT_CIRCLE:
        return displacement_great_circle(s, dt_s, earth)
    return displacement_small_angle(s, dt_s, earth)


def _euler_propagated_step(
    lat: float,
    sog: float,
    cog: float,
    dt_s: float,
    approx: Approx,
    earth: EarthModel,
) -> tuple[float, float]:
    """Plain first-order step from start-of-interval values (no midpoint)."""
    if approx is Approx.SMALL_ANGLE:
        k = _derivative(lat, sog, cog, earth)
        return k[0] * dt_s, k[1] * dt_s
    d = sog * dt_s / earth.radius_m
    if d == 0.0:
        return 0.0, 0.0
    psi = cog * DEG2RAD
    phi1 = lat * DEG2RAD
    sin_phi1, cos_phi1 = math.sin(phi1), math.cos(phi1)
    dlat_rad = math.asin(min(1.0, max(-1.0, sin_phi1 * math.cos(d) + cos_phi1 * math.sin(d) * math.cos(psi)))) - phi1
    phi2 = phi1 + dlat_rad
    dlon_rad = math.atan2(
        math.sin(psi) * math.sin(d) * cos_phi1,
        math.cos(d) - sin_phi1 * math.sin(phi2),
    )
    return dlat_rad * RAD2DEG, dlon_rad * RAD2DEG


def expected_displacements(
    s: KinematicState,
    dt_s: float,
    steps: int,
    scheme: Scheme,
    mode: HorizonMode = HorizonMode.LITERAL,
    earth: EarthModel = EARTH,
) -> list[Displacement]:
    """Per-step expected displacements over a horizon of the given length.

    LITERAL holds the whole state constant, so every step repeats the same
    midpoint-refined single-step displacement. PROPAGATED advances position,
    speed, and course each step and uses the scheme's plain integrator step.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if mode is HorizonMode.LITERAL:
        return [_single_step(s, dt_s, scheme, earth)] * steps

    out: list[Displacement] = []
    lat, sog, cog = s.pos.lat, s.sog, s.cog
    for _ in range(steps):
        if scheme.order is Integrator.EULER1:
            dlat, dlon = _euler_propagated_step(lat, sog, cog, dt_s, scheme.approx, earth)
        else:
            dlat, dlon = _heun_step(lat, sog, cog, s.accel, s.cog_rate, dt_s, earth)
        out.append(Displacement(dlat, dlon))
        lat += dlat
        if not -90.0 <= lat <= 90.0:
            raise DomainError(f"propagated latitude {lat} outside [-90, 90]")
        sog += s.accel * dt_s
        cog += s.cog_rate * dt_s
    return out


def dead_reckon(
    s: KinematicState,
    dt_s: float,
    steps: int,
    scheme: Scheme,
    mode: HorizonMode = HorizonMode.LITERAL,
    earth: EarthModel = EARTH,
) -> list[GeoPoint]:
    """Extrapolate ``steps`` positions ahead of the state's position."""
    deltas = expected_displacements(s, dt_s, steps, scheme, mode, earth)
    points: list[GeoPoint] = []
    lat, lon = s.pos.lat, s.pos.lon
    for d in deltas:
        lat += d.dlat
        lon += d.dlon
        if not -90.0 <= lat <= 90.0:
            raise DomainError(f"dead-reckoned latitude {lat} outside [-90, 90]")
        points.append(GeoPoint(lat, lon))
    return points
