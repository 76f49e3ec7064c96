"""Synthetic-trajectory oracle.

Generates trajectories that exactly satisfy the per-step kinematic stepping
of a chosen scheme, so physics residuals evaluated under the generating
scheme vanish to machine precision. Optional Gaussian positional noise
mimics GPS jitter; after jittering, speed and course are re-derived from the
noisy positions so the recorded features stay self-consistent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geodesy import EARTH, GeoPoint, haversine_m, initial_bearing_deg, signed_course_delta, wrap_course
from .kinematics import Approx, HorizonMode, Integrator, KinematicState, Scheme, expected_displacements
from .pipeline import KNOTS_TO_MS, TrajectoryPoint, derive_kinematics


@dataclass(frozen=True)
class Leg:
    """One maneuver: the vessel holds cog_rate and accel for duration_s,
    starting from the given speed."""

    duration_s: float
    sog: float  # m/s at leg start
    cog_rate: float = 0.0  # degrees/s
    accel: float = 0.0  # m/s^2


@dataclass
class SynthSpec:
    start: GeoPoint
    cog: float  # initial course, degrees
    legs: list[Leg]
    dt_s: float = 120.0
    scheme: Scheme = field(default_factory=lambda: Scheme(Integrator.EULER1, Approx.SMALL_ANGLE))
    noise_sigma_deg: float = 0.0

    def __post_init__(self) -> None:
        if not self.legs:
            raise ValueError("spec needs at least one leg")
        if not self.dt_s > 0.0:
            raise ValueError("dt must be positive")
        if self.noise_sigma_deg < 0.0:
            raise ValueError("noise sigma must be non-negative")

    def leg_steps(self) -> list[int]:
        return [max(1, round(leg.duration_s / self.dt_s)) for leg in self.legs]

    def n_points(self) -> int:
        return sum(self.leg_steps()) + 1


def generate(spec: SynthSpec, seed: int = 0) -> list[TrajectoryPoint]:
    """Roll the spec out step by step under its scheme (propagated state).

    Each recorded point carries the speed/course/accel/course-rate values
    exactly as used for the step taken from it, so dead reckoning from any
    recorded point reproduces the following points bit-for-bit. When the
    spec has positional noise, it is applied afterwards with the seed.
    """
    points: list[TrajectoryPoint] = []
    lat, lon = spec.start.lat, spec.start.lon
    cog = wrap_course(spec.cog)
    t = 0.0
    for leg, steps in zip(spec.legs, spec.leg_steps()):
        sog = leg.sog
        for _ in range(steps):
            points.append(TrajectoryPoint(t, lat, lon, sog, cog, leg.accel, leg.cog_rate))
            state = KinematicState(GeoPoint(lat, lon), sog, cog, leg.accel, leg.cog_rate)
            (step,) = expected_displacements(state, spec.dt_s, 1, spec.scheme, HorizonMode.PROPAGATED)
            lat += step.dlat
            lon += step.dlon
            sog += leg.accel * spec.dt_s
            cog = wrap_course(cog + leg.cog_rate * spec.dt_s)
            t += spec.dt_s
    last = spec.legs[-1]
    points.append(TrajectoryPoint(t, lat, lon, sog, cog, last.accel, last.cog_rate))
    if spec.noise_sigma_deg > 0.0:
        points = add_noise(points, spec.noise_sigma_deg, seed)
    return points


def add_noise(traj: list[TrajectoryPoint], sigma_deg: float, seed: int = 0) -> list[TrajectoryPoint]:
    """Jitter positions with zero-mean Gaussians and re-derive the kinematics.

    Speed and course come from finite differences of the noisy positions
    (haversine distance and initial bearing between consecutive samples);
    acceleration and course rate then follow from the usual backward
    differences.
    """
    if sigma_deg < 0.0:
        raise ValueError("sigma must be non-negative")
    if sigma_deg == 0.0 or not traj:
        return list(traj)
    rng = np.random.default_rng(seed)
    jitter = rng.normal(0.0, sigma_deg, size=(len(traj), 2))
    noisy: list[TrajectoryPoint] = []
    for p, (dlat, dlon) in zip(traj, jitter):
        lat = min(90.0, max(-90.0, p.lat + dlat))
        noisy.append(TrajectoryPoint(p.t, lat, p.lon + dlon, p.sog, p.cog))

    for i in range(1, len(noisy)):
        a = GeoPoint(noisy[i - 1].lat, noisy[i - 1].lon)
        b = GeoPoint(noisy[i].lat, noisy[i].lon)
        dt = noisy[i].t - noisy[i - 1].t
        noisy[i].sog = haversine_m(a, b) / dt
        noisy[i].cog = initial_bearing_deg(a, b)
    if len(noisy) > 1:
        noisy[0].sog = noisy[1].sog
        noisy[0].cog = noisy[1].cog
    return derive_kinematics(noisy)


def leg_point_ranges(spec: SynthSpec) -> list[tuple[int, int]]:
    """Index range [start, end) of the points recorded during each leg."""
    ranges = []
    start = 0
    for steps in spec.leg_steps():
        ranges.append((start, start + steps))
        start += steps
    return ranges


def sample_spec(template: dict, rng: np.random.Generator) -> SynthSpec:
    """Build a concrete spec from a template whose numeric fields may be [lo, hi] ranges."""

    def draw(value, default=0.0):
        if value is None:
            return default
        if isinstance(value, (list, tuple)):
            lo, hi = value
            return float(rng.uniform(lo, hi))
        return float(value)

    start = template.get("start", {})
    legs = []
    for leg in template["legs"]:
        legs.append(
            Leg(
                duration_s=draw(leg.get("duration_s"), 3600.0),
                sog=draw(leg.get("sog"), 8.0),
                cog_rate=draw(leg.get("cog_rate")),
                accel=draw(leg.get("accel")),
            )
        )
    scheme = Scheme(
        Integrator(template.get("scheme", {}).get("order", "euler")),
        Approx(template.get("scheme", {}).get("approx", "small")),
    )
    return SynthSpec(
        start=GeoPoint(draw(start.get("lat")), draw(start.get("lon"))),
        cog=draw(start.get("cog"), 90.0),
        legs=legs,
        dt_s=draw(template.get("dt_s"), 120.0),
        scheme=scheme,
        noise_sigma_deg=draw(template.get("noise_sigma_deg")),
    )


def load_template(path: str | Path) -> dict:
    with open(path) as fh:
        template = json.load(fh)
    if "legs" not in template or not template["legs"]:
        raise ValueError(f"{path}: synth spec needs a non-empty 'legs' list")
    return template


def write_ais_csv(
    path: str | Path,
    trajectories: list[list[TrajectoryPoint]],
    mmsi_start: int = 200_000_001,
    t0: int = 1_700_000_000,
    ship_type: int = 70,
) -> None:
    """Emit trajectories in the preprocessing input schema (sog back in knots)."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mmsi", "timestamp", "lat", "lon", "sog", "cog", "ship_type"])
        for k, traj in enumerate(trajectories):
            mmsi = mmsi_start + k
            for p in traj:
                writer.writerow(
                    [
                        mmsi,
                        int(t0 + p.t),
                        repr(float(p.lat)),
                        repr(float(p.lon)),
                        repr(float(p.sog / KNOTS_TO_MS)),
                        repr(float(p.cog)),
                        ship_type,
                    ]
                )


def windows_within_legs(
    traj: list[TrajectoryPoint],
    spec: SynthSpec,
    horizon: int,
    max_windows: int | None = None,
) -> list[int]:
    """Anchor indices whose whole horizon stays inside a single leg."""
    anchors = []
    for start, end in leg_point_ranges(spec):
        anchors.extend(range(start, end - horizon + 1))
    anchors = [i for i in anchors if i + horizon < len(traj) + 1]
    return anchors[:max_windows] if max_windows else anchors
