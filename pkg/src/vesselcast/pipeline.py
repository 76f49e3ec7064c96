"""AIS preprocessing: parse, clean, segment, resample, derive features, window.

Stage order matches the data flow: CSV records are cleaned per vessel, split
into trips at 60-minute gaps, resampled onto a uniform 2-minute grid with
monotone-friendly cubic Hermite interpolation, converted to m/s, enriched
with finite-difference acceleration and course rate, trimmed to 3-hour
pieces, and finally windowed into normalized supervised pairs with a
deterministic trajectory-level split.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .geodesy import GeoPoint, signed_course_delta, wrap_course
from .kinematics import KinematicState

KNOTS_TO_MS = 0.514444

MMSI_MIN = 200_000_000
MMSI_MAX = 799_999_999

CSV_HEADER = ["mmsi", "timestamp", "lat", "lon", "sog", "cog", "ship_type"]

FEATURE_NAMES = ["lat", "lon", "sog", "cog", "accel", "cog_rate"]


@dataclass
class AisRecord:
    """One raw AIS row; sog still in knots."""

    mmsi: int
    timestamp: float
    lat: float
    lon: float
    sog: float
    cog: float
    ship_type: str


@dataclass
class TrajectoryPoint:
    """One resampled sample; sog in m/s, cog in [0, 360)."""

    t: float
    lat: float
    lon: float
    sog: float
    cog: float
    accel: float = 0.0
    cog_rate: float = 0.0

    def state(self) -> KinematicState:
        return KinematicState(GeoPoint(self.lat, self.lon), self.sog, self.cog, self.accel, self.cog_rate)


@dataclass
class WindowPair:
    """One supervised sample: normalized inputs/targets plus the raw anchor state."""

    x: np.ndarray  # (w_in, 6) normalized
    y: np.ndarray  # (w_out, 2) normalized
    state: KinematicState  # last observed state, raw units
    anchor: GeoPoint  # last observed position, raw degrees
    seg_id: int = 0
    idx: int = 0


@dataclass
class NormStats:
    """Per-feature min/max, fit on training windows only and frozen afterwards."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self) -> None:
        self.mins = np.asarray(self.mins, dtype=np.float64)
        self.maxs = np.asarray(self.maxs, dtype=np.float64)
        if self.mins.shape != (6,) or self.maxs.shape != (6,):
            raise ValueError("NormStats needs 6 per-feature mins and maxs")
        if not np.all(self.maxs > self.mins):
            raise ValueError("each feature max must exceed its min")

    @property
    def lat_range(self) -> float:
        return float(self.maxs[0] - self.mins[0])

    @property
    def lon_range(self) -> float:
        return float(self.maxs[1] - self.mins[1])

    def normalize(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mins) / (self.maxs - self.mins)

    def normalize_positions(self, pos: np.ndarray) -> np.ndarray:
        return (pos - self.mins[:2]) / (self.maxs[:2] - self.mins[:2])

    def denormalize_positions(self, pos: np.ndarray) -> np.ndarray:
        return pos * (self.maxs[:2] - self.mins[:2]) + self.mins[:2]

    def to_dict(self) -> dict:
        return {"features": FEATURE_NAMES, "min": self.mins.tolist(), "max": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(np.array(d["min"]), np.array(d["max"]))


@dataclass
class SplitDataset:
    train: list[WindowPair]
    val: list[WindowPair]
    test: list[WindowPair]
    stats: NormStats
    w_in: int = 15
    w_out: int = 15
    interval_s: float = 120.0


def parse_ais_csv(path: str | Path) -> tuple[list[AisRecord], dict[str, int]]:
    """Parse the input CSV, skipping (and counting) malformed rows.

    The header must match ``mmsi,timestamp,lat,lon,sog,cog,ship_type``
    exactly; anything else raises SchemaError.
    """
    path = Path(path)
    records: list[AisRecord] = []
    counts = {"rows_parsed": 0, "rows_malformed": 0}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {','.join(CSV_HEADER)}")
        if [h.strip() for h in header] != CSV_HEADER:
            raise SchemaError(f"{path}: header {header} does not match {CSV_HEADER}")
        for row in reader:
            counts["rows_parsed"] += 1
            if len(row) != len(CSV_HEADER):
                counts["rows_malformed"] += 1
                continue
            try:
                mmsi = int(row[0])
                ts = float(row[1])
                lat, lon, sog, cog = (float(v) for v in row[2:6])
            except ValueError:
                counts["rows_malformed"] += 1
                continue
            if not all(math.isfinite(v) for v in (ts, lat, lon, sog, cog)):
                counts["rows_malformed"] += 1
                continue
            if ts <= 0 or not -90.0 <= lat <= 90.0 or sog < 0.0:
                counts["rows_malformed"] += 1
                continue
            records.append(AisRecord(mmsi, ts, lat, lon, sog, cog, row[6]))
    return records, counts


def clean(
    records: list[AisRecord],
    min_sog_kn: float = 0.5,
    min_points: int = 300,
) -> tuple[list[tuple[int, list[AisRecord]]], dict[str, int]]:
    """Noise filtering: MMSI validity, duplicate timestamps, anchored vessels, course wrap.

    Returns per-vessel record lists (time-sorted) for vessels that keep at
    least ``min_points`` rows, plus drop counts per filter.
    """
    counts = {"invalid_mmsi": 0, "duplicate_timestamp": 0, "low_sog": 0, "vessels_dropped_short": 0}
    by_vessel: dict[int, list[AisRecord]] = {}
    seen: dict[int, set[float]] = {}
    for rec in records:
        if not (MMSI_MIN <= rec.mmsi <= MMSI_MAX):
            counts["invalid_mmsi"] += 1
            continue
        if rec.timestamp in seen.setdefault(rec.mmsi, set()):
            counts["duplicate_timestamp"] += 1
            continue
        seen[rec.mmsi].add(rec.timestamp)
        if rec.sog < min_sog_kn:
            counts["low_sog"] += 1
            continue
        rec.cog = wrap_course(rec.cog)
        by_vessel.setdefault(rec.mmsi, []).append(rec)

    vessels: list[tuple[int, list[AisRecord]]] = []
    for mmsi in sorted(by_vessel):
        recs = sorted(by_vessel[mmsi], key=lambda r: r.timestamp)
        if len(recs) < min_points:
            counts["vessels_dropped_short"] += 1
            continue
        vessels.append((mmsi, recs))
    return vessels, counts


def to_trajectory(records: list[AisRecord]) -> list[TrajectoryPoint]:
    """Convert cleaned records to trajectory points, knots to m/s."""
    return [
        TrajectoryPoint(r.timestamp, r.lat, r.lon, r.sog * KNOTS_TO_MS, r.cog)
        for r in records
    ]


def segment_trips(points: list[TrajectoryPoint], gap_min: float = 60.0) -> list[list[TrajectoryPoint]]:
    """Split a time-sorted trajectory wherever the gap strictly exceeds gap_min."""
    if not points:
        return []
    gap_s = gap_min * 60.0
    segments: list[list[TrajectoryPoint]] = [[points[0]]]
    for prev, cur in zip(points, points[1:]):
        if cur.t - prev.t > gap_s:
            segments.append([cur])
        else:
            segments[-1].append(cur)
    return segments


def _hermite_slopes(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-node slopes: three-point finite differences inside, one-sided at the ends."""
    m = np.empty_like(y)
    if len(t) < 2:
        m[:] = 0.0
        return m
    m[0] = (y[1] - y[0]) / (t[1] - t[0])
    m[-1] = (y[-1] - y[-2]) / (t[-1] - t[-2])
    if len(t) > 2:
        h1 = t[1:-1] - t[:-2]
        h2 = t[2:] - t[1:-1]
        m[1:-1] = (y[2:] * h1**2 + (h2**2 - h1**2) * y[1:-1] - y[:-2] * h2**2) / (h1 * h2 * (h1 + h2))
    return m


def _hermite_eval(t: np.ndarray, y: np.ndarray, m: np.ndarray, tq: np.ndarray) -> np.ndarray:
    """Evaluate the cubic Hermite interpolant at query times inside [t[0], t[-1]]."""
    idx = np.clip(np.searchsorted(t, tq, side="right") - 1, 0, len(t) - 2)
    h = t[idx + 1] - t[idx]
    s = (tq - t[idx]) / h
    h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
    h10 = s * (1.0 - s) ** 2
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    return h00 * y[idx] + h10 * h * m[idx] + h01 * y[idx + 1] + h11 * h * m[idx + 1]


def _unwrap_deg(angles: np.ndarray) -> np.ndarray:
    """Cumulative course sequence with the 0/360 jumps removed."""
    out = np.empty_like(angles)
    out[0] = angles[0]
    for i in range(1, len(angles)):
        out[i] = out[i - 1] + signed_course_delta(angles[i - 1], angles[i])
    return out


def hermite_resample(segment: list[TrajectoryPoint], interval_s: float = 120.0) -> list[TrajectoryPoint] | None:
    """Resample one segment onto a uniform grid; None when it has < 4 points.

    lat, lon, and sog are interpolated by cubic Hermite splines; cog is
    unwrapped first so interpolation crosses the 0/360 seam instead of
    sweeping through 180, then re-wrapped.
    """
    if len(segment) < 4:
        return None
    t = np.array([p.t for p in segment])
    if np.any(np.diff(t) <= 0):
        raise ValueError("segment timestamps must be strictly increasing")
    tq = t[0] + interval_s * np.arange(int((t[-1] - t[0]) / interval_s + 1e-9) + 1)
    # snap grid times that coincide with input nodes so node values reproduce exactly
    exact = np.searchsorted(t, tq)
    exact = np.clip(exact, 0, len(t) - 1)

    channels = {}
    for name in ("lat", "lon", "sog"):
        y = np.array([getattr(p, name) for p in segment])
        channels[name] = _hermite_eval(t, y, _hermite_slopes(t, y), tq)
    cog_unwrapped = _unwrap_deg(np.array([p.cog for p in segment]))
    cog_q = _hermite_eval(t, cog_unwrapped, _hermite_slopes(t, cog_unwrapped), tq)

    out: list[TrajectoryPoint] = []
    for j, time in enumerate(tq):
        k = exact[j]
        if k < len(t) and t[k] == time:
            p = segment[k]
            out.append(TrajectoryPoint(float(time), p.lat, p.lon, p.sog, p.cog))
        else:
            out.append(
                TrajectoryPoint(
                    float(time),
                    float(channels["lat"][j]),
                    float(channels["lon"][j]),
                    max(0.0, float(channels["sog"][j])),
                    wrap_course(float(cog_q[j])),
                )
            )
    return out


def derive_kinematics(segment: list[TrajectoryPoint]) -> list[TrajectoryPoint]:
    """Fill accel and cog_rate by backward finite differences; the first point gets zeros."""
    out: list[TrajectoryPoint] = []
    for i, p in enumerate(segment):
        if i == 0:
            accel, rate = 0.0, 0.0
        else:
            prev = segment[i - 1]
            dt = p.t - prev.t
            accel = (p.sog - prev.sog) / dt
            rate = signed_course_delta(prev.cog, p.cog) / dt
        out.append(TrajectoryPoint(p.t, p.lat, p.lon, p.sog, p.cog, accel, rate))
    return out


def trim_segments(
    segments: list[list[TrajectoryPoint]],
    segment_h: float = 3.0,
    interval_s: float = 120.0,
    min_len: int = 30,
) -> list[list[TrajectoryPoint]]:
    """Cut segments into consecutive non-overlapping pieces of segment_h hours.

    Remainders shorter than a full piece are kept when they still hold at
    least ``min_len`` points.
    """
    piece_len = max(1, int(segment_h * 3600.0 / interval_s))
    pieces: list[list[TrajectoryPoint]] = []
    for seg in segments:
        for start in range(0, len(seg), piece_len):
            piece = seg[start : start + piece_len]
            if len(piece) == piece_len or len(piece) >= min_len:
                pieces.append(piece)
    return pieces


def _point_features(p: TrajectoryPoint) -> list[float]:
    return [p.lat, p.lon, p.sog, p.cog, p.accel, p.cog_rate]


def make_windows(
    segments: list[list[TrajectoryPoint]],
    w_in: int = 15,
    w_out: int = 15,
    seed: int = 0,
    test_frac: float = 0.10,
    val_frac: float = 0.20,
    interval_s: float = 120.0,
) -> SplitDataset:
    """Slide windows over segments and split at trajectory level.

    floor(test_frac * S) segments go to test; of the rest, round(val_frac * R)
    to validation and the remainder to training, after a seeded shuffle.
    Normalization stats are fit on training-window inputs only and applied
    unclipped everywhere.
    """
    if w_in < 1 or w_out < 1:
        raise ValueError("w_in and w_out must be >= 1")
    order = list(range(len(segments)))
    rng = np.random.default_rng(seed)
    rng.shuffle(order)
    n_test = int(len(segments) * test_frac)
    remaining = len(segments) - n_test
    n_val = int(math.floor(val_frac * remaining + 0.5))
    test_ids = set(order[:n_test])
    val_ids = set(order[n_test : n_test + n_val])

    raw: dict[str, list[tuple[int, int, np.ndarray, np.ndarray, TrajectoryPoint]]] = {
        "train": [], "val": [], "test": [],
    }
    for seg_id, seg in enumerate(segments):
        split = "test" if seg_id in test_ids else "val" if seg_id in val_ids else "train"
        n_windows = len(seg) - (w_in + w_out) + 1
        feats = np.array([_point_features(p) for p in seg])
        for k in range(max(0, n_windows)):
            x = feats[k : k + w_in]
            y = feats[k + w_in : k + w_in + w_out, :2]
            raw[split].append((seg_id, k, x, y, seg[k + w_in - 1]))

    if not raw["train"]:
        raise ValueError("no training windows; segments too short for the window size")
    train_x = np.concatenate([w[2] for w in raw["train"]], axis=0)
    mins, maxs = train_x.min(axis=0), train_x.max(axis=0)
    flat = maxs <= mins
    maxs[flat] = mins[flat] + 1.0  # constant feature: avoid a zero range
    stats = NormStats(mins, maxs)

    def build(items) -> list[WindowPair]:
        out = []
        for seg_id, k, x, y, last in items:
            out.append(
                WindowPair(
                    x=stats.normalize(x),
                    y=stats.normalize_positions(y),
                    state=last.state(),
                    anchor=GeoPoint(last.lat, last.lon),
                    seg_id=seg_id,
                    idx=k,
                )
            )
        return out

    return SplitDataset(
        train=build(raw["train"]),
        val=build(raw["val"]),
        test=build(raw["test"]),
        stats=stats,
        w_in=w_in,
        w_out=w_out,
        interval_s=interval_s,
    )


def run_pipeline(
    input_csv: str | Path,
    interval_s: float = 120.0,
    gap_min: float = 60.0,
    min_points: int = 300,
    min_sog_kn: float = 0.5,
    segment_h: float = 3.0,
    w_in: int = 15,
    w_out: int = 15,
    seed: int = 0,
) -> tuple[SplitDataset, dict]:
    """Full preprocessing chain from an AIS CSV to a windowed dataset plus report."""
    records, counts = parse_ais_csv(input_csv)
    vessels, clean_counts = clean(records, min_sog_kn=min_sog_kn, min_points=min_points)
    counts.update(clean_counts)
    counts["vessels_kept"] = len(vessels)

    segments: list[list[TrajectoryPoint]] = []
    counts["segments_dropped_short"] = 0
    for _, recs in vessels:
        for seg in segment_trips(to_trajectory(recs), gap_min=gap_min):
            resampled = hermite_resample(seg, interval_s=interval_s)
            if resampled is None:
                counts["segments_dropped_short"] += 1
                continue
            segments.append(derive_kinematics(resampled))
    segments = trim_segments(segments, segment_h=segment_h, interval_s=interval_s, min_len=w_in + w_out)
    counts["segments_kept"] = len(segments)

    dataset = make_windows(segments, w_in=w_in, w_out=w_out, seed=seed, interval_s=interval_s)
    counts["windows_train"] = len(dataset.train)
    counts["windows_val"] = len(dataset.val)
    counts["windows_test"] = len(dataset.test)
    return dataset, counts


def _window_header(w_in: int, w_out: int) -> list[str]:
    cols = ["seg", "idx"]
    for i in range(w_in):
        cols += [f"x{i}_{name}" for name in FEATURE_NAMES]
    for j in range(w_out):
        cols += [f"y{j}_lat", f"y{j}_lon"]
    cols += ["anchor_lat", "anchor_lon", "state_sog", "state_cog", "state_accel", "state_cog_rate"]
    return cols


def save_dataset(dataset: SplitDataset, out_dir: str | Path, report: dict | None = None) -> None:
    """Write train/val/test.csv (one row per window), norm.json, and report.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = _window_header(dataset.w_in, dataset.w_out)
    for split in ("train", "val", "test"):
        with open(out / f"{split}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for w in getattr(dataset, split):
                row = [w.seg_id, w.idx]
                row += [repr(float(v)) for v in w.x.ravel()]
                row += [repr(float(v)) for v in w.y.ravel()]
                row += [repr(float(v)) for v in (
                    w.anchor.lat, w.anchor.lon, w.state.sog, w.state.cog, w.state.accel, w.state.cog_rate,
                )]
                writer.writerow(row)
    norm = dataset.stats.to_dict()
    norm.update({"w_in": dataset.w_in, "w_out": dataset.w_out, "interval_s": dataset.interval_s})
    with open(out / "norm.json", "w") as fh:
        json.dump(norm, fh, indent=2, sort_keys=True)
    if report is not None:
        with open(out / "report.json", "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)


def load_dataset(data_dir: str | Path) -> SplitDataset:
    """Load a dataset directory written by save_dataset."""
    data_dir = Path(data_dir)
    with open(data_dir / "norm.json") as fh:
        norm = json.load(fh)
    stats = NormStats.from_dict(norm)
    w_in, w_out = int(norm["w_in"]), int(norm["w_out"])
    interval_s = float(norm.get("interval_s", 120.0))

    splits: dict[str, list[WindowPair]] = {}
    expected = _window_header(w_in, w_out)
    for split in ("train", "val", "test"):
        windows: list[WindowPair] = []
        with open(data_dir / f"{split}.csv", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != expected:
                raise SchemaError(f"{data_dir}/{split}.csv: unexpected header")
            for row in reader:
                vals = [float(v) for v in row[2:]]
                nx = w_in * 6
                ny = w_out * 2
                x = np.array(vals[:nx]).reshape(w_in, 6)
                y = np.array(vals[nx : nx + ny]).reshape(w_out, 2)
                a_lat, a_lon, sog, cog, accel, rate = vals[nx + ny :]
                windows.append(
                    WindowPair(
                        x=x,
                        y=y,
                        state=KinematicState(GeoPoint(a_lat, a_lon), sog, cog, accel, rate),
                        anchor=GeoPoint(a_lat, a_lon),
                        seg_id=int(row[0]),
                        idx=int(row[1]),
                    )
                )
        splits[split] = windows
    return SplitDataset(
        train=splits["train"],
        val=splits["val"],
        test=splits["test"],
        stats=stats,
        w_in=w_in,
        w_out=w_out,
        interval_s=interval_s,
    )
