"""Evaluation metrics: per-coordinate MAE/MSE and haversine ADE/FDE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geodesy import EARTH, EarthModel, GeoPoint, haversine_m


@dataclass
class MetricsReport:
    """Aggregate metrics over a set of windows; distances in meters."""

    mae_lat: float
    mae_lon: float
    mse_lat: float
    mse_lon: float
    ade_m: float
    ade_std_m: float
    fde_m: float
    fde_std_m: float
    n_windows: int

    def to_dict(self) -> dict:
        return {
            "mae_lat": self.mae_lat,
            "mae_lon": self.mae_lon,
            "mse_lat": self.mse_lat,
            "mse_lon": self.mse_lon,
            "ade_m": self.ade_m,
            "ade_std_m": self.ade_std_m,
            "fde_m": self.fde_m,
            "fde_std_m": self.fde_std_m,
            "n_windows": self.n_windows,
        }


def mae_mse(pred: np.ndarray, truth: np.ndarray) -> tuple[float, float, float, float]:
    """Per-coordinate mean absolute and mean squared errors.

    Returns (mae_lat, mae_lon, mse_lat, mse_lon) for (n, 2) degree arrays.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 2 or pred.shape[1] != 2:
        raise ValueError(f"pred and truth must both be (n, 2), got {pred.shape} vs {truth.shape}")
    if pred.shape[0] == 0:
        raise ValueError("empty input")
    err = truth - pred
    mae = np.mean(np.abs(err), axis=0)
    mse = np.mean(err**2, axis=0)
    return float(mae[0]), float(mae[1]), float(mse[0]), float(mse[1])


def ade_fde(
    pred: list[GeoPoint],
    truth: list[GeoPoint],
    earth: EarthModel = EARTH,
) -> tuple[float, float]:
    """Average and final haversine displacement errors in meters."""
    if len(pred) != len(truth) or not pred:
        raise ValueError("pred and truth must be equal-length, non-empty tracks")
    dists = [haversine_m(p, t, earth) for p, t in zip(pred, truth)]
    return float(np.mean(dists)), float(dists[-1])


def evaluate_windows(
    pred_deg: np.ndarray,
    truth_deg: np.ndarray,
    earth: EarthModel = EARTH,
) -> MetricsReport:
    """Aggregate MAE/MSE and mean +- std of per-window ADE/FDE.

    pred_deg and truth_deg are (N, H, 2) arrays in degrees.
    """
    pred_deg = np.asarray(pred_deg, dtype=np.float64)
    truth_deg = np.asarray(truth_deg, dtype=np.float64)
    if pred_deg.shape != truth_deg.shape or pred_deg.ndim != 3:
        raise ValueError("pred and truth must both be (N, H, 2)")
    n = pred_deg.shape[0]
    if n == 0:
        raise ValueError("no windows to evaluate")
    mae_lat, mae_lon, mse_lat, mse_lon = mae_mse(
        pred_deg.reshape(-1, 2), truth_deg.reshape(-1, 2)
    )
    ades = np.empty(n)
    fdes = np.empty(n)
    for i in range(n):
        p = [GeoPoint(float(a), float(b)) for a, b in pred_deg[i]]
        t = [GeoPoint(float(a), float(b)) for a, b in truth_deg[i]]
        ades[i], fdes[i] = ade_fde(p, t, earth)
    return MetricsReport(
        mae_lat=mae_lat,
        mae_lon=mae_lon,
        mse_lat=mse_lat,
        mse_lon=mse_lon,
        ade_m=float(ades.mean()),
        ade_std_m=float(ades.std()),
        fde_m=float(fdes.mean()),
        fde_std_m=float(fdes.std()),
        n_windows=n,
    )
