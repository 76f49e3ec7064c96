"""Data loss, finite-difference physics residuals, and the weighted total loss.

The data term is the batch-mean of horizon-summed squared errors (mean over
windows, sum over steps). The physics term divides by both batch size and
horizon length. The asymmetry is deliberate and kept exactly as formulated so
that weight sweeps stay interpretable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geodesy import GeoPoint
from .kinematics import Approx, HorizonMode, Integrator, KinematicState, Scheme, expected_displacements


class PhysicsOrder(Enum):
    NONE = 0
    FIRST = 1
    SECOND = 2


@dataclass(frozen=True)
class PhysicsConfig:
    """Physics-loss configuration: order, curvature approximation, weight, scales.

    lat_range / lon_range are the coordinate ranges of the training split and
    normalize the residuals. horizon_mode selects between the constant-state
    (literal) expected displacements and the per-step propagated rollout.
    """

    order: PhysicsOrder = PhysicsOrder.NONE
    approx: Approx = Approx.SMALL_ANGLE
    lam: float = 0.0
    dt_s: float = 120.0
    lat_range: float = 1.0
    lon_range: float = 1.0
    horizon_mode: HorizonMode = HorizonMode.LITERAL

    def __post_init__(self) -> None:
        if self.lam < 0.0 or not math.isfinite(self.lam):
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        if not self.dt_s > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt_s}")
        if not (self.lat_range > 0.0 and self.lon_range > 0.0):
            raise ValueError("lat/lon ranges must be positive")

    def scheme(self) -> Scheme:
        if self.order is PhysicsOrder.NONE:
            raise ValueError("no integration scheme for physics order NONE")
        order = Integrator.EULER1 if self.order is PhysicsOrder.FIRST else Integrator.HEUN2
        return Scheme(order, self.approx)


@dataclass
class PredictionBatch:
    """Aligned predictions and ground truth for N windows over an H-step horizon.

    pred and truth are (N, H, 2) arrays of [lat, lon] in degrees; last_obs and
    states carry each window's final observed position and kinematic state.
    """

    last_obs: list[GeoPoint]
    pred: np.ndarray
    truth: np.ndarray
    states: list[KinematicState] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.pred = np.asarray(self.pred, dtype=np.float64)
        self.truth = np.asarray(self.truth, dtype=np.float64)
        n = len(self.last_obs)
        if self.pred.shape != self.truth.shape or self.pred.ndim != 3 or self.pred.shape[2] != 2:
            raise ValueError(f"pred/truth must both be (N, H, 2), got {self.pred.shape} vs {self.truth.shape}")
        if self.pred.shape[0] != n:
            raise ValueError(f"{n} anchor points for {self.pred.shape[0]} windows")
        if self.states and len(self.states) != n:
            raise ValueError(f"{len(self.states)} states for {n} windows")
        if self.pred.shape[1] < 1:
            raise ValueError("horizon must be >= 1")


def data_loss(batch: PredictionBatch, normalized: bool = False, cfg: PhysicsConfig | None = None) -> float:
    """Mean over windows of the horizon-summed squared prediction error.

    With ``normalized=True`` coordinate errors are first divided by the
    lat/lon ranges from ``cfg`` (equivalent to computing the loss on min-max
    scaled coordinates, since the offsets cancel in differences).
    """
    if len(batch.last_obs) == 0:
        raise ValueError("empty batch")
    err = batch.truth - batch.pred
    if normalized:
        if cfg is None:
            raise ValueError("normalized data loss needs a PhysicsConfig for the ranges")
        err = err / np.array([cfg.lat_range, cfg.lon_range])
    return float(np.sum(err**2) / batch.pred.shape[0])


def predicted_displacements(last_obs: GeoPoint, pred: np.ndarray) -> np.ndarray:
    """Finite-difference displacements of a predicted track, anchored at the last observation.

    Returns an (H, 2) array: the first row is pred[0] minus the anchor, then
    successive differences, giving exactly one displacement per horizon step.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.ndim != 2 or pred.shape[1] != 2 or pred.shape[0] < 1:
        raise ValueError(f"pred must be (H, 2) with H >= 1, got {pred.shape}")
    anchor = np.array([last_obs.lat, last_obs.lon])
    return np.diff(np.vstack([anchor, pred]), axis=0)


def physics_residuals(batch: PredictionBatch, cfg: PhysicsConfig) -> np.ndarray:
    """Normalized differences between predicted and kinematically expected displacements.

    Expected displacements come from each window's constant kinematic state
    under cfg's order/approx/horizon mode; residuals are divided
    component-wise by the training lat/lon ranges. Shape (N, H, 2).
    """
    if cfg.order is PhysicsOrder.NONE:
        raise ValueError("physics residuals need order FIRST or SECOND")
    if not batch.states:
        raise ValueError("batch has no kinematic states")
    n, h, _ = batch.pred.shape
    scheme = cfg.scheme()
    residuals = np.empty((n, h, 2))
    scale = np.array([cfg.lat_range, cfg.lon_range])
    for i in range(n):
        d_pred = predicted_displacements(batch.last_obs[i], batch.pred[i])
        expected = expected_displacements(batch.states[i], cfg.dt_s, h, scheme, cfg.horizon_mode)
        d_exp = np.array([[d.dlat, d.dlon] for d in expected])
        residuals[i] = (d_pred - d_exp) / scale
    return residuals


def physics_loss(residuals: np.ndarray) -> float:
    """Average over windows and steps of the squared residual norm."""
    residuals = np.asarray(residuals, dtype=np.float64)
    if residuals.size == 0:
        raise ValueError("empty residuals")
    n, h = residuals.shape[0], residuals.shape[1]
    return float(np.sum(residuals**2) / (n * h))


def total_loss(l_data: float, l_phy: float, lam: float) -> float:
    """Weighted combination of the data and physics terms."""
    if lam < 0.0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    return l_data + lam * l_phy
