"""Trainable forecasters: an MLP and a GRU with hand-written reverse-mode gradients.

The differentiation engine is a fixed-graph backward pass over the two
architectures, not a general tape. Physics expected displacements depend only
on the observed anchor states, so they are constants with respect to the
parameters and only the predicted-displacement side of each residual carries
gradient. They are recomputed batch by batch, every epoch, so the per-epoch
cost of the physics term is honest.

Training is mini-batch Adam with early stopping and plateau learning-rate
reduction, both driven by validation total loss; the returned parameters are
the best-validation snapshot.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import TrainingError
from .geodesy import GeoPoint
from .kinematics import Approx, HorizonMode, expected_displacements
from .losses import PhysicsConfig, PhysicsOrder
from .pipeline import NormStats, SplitDataset, WindowPair

N_FEATURES = 6


class Arch(Enum):
    MLP = "mlp"
    GRU = "gru"


def _mlp_shapes(w_in: int, w_out: int, hidden: tuple[int, ...]) -> list[tuple[str, tuple[int, ...]]]:
    dims = [w_in * N_FEATURES, *hidden, w_out * 2]
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for i in range(len(dims) - 1):
        shapes.append((f"W{i}", (dims[i], dims[i + 1])))
        shapes.append((f"b{i}", (dims[i + 1],)))
    return shapes


def _gru_shapes(w_out: int, hidden: int) -> list[tuple[str, tuple[int, ...]]]:
    h = hidden
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for gate in ("z", "r", "c"):
        shapes += [(f"W{gate}", (N_FEATURES, h)), (f"U{gate}", (h, h)), (f"b{gate}", (h,))]
    shapes += [("Wy", (h, w_out * 2)), ("by", (w_out * 2,))]
    return shapes


@dataclass
class ModelParams:
    """Architecture descriptor plus the flat 64-bit parameter vector."""

    arch: Arch
    w_in: int
    w_out: int
    hidden: tuple[int, ...]
    theta: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        self.theta = np.asarray(self.theta, dtype=np.float64)
        expected = param_count(self.arch, self.w_in, self.w_out, self.hidden)
        if self.theta.shape != (expected,):
            raise ValueError(f"theta has {self.theta.shape} entries, arch needs {expected}")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("theta contains non-finite values")

    def shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        if self.arch is Arch.MLP:
            return _mlp_shapes(self.w_in, self.w_out, self.hidden)
        return _gru_shapes(self.w_out, self.hidden[0])


def param_count(arch: Arch, w_in: int, w_out: int, hidden: tuple[int, ...]) -> int:
    shapes = _mlp_shapes(w_in, w_out, hidden) if arch is Arch.MLP else _gru_shapes(w_out, hidden[0])
    return sum(int(np.prod(s)) for _, s in shapes)


def _normalize_hidden(arch: Arch, hidden: int | tuple[int, ...]) -> tuple[int, ...]:
    if isinstance(hidden, int):
        hidden = (hidden,)
    hidden = tuple(int(h) for h in hidden)
    if any(h < 1 for h in hidden):
        raise ValueError(f"hidden sizes must be >= 1, got {hidden}")
    if arch is Arch.GRU and len(hidden) != 1:
        raise ValueError("the GRU uses a single hidden layer")
    return hidden


def init_params(
    arch: Arch,
    w_in: int,
    w_out: int,
    hidden: int | tuple[int, ...] = 64,
    seed: int = 0,
) -> ModelParams:
    """Glorot-uniform weights, zero biases, deterministic per seed."""
    if w_in < 1 or w_out < 1:
        raise ValueError("w_in and w_out must be >= 1")
    hidden = _normalize_hidden(arch, hidden)
    shapes = _mlp_shapes(w_in, w_out, hidden) if arch is Arch.MLP else _gru_shapes(w_out, hidden[0])
    rng = np.random.default_rng(seed)
    parts = []
    for name, shape in shapes:
        if name.startswith("b"):
            parts.append(np.zeros(shape))
        else:
            bound = math.sqrt(6.0 / (shape[0] + shape[1]))
            parts.append(rng.uniform(-bound, bound, size=shape).ravel())
    return ModelParams(arch, w_in, w_out, hidden, np.concatenate(parts), seed)


def _unpack(params: ModelParams) -> dict[str, np.ndarray]:
    views: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in params.shapes():
        size = int(np.prod(shape))
        views[name] = params.theta[offset : offset + size].reshape(shape)
        offset += size
    return views


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _forward_mlp(views: dict[str, np.ndarray], x: np.ndarray, n_layers: int):
    acts = [x.reshape(x.shape[0], -1)]
    for i in range(n_layers):
        pre = acts[-1] @ views[f"W{i}"] + views[f"b{i}"]
        acts.append(np.maximum(pre, 0.0) if i < n_layers - 1 else pre)
    return acts[-1], acts


def _backward_mlp(views, acts, d_out, n_layers: int) -> dict[str, np.ndarray]:
    grads: dict[str, np.ndarray] = {}
    delta = d_out
    for i in reversed(range(n_layers)):
        grads[f"W{i}"] = acts[i].T @ delta
        grads[f"b{i}"] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ views[f"W{i}"].T) * (acts[i] > 0.0)
    return grads


def _forward_gru(views: dict[str, np.ndarray], x: np.ndarray):
    n, steps, _ = x.shape
    h = np.zeros((n, views["Uz"].shape[0]))
    cache = []
    for t in range(steps):
        xt = x[:, t, :]
        z = _sigmoid(xt @ views["Wz"] + h @ views["Uz"] + views["bz"])
        r = _sigmoid(xt @ views["Wr"] + h @ views["Ur"] + views["br"])
        c = np.tanh(xt @ views["Wc"] + (r * h) @ views["Uc"] + views["bc"])
        h_new = (1.0 - z) * h + z * c
        cache.append((xt, h, z, r, c))
        h = h_new
    out = h @ views["Wy"] + views["by"]
    return out, (cache, h)


def _backward_gru(views, cache_out, d_out) -> dict[str, np.ndarray]:
    cache, h_last = cache_out
    grads = {name: np.zeros_like(v) for name, v in views.items()}
    grads["Wy"] = h_last.T @ d_out
    grads["by"] = d_out.sum(axis=0)
    dh = d_out @ views["Wy"].T
    for xt, h_prev, z, r, c in reversed(cache):
        dz = dh * (c - h_prev)
        dc = dh * z
        dh_prev = dh * (1.0 - z)

        dc_pre = dc * (1.0 - c * c)
        grads["Wc"] += xt.T @ dc_pre
        grads["Uc"] += (r * h_prev).T @ dc_pre
        grads["bc"] += dc_pre.sum(axis=0)
        d_rh = dc_pre @ views["Uc"].T
        dr = d_rh * h_prev
        dh_prev += d_rh * r

        dr_pre = dr * r * (1.0 - r)
        grads["Wr"] += xt.T @ dr_pre
        grads["Ur"] += h_prev.T @ dr_pre
        grads["br"] += dr_pre.sum(axis=0)

        dz_pre = dz * z * (1.0 - z)
        grads["Wz"] += xt.T @ dz_pre
        grads["Uz"] += h_prev.T @ dz_pre
        grads["bz"] += dz_pre.sum(axis=0)

        dh = dh_prev + dr_pre @ views["Ur"].T + dz_pre @ views["Uz"].T
    return grads


def _forward_batch(params: ModelParams, x: np.ndarray):
    views = _unpack(params)
    if params.arch is Arch.MLP:
        out, cache = _forward_mlp(views, x, len(params.hidden) + 1)
    else:
        out, cache = _forward_gru(views, x)
    return out.reshape(x.shape[0], params.w_out, 2), views, cache


def _grads_to_flat(params: ModelParams, grads: dict[str, np.ndarray]) -> np.ndarray:
    return np.concatenate([grads[name].ravel() for name, _ in params.shapes()])


def forward(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Map one normalized input window (w_in, 6) to (w_out, 2) normalized positions."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.w_in, N_FEATURES):
        raise ValueError(f"input shape {x.shape}, expected {(params.w_in, N_FEATURES)}")
    out, _, _ = _forward_batch(params, x[None, :, :])
    return out[0]


@dataclass
class TrainConfig:
    """Optimizer, scheduler, and loss settings for one training run."""

    physics: PhysicsConfig
    stats: NormStats
    arch: Arch = Arch.MLP
    hidden: int | tuple[int, ...] = 64
    lr: float = 0.001
    epochs: int = 50
    batch_size: int = 32
    early_stop_patience: int = 5
    plateau_patience: int = 3
    plateau_factor: float = 0.5
    min_lr: float = 1e-5
    seed: int = 0
    data_loss_normalized: bool = True

    def __post_init__(self) -> None:
        if not 0 <= self.epochs <= 50:
            raise ValueError(f"epochs must be in [0, 50], got {self.epochs}")
        for name in ("lr", "batch_size", "early_stop_patience", "plateau_patience", "min_lr"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.plateau_factor < 1.0:
            raise ValueError("plateau_factor must be in (0, 1)")


@dataclass
class EpochStats:
    epoch: int
    train_data: float
    train_phys: float
    train_total: float
    val_data: float
    val_phys: float
    val_total: float
    lr: float
    seconds: float


def _expected_deltas(windows: list[WindowPair], cfg: TrainConfig, horizon: int) -> np.ndarray:
    """Kinematically expected displacements per window, (N, H, 2) degrees.

    Constants w.r.t. the parameters; recomputed on every call on purpose so
    the physics term costs what it costs.
    """
    scheme = cfg.physics.scheme()
    out = np.empty((len(windows), horizon, 2))
    for i, w in enumerate(windows):
        deltas = expected_displacements(w.state, cfg.physics.dt_s, horizon, scheme, cfg.physics.horizon_mode)
        for j, d in enumerate(deltas):
            out[i, j, 0] = d.dlat
            out[i, j, 1] = d.dlon
    return out


def _loss_terms(
    params: ModelParams,
    windows: list[WindowPair],
    cfg: TrainConfig,
    want_grad: bool,
) -> tuple[float, float, np.ndarray | None]:
    """Data and physics losses for a batch, optionally with the flat gradient."""
    if not windows:
        raise ValueError("empty batch")
    n = len(windows)
    h = params.w_out
    x = np.stack([w.x for w in windows])
    y = np.stack([w.y for w in windows])
    out, views, cache = _forward_batch(params, x)

    scale = np.array([cfg.stats.lat_range, cfg.stats.lon_range])
    err = out - y
    if cfg.data_loss_normalized:
        l_data = float(np.sum(err**2) / n)
        d_out = (2.0 / n) * err
    else:
        err_deg = err * scale
        l_data = float(np.sum(err_deg**2) / n)
        d_out = (2.0 / n) * err_deg * scale

    l_phys = 0.0
    if cfg.physics.order is not PhysicsOrder.NONE:
        out_deg = out * scale + cfg.stats.mins[:2]
        anchors = np.array([[w.anchor.lat, w.anchor.lon] for w in windows])
        d_pred = np.diff(np.concatenate([anchors[:, None, :], out_deg], axis=1), axis=1)
        residuals = (d_pred - _expected_deltas(windows, cfg, h)) / np.array(
            [cfg.physics.lat_range, cfg.physics.lon_range]
        )
        l_phys = float(np.sum(residuals**2) / (n * h))
        if cfg.physics.lam > 0.0:
            d_delta = (2.0 / (n * h)) * residuals / np.array([cfg.physics.lat_range, cfg.physics.lon_range])
            d_out_deg = d_delta.copy()
            d_out_deg[:, :-1, :] -= d_delta[:, 1:, :]
            d_out = d_out + cfg.physics.lam * d_out_deg * scale

    total = l_data + cfg.physics.lam * l_phys
    if not math.isfinite(total):
        raise TrainingError(f"non-finite loss (data={l_data}, physics={l_phys})")

    if not want_grad:
        return l_data, l_phys, None
    d_flat = d_out.reshape(n, -1)
    if params.arch is Arch.MLP:
        grads = _backward_mlp(views, cache, d_flat, len(params.hidden) + 1)
    else:
        grads = _backward_gru(views, cache, d_flat)
    return l_data, l_phys, _grads_to_flat(params, grads)


def loss_and_grad(
    params: ModelParams,
    windows: list[WindowPair],
    cfg: TrainConfig,
) -> tuple[float, np.ndarray]:
    """Total loss and its gradient w.r.t. the flat parameter vector."""
    l_data, l_phys, grad = _loss_terms(params, windows, cfg, want_grad=True)
    return l_data + cfg.physics.lam * l_phys, grad


def loss_parts(params: ModelParams, windows: list[WindowPair], cfg: TrainConfig) -> tuple[float, float, float]:
    """(data, physics, total) losses without gradients."""
    l_data, l_phys, _ = _loss_terms(params, windows, cfg, want_grad=False)
    return l_data, l_phys, l_data + cfg.physics.lam * l_phys


def train(dataset: SplitDataset, cfg: TrainConfig) -> tuple[ModelParams, list[EpochStats]]:
    """Mini-batch Adam with early stopping and ReduceLROnPlateau on validation total loss.

    Returns the best-validation parameter snapshot and the per-epoch history.
    Raises TrainingError (with .history attached) if the loss diverges.
    """
    if not dataset.train or not dataset.val:
        raise ValueError("training needs non-empty train and val splits")
    params = init_params(cfg.arch, dataset.w_in, dataset.w_out, cfg.hidden, cfg.seed)
    history: list[EpochStats] = []
    if cfg.epochs == 0:
        return params, history

    rng = np.random.default_rng(cfg.seed)
    m = np.zeros_like(params.theta)
    v = np.zeros_like(params.theta)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    lr = cfg.lr
    best_val = math.inf
    best_theta = params.theta.copy()
    stall_stop = 0
    stall_plateau = 0

    try:
        for epoch in range(cfg.epochs):
            t0 = time.perf_counter()
            order = rng.permutation(len(dataset.train))
            sums = np.zeros(2)
            seen = 0
            for lo in range(0, len(order), cfg.batch_size):
                batch = [dataset.train[i] for i in order[lo : lo + cfg.batch_size]]
                l_data, l_phys, grad = _loss_terms(params, batch, cfg, want_grad=True)
                step += 1
                m = beta1 * m + (1.0 - beta1) * grad
                v = beta2 * v + (1.0 - beta2) * grad**2
                m_hat = m / (1.0 - beta1**step)
                v_hat = v / (1.0 - beta2**step)
                params.theta -= lr * m_hat / (np.sqrt(v_hat) + eps)
                sums += np.array([l_data, l_phys]) * len(batch)
                seen += len(batch)
            train_data, train_phys = sums / seen

            val_data, val_phys, val_total = loss_parts(params, dataset.val, cfg)
            history.append(
                EpochStats(
                    epoch=epoch,
                    train_data=float(train_data),
                    train_phys=float(train_phys),
                    train_total=float(train_data + cfg.physics.lam * train_phys),
                    val_data=val_data,
                    val_phys=val_phys,
                    val_total=val_total,
                    lr=lr,
                    seconds=time.perf_counter() - t0,
                )
            )

            if val_total < best_val:
                best_val = val_total
                best_theta = params.theta.copy()
                stall_stop = 0
                stall_plateau = 0
            else:
                stall_stop += 1
                stall_plateau += 1
            if stall_plateau >= cfg.plateau_patience and lr > cfg.min_lr:
                lr = max(lr * cfg.plateau_factor, cfg.min_lr)
                stall_plateau = 0
            if stall_stop >= cfg.early_stop_patience:
                break
    except TrainingError as exc:
        exc.history = history
        raise

    params.theta = best_theta
    return params, history


def predict_denorm(params: ModelParams, window: WindowPair, stats: NormStats) -> list[GeoPoint]:
    """Forward pass followed by the inverse min-max map back to degrees."""
    out = stats.denormalize_positions(forward(params, window.x))
    return [GeoPoint(float(lat), float(lon)) for lat, lon in out]


def save_model(path: str | Path, params: ModelParams, stats: NormStats, physics: PhysicsConfig) -> None:
    """Serialize everything needed to reproduce predictions bit-exactly."""
    doc = {
        "arch": params.arch.value,
        "w_in": params.w_in,
        "w_out": params.w_out,
        "hidden": list(params.hidden),
        "seed": params.seed,
        "theta": params.theta.tolist(),
        "norm": stats.to_dict(),
        "physics": {
            "order": physics.order.value,
            "approx": physics.approx.value,
            "lambda": physics.lam,
            "dt_s": physics.dt_s,
            "lat_range": physics.lat_range,
            "lon_range": physics.lon_range,
            "horizon_mode": physics.horizon_mode.value,
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path: str | Path) -> tuple[ModelParams, NormStats, PhysicsConfig]:
    with open(path) as fh:
        doc = json.load(fh)
    params = ModelParams(
        arch=Arch(doc["arch"]),
        w_in=int(doc["w_in"]),
        w_out=int(doc["w_out"]),
        hidden=tuple(doc["hidden"]),
        theta=np.array(doc["theta"], dtype=np.float64),
        seed=int(doc["seed"]),
    )
    stats = NormStats.from_dict(doc["norm"])
    phys = doc["physics"]
    physics = PhysicsConfig(
        order=PhysicsOrder(phys["order"]),
        approx=Approx(phys["approx"]),
        lam=float(phys["lambda"]),
        dt_s=float(phys["dt_s"]),
        lat_range=float(phys["lat_range"]),
        lon_range=float(phys["lon_range"]),
        horizon_mode=HorizonMode(phys["horizon_mode"]),
    )
    return params, stats, physics
