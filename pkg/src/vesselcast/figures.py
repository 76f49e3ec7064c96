"""Matplotlib figure rendering for the CLI report paths.

Figures are written next to the delimited outputs; every helper takes a
target path and never opens an interactive window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_history_figure(history, path: str | Path) -> None:
    """Training and validation loss curves plus the learning-rate schedule."""
    epochs = [h.epoch for h in history]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    axes[0].plot(epochs, [h.train_data for h in history], label="train")
    axes[0].plot(epochs, [h.val_data for h in history], label="val")
    axes[0].set_title("data loss")
    axes[1].plot(epochs, [h.train_phys for h in history], label="train")
    axes[1].plot(epochs, [h.val_phys for h in history], label="val")
    axes[1].set_title("physics loss")
    axes[2].plot(epochs, [h.lr for h in history], color="tab:green")
    axes[2].set_title("learning rate")
    for ax in axes:
        ax.set_xlabel("epoch")
        ax.grid(alpha=0.3)
    for ax, series in zip(axes[:2], ([h.train_data for h in history], [h.train_phys for h in history])):
        if any(v > 0 for v in series):
            ax.set_yscale("log")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ade_figure(ades_m: np.ndarray, path: str | Path, title: str = "per-window ADE") -> None:
    """Histogram of per-window average displacement errors."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(np.asarray(ades_m), bins=min(40, max(5, len(ades_m) // 5)), color="tab:blue", alpha=0.8)
    ax.set_xlabel("ADE [m]")
    ax.set_ylabel("windows")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_track_figure(observed, predicted, path: str | Path) -> None:
    """Observed vs predicted track in lon/lat axes."""
    fig, ax = plt.subplots(figsize=(5.5, 5))
    if observed:
        ax.plot([p.lon for p in observed], [p.lat for p in observed], "-", label="observed", color="tab:blue")
    if predicted:
        ax.plot(
            [p.lon for p in predicted],
            [p.lat for p in predicted],
            "--",
            label="predicted",
            color="tab:red",
        )
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    ax.legend()
    ax.grid(alpha=0.3)
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
