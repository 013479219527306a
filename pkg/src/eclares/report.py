"""Figure rendering for mission and comparison outputs.

Figures are rendered to files next to the delimited output so a run directory
is self-contained: clarity-deficit curves, distance-to-charger versus state of
charge, and per-cell deficit maps at the snapshot times.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from eclares.grid import DomainSpec
from eclares.mission import MetricsLog

__all__ = ["render_qd_comparison", "render_soc_vs_dist", "render_deficit_maps"]


def render_qd_comparison(logs: dict, path) -> None:
    """Mean clarity deficit against time for each labeled run."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, log in logs.items():
        ax.plot(log.times, log.q_d, label=label)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("mean clarity deficit")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_soc_vs_dist(logs: dict, path) -> None:
    """Distance to the charging station against state of charge."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, log in logs.items():
        ax.plot(log.soc, log.dist_to_charger, label=label, lw=0.8)
        if log.crashed:
            ax.plot(log.soc[-1], log.dist_to_charger[-1], "rx", ms=10)
    ax.set_xlabel("state of charge")
    ax.set_ylabel("distance to charger [m]")
    ax.invert_xaxis()
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_deficit_maps(log: MetricsLog, spec: DomainSpec, out_dir, label: str) -> None:
    """One heat map per recorded snapshot of the per-cell clarity deficit."""
    nx, ny = spec.shape
    vmax = max((float(d.max()) for _, d in log.snapshots), default=1.0) or 1.0
    for t, deficit in log.snapshots:
        fig, ax = plt.subplots(figsize=(5, 4))
        grid = deficit.reshape(nx, ny).T
        im = ax.imshow(
            grid, origin="lower", vmin=0.0, vmax=vmax,
            extent=(0.0, spec.lengths[0], 0.0, spec.lengths[1]), cmap="viridis")
        ax.set_title(f"{label}: clarity deficit at t = {t:g} s")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        fig.colorbar(im, ax=ax)
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, f"deficit_map_{label}_t{t:g}.png"), dpi=150)
        plt.close(fig)
