"""Target information spatial density built from the clarity state of the grid.

Each cell's raw weight is the observation time the robot would need to raise
that cell's clarity from its current level to the (clipped) target level; the
weights are then normalized into a density over cells. Cells already at or
above target contribute nothing. A uniform density is provided as the baseline
used throughout the ergodic-search literature.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from eclares.clarity import ClarityParams, max_clarity, time_to_clarity
from eclares.grid import CellField, DomainSpec

__all__ = ["Tisd", "gen_tisd", "uniform_tisd", "write_tisd_csv"]


@dataclass(frozen=True)
class Tisd:
    """Normalized nonnegative density over the cells of a domain."""

    spec: DomainSpec
    density: np.ndarray
    targets_satisfied: bool = False

    def __post_init__(self):
        dens = np.asarray(self.density, dtype=float)
        if dens.shape != (self.spec.num_cells,):
            raise ValueError(f"density must have shape ({self.spec.num_cells},)")
        if np.any(dens < 0.0):
            raise ValueError("density must be nonnegative")
        total = dens.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"density must sum to 1, got {total}")
        object.__setattr__(self, "density", dens)


def gen_tisd(fld: CellField, epsilon: float = 0.05) -> Tisd:
    """Build the target density from per-cell clarity deficits.

    Per cell the target is clipped to stay epsilon below the maximum attainable
    clarity, then the raw weight is the time-to-clarity from the current level
    to the clipped target. If every cell is already at target the raw weights
    all vanish; the density falls back to uniform with targets_satisfied set.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be > 0")
    n = fld.spec.num_cells
    raw = np.zeros(n)
    for c in range(n):
        params = fld.clarity_params(c)
        q_inf = max_clarity(params)
        target = min(fld.target_clarity[c], q_inf - epsilon)
        if target <= 0.0:
            continue
        raw[c] = time_to_clarity(float(fld.clarity[c]), target, params)
    total = raw.sum()
    if total <= 0.0:
        uni = uniform_tisd(fld.spec)
        return Tisd(fld.spec, uni.density, targets_satisfied=True)
    return Tisd(fld.spec, raw / total)


def uniform_tisd(spec: DomainSpec) -> Tisd:
    """Equal density on every cell."""
    n = spec.num_cells
    return Tisd(spec, np.full(n, 1.0 / n))


def write_tisd_csv(tisd: Tisd, path) -> None:
    centers = tisd.spec.cell_centers()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_index", "x_center", "y_center", "phi"])
        for c in range(tisd.spec.num_cells):
            writer.writerow([
                c, f"{centers[c, 0]:.6f}", f"{centers[c, 1]:.6f}",
                f"{tisd.density[c]:.12f}",
            ])
