"""Discretized rectangular coverage domain with stochastic per-cell quantities.

Each cell carries a scalar quantity of interest driven by independent Brownian
process noise, a clarity state propagated with the exact closed form, and a
target clarity. A disc-shaped sensor footprint gates which cells are observed
at a given robot position (sensing gain 1 inside the footprint, 0 outside).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from eclares.clarity import ClarityParams, closed_form_field, max_clarity

__all__ = [
    "DomainSpec",
    "CellField",
    "SensorModel",
    "step_environment",
    "sensor_footprint",
    "update_clarity_field",
    "measure",
    "generate_environment",
    "write_field_csv",
]


@dataclass(frozen=True)
class DomainSpec:
    """Rectangular domain [0, L1] x ... x [0, Ls] split into square cells."""

    lengths: tuple
    cell_size: float

    def __post_init__(self):
        if self.cell_size <= 0.0:
            raise ValueError("cell_size must be positive")
        for L in self.lengths:
            if L <= 0.0:
                raise ValueError("domain lengths must be positive")
            n = L / self.cell_size
            if abs(n - round(n)) > 1e-9:
                raise ValueError(f"length {L} is not a multiple of cell size {self.cell_size}")

    @property
    def shape(self) -> tuple:
        """Cells per axis."""
        return tuple(int(round(L / self.cell_size)) for L in self.lengths)

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_area(self) -> float:
        return self.cell_size ** len(self.lengths)

    def cell_centers(self) -> np.ndarray:
        """(num_cells, s) array of cell-center coordinates, C-order over axes."""
        axes = [
            (np.arange(n) + 0.5) * self.cell_size
            for n in self.shape
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass
class SensorModel:
    """Downward-looking sensor projected to a disc of cells around the robot."""

    footprint_radius: float = 0.2

    def __post_init__(self):
        if self.footprint_radius < 0.0:
            raise ValueError("footprint_radius must be >= 0")


@dataclass
class CellField:
    """Per-cell environment truth, noise levels, clarity, and clarity targets."""

    spec: DomainSpec
    values: np.ndarray          # quantity of interest m_c
    process_noise: np.ndarray   # variance rate Q_c >= 0
    clarity: np.ndarray         # q_c in [0, 1]
    target_clarity: np.ndarray  # desired q for each cell, < max attainable
    measurement_noise: float = 1.0
    sensing_gain: float = 1.0
    centers: np.ndarray = field(init=False)

    def __post_init__(self):
        n = self.spec.num_cells
        for name in ("values", "process_noise", "clarity", "target_clarity"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
            setattr(self, name, arr.copy())
        if self.measurement_noise <= 0.0:
            raise ValueError("measurement_noise must be > 0")
        if np.any(self.process_noise < 0.0):
            raise ValueError("process_noise must be >= 0")
        if np.any((self.clarity < 0.0) | (self.clarity > 1.0)):
            raise ValueError("clarity must lie in [0, 1]")
        bad = np.where(self.target_clarity >= self.max_clarity_per_cell())[0]
        if bad.size:
            raise ValueError(
                f"target clarity must stay below the maximum attainable clarity; "
                f"violated at cell(s) {bad.tolist()[:10]}"
            )
        self.centers = self.spec.cell_centers()

    def max_clarity_per_cell(self) -> np.ndarray:
        """Maximum attainable clarity per cell under continuous observation."""
        return np.array([
            max_clarity(ClarityParams(self.sensing_gain, Q, self.measurement_noise))
            for Q in self.process_noise
        ])

    def clarity_params(self, cell: int) -> ClarityParams:
        return ClarityParams(self.sensing_gain, float(self.process_noise[cell]),
                             self.measurement_noise)

    def copy(self) -> "CellField":
        return CellField(
            spec=self.spec,
            values=self.values,
            process_noise=self.process_noise,
            clarity=self.clarity,
            target_clarity=self.target_clarity,
            measurement_noise=self.measurement_noise,
            sensing_gain=self.sensing_gain,
        )


def step_environment(fld: CellField, dt: float, rng: np.random.Generator) -> None:
    """Euler-Maruyama step of the per-cell Brownian quantities (in place).

    Each value receives an independent N(0, Q_c dt) increment; clarity untouched.
    """
    if dt < 0.0:
        raise ValueError("dt must be >= 0")
    if dt == 0.0:
        return
    std = np.sqrt(fld.process_noise * dt)
    fld.values += rng.normal(0.0, 1.0, size=fld.values.shape) * std


def sensor_footprint(position, spec: DomainSpec, sensor: SensorModel,
                     centers: np.ndarray | None = None) -> np.ndarray:
    """Indices of cells whose centers lie within the footprint disc.

    Positions outside the domain are allowed; cells never extend past the
    boundary so far-away positions simply yield an empty set. Pass the
    precomputed cell centers to skip regenerating them in tight loops.
    """
    pos = np.asarray(position, dtype=float)[: len(spec.lengths)]
    if centers is None:
        centers = spec.cell_centers()
    d2 = np.sum((centers - pos) ** 2, axis=1)
    return np.where(d2 <= sensor.footprint_radius ** 2 + 1e-12)[0]


def update_clarity_field(fld: CellField, observed: np.ndarray, dt: float) -> None:
    """Advance every cell's clarity by dt using the exact closed form (in place).

    Observed cells use the full sensing gain, unobserved cells the pure decay
    branch (gain 0). Exactness makes the update independent of step subdivision.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    gain = np.zeros(fld.spec.num_cells)
    gain[np.asarray(observed, dtype=int)] = fld.sensing_gain
    fld.clarity = closed_form_field(
        dt, fld.clarity, gain, fld.process_noise, fld.measurement_noise
    )


def measure(fld: CellField, observed: np.ndarray, rng: np.random.Generator) -> dict:
    """Noisy outputs y_c = m_c + N(0, R) for the observed cells.

    Outputs are for logging; the planner consumes clarity, not raw measurements.
    """
    observed = np.asarray(observed, dtype=int)
    if observed.size == 0:
        return {}
    noise = rng.normal(0.0, np.sqrt(fld.measurement_noise), size=observed.size)
    return {int(c): float(fld.values[c] + noise[i]) for i, c in enumerate(observed)}


def generate_environment(
    spec: DomainSpec,
    rng: np.random.Generator,
    background_noise: float = 0.0,
    patch_noise: float = 0.05,
    patch_count: int = 3,
    patch_radius: float = 0.3,
    measurement_noise: float = 1.0,
    initial_clarity: float = 0.0,
    target_ratio: float = 0.8,
    target_absolute: float | None = None,
    value_scale: float = 1.0,
) -> CellField:
    """Synthetic two-level stochastic environment.

    High-noise circular patches are dropped at seeded random locations on a
    low-noise background; initial quantity values are seeded Gaussian draws.
    Targets default to a fixed fraction of each cell's maximum attainable
    clarity, or a shared absolute level when target_absolute is given.
    """
    centers = spec.cell_centers()
    Q = np.full(spec.num_cells, background_noise, dtype=float)
    for _ in range(patch_count):
        loc = np.array([rng.uniform(0.0, L) for L in spec.lengths])
        inside = np.sum((centers - loc) ** 2, axis=1) <= patch_radius ** 2
        Q[inside] = patch_noise
    values = rng.normal(0.0, value_scale, size=spec.num_cells)

    q_inf = np.array([
        max_clarity(ClarityParams(1.0, q, measurement_noise)) for q in Q
    ])
    if target_absolute is not None:
        targets = np.full(spec.num_cells, float(target_absolute))
        bad = np.where(targets >= q_inf)[0]
        if bad.size:
            raise ValueError(
                f"target clarity {target_absolute} is not attainable at "
                f"cell(s) {bad.tolist()[:10]} (max {q_inf[bad].min():.4f})"
            )
    else:
        targets = target_ratio * q_inf

    return CellField(
        spec=spec,
        values=values,
        process_noise=Q,
        clarity=np.full(spec.num_cells, float(initial_clarity)),
        target_clarity=targets,
        measurement_noise=measurement_noise,
    )


def write_field_csv(fld: CellField, path) -> None:
    """Snapshot of the field: cell_index, x_center, y_center, m, Q, q, q_target."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_index", "x_center", "y_center", "m", "Q", "q", "q_target"])
        for c in range(fld.spec.num_cells):
            writer.writerow([
                c,
                f"{fld.centers[c, 0]:.6f}",
                f"{fld.centers[c, 1]:.6f}",
                f"{fld.values[c]:.9f}",
                f"{fld.process_noise[c]:.9f}",
                f"{fld.clarity[c]:.9f}",
                f"{fld.target_clarity[c]:.9f}",
            ])
