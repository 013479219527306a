"""Uniformly sampled timed state/control sequences shared by all planners."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["Trajectory", "write_trajectory_csv"]


@dataclass
class Trajectory:
    """States sampled at t0 + i*dt; controls are zero-order-held between samples."""

    t0: float
    dt: float
    states: np.ndarray    # (N+1, state_dim)
    controls: np.ndarray  # (N, control_dim)

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.controls = np.asarray(self.controls, dtype=float)
        if self.controls.size:
            self.controls = np.atleast_2d(self.controls)
        else:
            self.controls = self.controls.reshape(0, 0)
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")
        if self.controls.shape[0] not in (0, self.states.shape[0] - 1):
            raise ValueError(
                f"controls length {self.controls.shape[0]} must be one less than "
                f"states length {self.states.shape[0]}"
            )

    @property
    def num_steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def t_end(self) -> float:
        return self.t0 + self.num_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.states.shape[0])

    def sample(self, t: float) -> np.ndarray:
        """State at time t, linearly interpolated; held constant beyond the ends."""
        s = (t - self.t0) / self.dt
        if s <= 0.0:
            return self.states[0].copy()
        if s >= self.num_steps:
            return self.states[-1].copy()
        i = int(np.floor(s))
        frac = s - i
        return (1.0 - frac) * self.states[i] + frac * self.states[i + 1]

    def window(self, t_start: float, n: int, dt: float) -> np.ndarray:
        """(n+1, state_dim) reference window starting at t_start with step dt."""
        return np.stack([self.sample(t_start + i * dt) for i in range(n + 1)])


def write_trajectory_csv(traj: Trajectory, path, state_names=None, control_names=None) -> None:
    ns = traj.states.shape[1]
    nu = traj.controls.shape[1] if traj.controls.size else 0
    state_names = state_names or [f"x{i}" for i in range(ns)]
    control_names = control_names or [f"u{i}" for i in range(nu)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *state_names, *control_names])
        for i, t in enumerate(traj.times):
            row = [f"{t:.6f}"] + [f"{v:.9f}" for v in traj.states[i]]
            if nu and i < traj.controls.shape[0]:
                row += [f"{v:.9f}" for v in traj.controls[i]]
            else:
                row += [""] * nu
            writer.writerow(row)
