"""Clarity-driven ergodic coverage with an energy-aware return-to-charger filter.

The package is organized around a two-rate mission loop:

* every planning horizon, the per-cell clarity state is turned into a target
  information spatial density and an ergodic trajectory is optimized against it;
* at a faster cadence, an energy-aware filter stitches a short tracking segment
  to a back-to-base segment, rolls it through the full nonlinear quadrotor and
  battery dynamics, and commits it only if the robot provably makes it home.
"""

from eclares.clarity import ClarityParams, clarity_rate, max_clarity, clarity_closed_form, time_to_clarity
from eclares.grid import DomainSpec, CellField, SensorModel
from eclares.tisd import Tisd, gen_tisd, uniform_tisd
from eclares.trajectory import Trajectory

__all__ = [
    "ClarityParams",
    "clarity_rate",
    "max_clarity",
    "clarity_closed_form",
    "time_to_clarity",
    "DomainSpec",
    "CellField",
    "SensorModel",
    "Tisd",
    "gen_tisd",
    "uniform_tisd",
    "Trajectory",
]
