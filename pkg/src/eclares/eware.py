"""Energy-aware trajectory filter: candidate construction, validation, commit.

A candidate trajectory tracks the current exploration reference for a short
horizon and then follows a back-to-base segment to the charger. It is built by
a single rollout of the full nonlinear quadrotor + battery system under the
tracking policy, so it is continuous at the switch by construction. A candidate
is committed only if the state of charge stays above the reserve margin at
every sample and the terminal state lands inside the charger tolerance ball;
otherwise the previously committed trajectory stays active.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from eclares.quadrotor import BatteryParams, QuadrotorParams, SystemState, lift_planar_state, step_system
from eclares.tracking import B2bConfig, B2bPlanner, TrackingConfig, TrackingController
from eclares.trajectory import Trajectory

__all__ = [
    "CandidateTrajectory",
    "CommittedTrajectory",
    "EwareConfig",
    "EwareFilter",
    "validate_candidate",
    "commit",
]


@dataclass(frozen=True)
class EwareConfig:
    """Cadence and validation margin of the energy-aware filter."""

    period: float = 2.0           # seconds between filter iterations
    explore_horizon: float = 2.0  # tracking segment length before switching to b2b
    soc_reserve: float = 0.005    # margin above empty required at every sample

    def __post_init__(self):
        if self.period <= 0.0 or self.explore_horizon <= 0.0:
            raise ValueError("period and explore_horizon must be positive")
        if not (0.0 <= self.soc_reserve < 1.0):
            raise ValueError("soc_reserve must lie in [0, 1)")


@dataclass
class CandidateTrajectory:
    """Single rollout of the stitched explore + back-to-base reference."""

    t0: float
    dt: float
    switch_time: float            # t0 + explore horizon
    robot_states: np.ndarray      # (N+1, 13)
    socs: np.ndarray              # (N+1,)
    controls: np.ndarray          # (N, 4)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.robot_states.shape[0] - 1)

    def state_at(self, t: float) -> SystemState:
        i = int(round((t - self.t0) / self.dt))
        i = max(0, min(i, self.robot_states.shape[0] - 1))
        return SystemState(self.robot_states[i], float(self.socs[i]))

    def reference_window(self, t: float, n: int) -> np.ndarray:
        """(n+1, 13) tracking window starting at t; holds the last state."""
        i0 = int(round((t - self.t0) / self.dt))
        idx = np.clip(np.arange(i0, i0 + n + 1), 0, self.robot_states.shape[0] - 1)
        return self.robot_states[idx]

    def as_trajectory(self) -> Trajectory:
        states = np.hstack([self.robot_states, self.socs[:, None]])
        return Trajectory(t0=self.t0, dt=self.dt, states=states, controls=self.controls)


@dataclass
class CommittedTrajectory:
    """Last validated candidate plus the time it was committed."""

    candidate: CandidateTrajectory
    commit_time: float


@dataclass
class AuditRecord:
    """One filter iteration: verdict, margins, and wall-clock cost."""

    tau: float
    valid: bool
    reason: str
    min_soc: float
    terminal_distance: float
    elapsed_ms: float


class EwareFilter:
    """Builds, validates, and commits candidate trajectories."""

    def __init__(self, quad: QuadrotorParams, batt: BatteryParams,
                 tracking_cfg: TrackingConfig, b2b_cfg: B2bConfig,
                 cfg: EwareConfig, altitude: float = 1.0):
        self.quad = quad
        self.batt = batt
        self.cfg = cfg
        self.b2b_cfg = b2b_cfg
        self.altitude = altitude
        self.tracker = TrackingController(quad, tracking_cfg)
        self.b2b = B2bPlanner(quad, tracking_cfg, b2b_cfg)
        self.dt = tracking_cfg.dt
        self.n_track = tracking_cfg.num_steps
        self.n_explore = int(round(cfg.explore_horizon / self.dt))
        self.audit: list[AuditRecord] = []

    def build_candidate(self, chi: SystemState, ergodic: Trajectory, tau: float) -> CandidateTrajectory:
        """Roll the nonlinear system along the stitched reference from time tau.

        The back-to-base segment is anchored at the exploration reference state
        at the switch time, not at the rolled state, so the b2b plan matches
        what the ergodic plan promised to deliver there.
        """
        if tau + self.cfg.explore_horizon > ergodic.t_end + 1e-9:
            raise ValueError(
                f"reference underrun: exploration reference ends at {ergodic.t_end:.3f}s "
                f"but the candidate needs coverage until {tau + self.cfg.explore_horizon:.3f}s")

        explore_refs = np.stack([
            lift_planar_state(ergodic.sample(tau + i * self.dt), self.altitude)
            for i in range(self.n_explore + 1)
        ])
        b2b_traj = self.b2b.solve(explore_refs[-1], t0=tau + self.cfg.explore_horizon)
        refs = np.vstack([explore_refs[:-1], b2b_traj.states])

        n_total = refs.shape[0] - 1
        robot_states = np.empty((n_total + 1, 13))
        socs = np.empty(n_total + 1)
        controls = np.empty((n_total, 4))
        state = chi.copy()
        robot_states[0] = state.robot
        socs[0] = state.soc
        last = refs[-1]
        for i in range(n_total):
            hi = i + self.n_track + 1
            if hi <= refs.shape[0]:
                window = refs[i:hi]
            else:
                window = np.vstack([refs[i:], np.repeat(last[None, :], hi - refs.shape[0], axis=0)])
            u = self.tracker.track_step(state, window)
            state = step_system(state, u, self.dt, self.quad, self.batt)
            controls[i] = u
            robot_states[i + 1] = state.robot
            socs[i + 1] = state.soc
        return CandidateTrajectory(
            t0=tau, dt=self.dt, switch_time=tau + self.cfg.explore_horizon,
            robot_states=robot_states, socs=socs, controls=controls)

    def hold_at_charger(self, chi: SystemState, tau: float) -> CandidateTrajectory:
        """Initial committed trajectory: track the charger state the whole way."""
        charger = self.b2b_cfg.charger_state()
        hold = Trajectory(
            t0=tau, dt=self.cfg.explore_horizon,
            states=np.stack([charger[[0, 1, 7, 8]], charger[[0, 1, 7, 8]]]),
            controls=np.zeros((1, 2)))
        return self.build_candidate(chi, hold, tau)

    def step(self, chi: SystemState, ergodic: Trajectory, tau: float,
             previous: CommittedTrajectory) -> CommittedTrajectory:
        """One filter iteration: build, validate, commit (with audit logging)."""
        start = time.perf_counter()
        cand = self.build_candidate(chi, ergodic, tau)
        valid, reason = validate_candidate(cand, self.b2b_cfg, self.cfg.soc_reserve)
        elapsed_ms = (time.perf_counter() - start) * 1e3
        self.audit.append(AuditRecord(
            tau=tau, valid=valid, reason=reason,
            min_soc=float(cand.socs.min()),
            terminal_distance=float(np.linalg.norm(
                cand.robot_states[-1, 0:3] - np.asarray(self.b2b_cfg.charger_position))),
            elapsed_ms=elapsed_ms))
        return commit(valid, cand, previous, tau)


def validate_candidate(cand: CandidateTrajectory, b2b_cfg: B2bConfig,
                       soc_reserve: float) -> tuple[bool, str]:
    """Energy and arrival check; the reason names the first violated condition."""
    if np.any(cand.socs < soc_reserve):
        return False, "energy"
    charger = np.asarray(b2b_cfg.charger_position)
    terminal = cand.robot_states[-1]
    if np.linalg.norm(terminal[0:3] - charger) > b2b_cfg.arrival_pos_tol:
        return False, "arrival"
    if np.linalg.norm(terminal[7:10]) > b2b_cfg.arrival_vel_tol:
        return False, "arrival"
    return True, "ok"


def commit(valid: bool, cand: CandidateTrajectory,
           previous: CommittedTrajectory, now: float) -> CommittedTrajectory:
    """Replace the committed trajectory only when the candidate is valid."""
    if valid:
        return CommittedTrajectory(candidate=cand, commit_time=now)
    return previous
