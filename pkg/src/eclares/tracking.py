"""Quadratic tracking control and the back-to-base trajectory solver.

Both problems are finite-horizon quadratic problems on the reduced linear
quadrotor model. The 13-state model linearized about hover is not controllable
(quaternion unit-norm redundancy), so the quaternion block is reduced to a
3-parameter attitude error through the attitude Jacobian, giving a controllable
12-state model. Controls are clamped to the rotor thrust bounds after the
unconstrained solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from eclares.quadrotor import (
    H_MAT,
    QuadrotorParams,
    SystemState,
    hover_control,
    quadrotor_jacobians,
    quat_left,
    quat_normalize,
)
from eclares.trajectory import Trajectory

__all__ = [
    "TrackingConfig",
    "B2bConfig",
    "linearize",
    "TrackingController",
    "B2bPlanner",
    "solve_b2b",
]


@dataclass(frozen=True)
class TrackingConfig:
    """Weights and horizon of the reference-tracking quadratic problem."""

    horizon: float = 2.0
    dt: float = 0.05
    position_weight: float = 10.0
    attitude_weight: float = 1.0
    velocity_weight: float = 1.0
    omega_weight: float = 0.1
    control_weight: float = 0.5
    max_rotor_thrust: float = 4.905

    def __post_init__(self):
        if self.horizon <= 0.0 or self.dt <= 0.0:
            raise ValueError("horizon and dt must be positive")
        if self.max_rotor_thrust <= 0.0:
            raise ValueError("max_rotor_thrust must be positive")
        n = self.horizon / self.dt
        if abs(n - round(n)) > 1e-9:
            raise ValueError("horizon must be an integer multiple of dt")
        for name in ("position_weight", "attitude_weight", "velocity_weight",
                     "omega_weight", "control_weight"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def num_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def state_weight(self) -> np.ndarray:
        return np.diag(
            [self.position_weight] * 3 + [self.attitude_weight] * 3
            + [self.velocity_weight] * 3 + [self.omega_weight] * 3
        )

    @property
    def control_weight_matrix(self) -> np.ndarray:
        return self.control_weight * np.eye(4)


@dataclass(frozen=True)
class B2bConfig:
    """Back-to-base horizon, charger state, and arrival tolerances."""

    horizon: float = 5.0
    charger_position: tuple = (0.0, 0.0, 1.0)
    arrival_pos_tol: float = 0.3
    arrival_vel_tol: float = 0.3
    terminal_weight_scale: float = 50.0

    def charger_state(self) -> np.ndarray:
        """Full quadrotor state: hover at the charger position."""
        x = np.zeros(13)
        x[0:3] = self.charger_position
        x[3] = 1.0
        return x


def attitude_jacobian(q) -> np.ndarray:
    """4x3 map from the 3-parameter attitude error to quaternion increments."""
    return quat_left(q) @ H_MAT


def reduction_matrix(q) -> np.ndarray:
    """13 -> 12 state reduction evaluated at attitude q."""
    E = np.zeros((13, 12))
    E[0:3, 0:3] = np.eye(3)
    E[3:7, 3:6] = attitude_jacobian(q)
    E[7:10, 6:9] = np.eye(3)
    E[10:13, 9:12] = np.eye(3)
    return E


def linearize(x_eq, u_eq, params: QuadrotorParams):
    """Reduced controllable error-state model (A, B) about an equilibrium."""
    A_full, B_full = quadrotor_jacobians(x_eq, u_eq, params)
    E = reduction_matrix(np.asarray(x_eq, dtype=float)[3:7])
    A = E.T @ A_full @ E
    B = E.T @ B_full
    return A, B


def _discretize(A, B, dt):
    """Exact zero-order-hold discretization via the augmented matrix exponential."""
    n, m = B.shape
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A
    M[:n, n:] = B
    Md = expm(M * dt)
    return Md[:n, :n], Md[:n, n:]


def reduce_state(x13) -> np.ndarray:
    """12-dim coordinates [r, attitude error, v, omega]; attitude error is the
    vector part of the quaternion scaled by 1/scalar part (Rodrigues form)."""
    x13 = np.asarray(x13, dtype=float)
    q = x13[3:7]
    phi = q[1:4] / q[0]
    return np.concatenate([x13[0:3], phi, x13[7:10], x13[10:13]])


def reduce_states(xs) -> np.ndarray:
    """Vectorized reduce_state over an (n, 13) batch."""
    xs = np.asarray(xs, dtype=float)
    phi = xs[:, 4:7] / xs[:, 3:4]
    return np.hstack([xs[:, 0:3], phi, xs[:, 7:10], xs[:, 10:13]])


def expand_state(xi) -> np.ndarray:
    """Inverse of reduce_state (attitude from the Rodrigues parameter)."""
    xi = np.asarray(xi, dtype=float)
    q = quat_normalize(np.concatenate([[1.0], xi[3:6]]))
    return np.concatenate([xi[0:3], q, xi[6:9], xi[9:12]])


def _riccati_sequence(A, B, Q, R, Qf, n_steps):
    """Backward Riccati pass; returns per-step gains and affine-pass operators."""
    P = Qf.copy()
    gains, closed_T, feed = [], [], []
    for _ in range(n_steps):
        Hm = R + B.T @ P @ B
        K = np.linalg.solve(Hm, B.T @ P @ A)
        gains.append(K)
        closed_T.append((A - B @ K).T)
        feed.append(np.linalg.solve(Hm, B.T))
        P = Q + A.T @ P @ (A - B @ K)
    gains.reverse()
    closed_T.reverse()
    feed.reverse()
    return gains, closed_T, feed


def _affine_pass(closed_T, Q, Qf, refs):
    """Linear cost-to-go terms p_k for a given reference sequence."""
    n_steps = len(closed_T)
    p = [None] * (n_steps + 1)
    p[n_steps] = -Qf @ refs[n_steps]
    for k in range(n_steps - 1, -1, -1):
        p[k] = -Q @ refs[k] + closed_T[k] @ p[k + 1]
    return p


class TrackingController:
    """Receding-horizon quadratic tracker about the hover equilibrium.

    The Riccati gain sequence depends only on the model and weights and is
    precomputed; each call performs the reference-dependent affine backward
    pass and returns the first control of the plan plus hover feedforward.
    """

    def __init__(self, params: QuadrotorParams, cfg: TrackingConfig):
        self.params = params
        self.cfg = cfg
        self.u_hover = hover_control(params)
        x_eq = np.zeros(13)
        x_eq[3] = 1.0
        A, B = linearize(x_eq, self.u_hover, params)
        self.A_d, self.B_d = _discretize(A, B, cfg.dt)
        self.Q = cfg.state_weight
        self.R = cfg.control_weight_matrix
        self.gains, self.closed_T, self.feed = _riccati_sequence(
            self.A_d, self.B_d, self.Q, self.R, self.Q, cfg.num_steps)
        # the affine pass is linear in the reference window, so the whole
        # reference-to-feedforward map collapses into fixed matrices:
        # u = u_hover - K_0 xi - sum_j F_j ref_j with F_j = feed_0 W_j
        n = cfg.num_steps
        W = np.empty((n, 12, 12))
        prod = np.eye(12)
        for j in range(n):
            W[j] = prod @ (-self.Q)
            if j + 1 < n:
                prod = prod @ self.closed_T[j + 1]
        self.F = np.einsum("ab,jbc->jac", self.feed[0], W)
        self.saturated = False

    def track_step(self, chi: SystemState | np.ndarray, ref_window: np.ndarray) -> np.ndarray:
        """Control for the current state given a (num_steps+1, 13) reference window."""
        x13 = chi.robot if isinstance(chi, SystemState) else np.asarray(chi, dtype=float)
        n = self.cfg.num_steps
        if ref_window.shape[0] < n + 1:
            raise ValueError(
                f"reference window must cover the full horizon "
                f"({n + 1} samples, got {ref_window.shape[0]})")
        xi = reduce_state(x13)
        refs = reduce_states(ref_window[1: n + 1])
        du = -self.gains[0] @ xi - np.einsum("jac,jc->a", self.F, refs)
        u = self.u_hover + du
        clipped = np.clip(u, 0.0, self.cfg.max_rotor_thrust)
        self.saturated = bool(np.any(clipped != u))
        return clipped


class B2bPlanner:
    """Precomputed optimal return-to-charger policy on the reduced linear model.

    The charger state is fixed, so the whole affine LQR policy (gains and
    feedforward) is computed once; planning from a new start state is a single
    forward rollout of the linear model.
    """

    def __init__(self, params: QuadrotorParams, tracking: TrackingConfig, cfg: B2bConfig):
        self.params = params
        self.tracking = tracking
        self.cfg = cfg
        self.u_hover = hover_control(params)
        x_eq = np.zeros(13)
        x_eq[3] = 1.0
        A, B = linearize(x_eq, self.u_hover, params)
        self.A_d, self.B_d = _discretize(A, B, tracking.dt)
        n_b = int(round(cfg.horizon / tracking.dt))
        if abs(cfg.horizon / tracking.dt - n_b) > 1e-9:
            raise ValueError("b2b horizon must be an integer multiple of the tracking dt")
        self.n_steps = n_b
        Q = tracking.state_weight
        R = tracking.control_weight_matrix
        Qf = cfg.terminal_weight_scale * Q
        self.gains, closed_T, self.feed = _riccati_sequence(
            self.A_d, self.B_d, Q, R, Qf, n_b)
        xi_c = reduce_state(cfg.charger_state())
        refs = [xi_c] * (n_b + 1)
        self.p = _affine_pass(closed_T, Q, Qf, refs)

    def solve(self, x_start, t0: float = 0.0) -> Trajectory:
        """Back-to-base trajectory of duration T_B from the given robot state."""
        x_start = np.asarray(x_start, dtype=float)
        if not np.all(np.isfinite(x_start)):
            raise ValueError("b2b start state must be finite")
        xi = reduce_state(x_start)
        states = np.empty((self.n_steps + 1, 13))
        controls = np.empty((self.n_steps, 4))
        states[0] = x_start
        for k in range(self.n_steps):
            du = -self.gains[k] @ xi - self.feed[k] @ self.p[k + 1]
            u = np.clip(self.u_hover + du, 0.0, self.tracking.max_rotor_thrust)
            controls[k] = u
            xi = self.A_d @ xi + self.B_d @ (u - self.u_hover)
            states[k + 1] = expand_state(xi)
        return Trajectory(t0=t0, dt=self.tracking.dt, states=states, controls=controls)


def solve_b2b(x_start, params: QuadrotorParams, tracking: TrackingConfig,
              cfg: B2bConfig, t0: float = 0.0) -> Trajectory:
    """One-shot back-to-base solve (builds the policy and rolls it out)."""
    return B2bPlanner(params, tracking, cfg).solve(x_start, t0=t0)
