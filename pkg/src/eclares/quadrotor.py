"""Nonlinear quadrotor rigid-body dynamics, battery discharge, and integrators.

State layout (13 components): position r (3), attitude quaternion q (4, scalar
first, unit norm), world-frame linear velocity v (3), body-frame angular
velocity omega (3). Controls are the four individual rotor thrusts in newtons,
mapped to total lift and body torques through a standard X-configuration
allocation. The battery state of charge drains at a rate proportional to the
squared control magnitude (linear class-K discharge law).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "QuadrotorParams",
    "BatteryParams",
    "SystemState",
    "hat",
    "quat_left",
    "quat_normalize",
    "quadrotor_dynamics",
    "quadrotor_jacobians",
    "battery_rate",
    "rk4_step",
    "step_system",
    "double_integrator_dynamics",
    "lift_planar_state",
    "hover_control",
]

# 4x3 map embedding a 3-vector as a quaternion with zero scalar part
H_MAT = np.vstack([np.zeros((1, 3)), np.eye(3)])

GRAVITY = 9.81


def hat(x) -> np.ndarray:
    """Skew-symmetric matrix: hat(x) @ y == cross(x, y)."""
    x = np.asarray(x, dtype=float)
    return np.array([
        [0.0, -x[2], x[1]],
        [x[2], 0.0, -x[0]],
        [-x[1], x[0], 0.0],
    ])


def quat_left(q) -> np.ndarray:
    """Left-multiplication matrix: quat_left(q) @ p == Hamilton product q * p."""
    q = np.asarray(q, dtype=float)
    qs, qv = q[0], q[1:]
    out = np.empty((4, 4))
    out[0, 0] = qs
    out[0, 1:] = -qv
    out[1:, 0] = qv
    out[1:, 1:] = qs * np.eye(3) + hat(qv)
    return out


def quat_right(p) -> np.ndarray:
    """Right-multiplication matrix: quat_right(p) @ q == Hamilton product q * p."""
    p = np.asarray(p, dtype=float)
    ps, pv = p[0], p[1:]
    out = np.empty((4, 4))
    out[0, 0] = ps
    out[0, 1:] = -pv
    out[1:, 0] = pv
    out[1:, 1:] = ps * np.eye(3) - hat(pv)
    return out


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q)


def quat_rotate(q, a) -> np.ndarray:
    """Rotate vector a by the unit quaternion q."""
    q = np.asarray(q, dtype=float)
    a = np.asarray(a, dtype=float)
    qs, qv = q[0], q[1:]
    return (qs * qs - qv @ qv) * a + 2.0 * (qv @ a) * qv + 2.0 * qs * np.cross(qv, a)


@dataclass(frozen=True)
class QuadrotorParams:
    """Rigid-body and rotor-geometry constants."""

    mass: float = 0.5
    inertia_diag: tuple = (0.0023, 0.0023, 0.004)
    arm_length: float = 0.17
    yaw_torque_coeff: float = 0.016  # Nm of yaw torque per N of rotor thrust
    gravity: float = GRAVITY

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if any(j <= 0.0 for j in self.inertia_diag):
            raise ValueError("inertia must be positive-definite")

    @cached_property
    def inertia(self) -> np.ndarray:
        return np.diag(self.inertia_diag)

    @cached_property
    def inertia_inv(self) -> np.ndarray:
        return np.diag(1.0 / np.asarray(self.inertia_diag))

    @cached_property
    def torque_allocation(self) -> np.ndarray:
        """3x4 map from rotor thrusts to body torques (X configuration).

        Rotors sit at (+-d, +-d) with d = arm_length / sqrt(2), alternating
        spin directions, numbered 1:(d,d), 2:(-d,d), 3:(-d,-d), 4:(d,-d).
        """
        d = self.arm_length / np.sqrt(2.0)
        kappa = self.yaw_torque_coeff
        return np.array([
            [d, d, -d, -d],
            [-d, d, d, -d],
            [kappa, -kappa, kappa, -kappa],
        ])


@dataclass(frozen=True)
class BatteryParams:
    """Discharge law de/dt = -eta / capacity * gain * |u|^2."""

    capacity: float = 1.0
    efficiency: float = 1.0
    discharge_gain: float = 0.00185

    def __post_init__(self):
        if self.capacity <= 0.0 or not (0.0 < self.efficiency <= 1.0) or self.discharge_gain <= 0.0:
            raise ValueError("battery parameters must be positive (efficiency in (0, 1])")


@dataclass
class SystemState:
    """Robot state plus battery state of charge."""

    robot: np.ndarray
    soc: float

    def __post_init__(self):
        self.robot = np.asarray(self.robot, dtype=float).copy()
        if not (0.0 <= self.soc <= 1.0):
            raise ValueError(f"state of charge must lie in [0, 1], got {self.soc}")

    @property
    def position(self) -> np.ndarray:
        return self.robot[0:3]

    @property
    def velocity(self) -> np.ndarray:
        return self.robot[7:10]

    def copy(self) -> "SystemState":
        return SystemState(self.robot, self.soc)


def hover_control(p: QuadrotorParams) -> np.ndarray:
    """Rotor thrusts balancing gravity with zero torque."""
    return np.full(4, p.mass * p.gravity / 4.0)


def quadrotor_dynamics(x, u, p: QuadrotorParams) -> np.ndarray:
    """13-state rigid-body derivative under rotor thrusts u.

    Scalar-expanded hot path: same general (non-unit-safe) quaternion rotation
    and Hamilton product formulas as quat_rotate / quat_left, written out to
    avoid small-array overhead inside RK4 stage evaluations.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    qs, qx, qy, qz = x[3], x[4], x[5], x[6]
    wx, wy, wz = x[10], x[11], x[12]

    thrust = u[0] + u[1] + u[2] + u[3]
    tau = p.torque_allocation @ u
    jx, jy, jz = p.inertia_diag
    inv_m = 1.0 / p.mass

    dx = np.empty(13)
    dx[0:3] = x[7:10]
    dx[3] = 0.5 * (-qx * wx - qy * wy - qz * wz)
    dx[4] = 0.5 * (qs * wx + qy * wz - qz * wy)
    dx[5] = 0.5 * (qs * wy + qz * wx - qx * wz)
    dx[6] = 0.5 * (qs * wz + qx * wy - qy * wx)
    dx[7] = 2.0 * thrust * (qx * qz + qs * qy) * inv_m
    dx[8] = 2.0 * thrust * (qy * qz - qs * qx) * inv_m
    dx[9] = thrust * (qs * qs - qx * qx - qy * qy + qz * qz) * inv_m - p.gravity
    dx[10] = (tau[0] - (jz - jy) * wy * wz) / jx
    dx[11] = (tau[1] - (jx - jz) * wz * wx) / jy
    dx[12] = (tau[2] - (jy - jx) * wx * wy) / jz
    return dx


def _rotation_jacobian_q(q, a) -> np.ndarray:
    """3x4 Jacobian of R(q) a with respect to the quaternion components."""
    q = np.asarray(q, dtype=float)
    a = np.asarray(a, dtype=float)
    qs, qv = q[0], q[1:]
    col_s = 2.0 * (qs * a + np.cross(qv, a))
    block_v = 2.0 * ((qv @ a) * np.eye(3) + np.outer(qv, a) - np.outer(a, qv) - qs * hat(a))
    return np.hstack([col_s[:, None], block_v])


def quadrotor_jacobians(x, u, p: QuadrotorParams):
    """Analytic Jacobians (A, B) of quadrotor_dynamics at (x, u)."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    q = x[3:7]
    omega = x[10:13]
    thrust = float(np.sum(u))
    J = p.inertia

    A = np.zeros((13, 13))
    A[0:3, 7:10] = np.eye(3)
    A[3:7, 3:7] = 0.5 * quat_right(H_MAT @ omega)
    A[3:7, 10:13] = 0.5 * quat_left(q) @ H_MAT
    A[7:10, 3:7] = _rotation_jacobian_q(q, np.array([0.0, 0.0, thrust])) / p.mass
    A[10:13, 10:13] = p.inertia_inv @ (hat(J @ omega) - hat(omega) @ J)

    B = np.zeros((13, 4))
    B[7:10, :] = np.outer(quat_rotate(q, np.array([0.0, 0.0, 1.0])), np.ones(4)) / p.mass
    B[10:13, :] = p.inertia_inv @ p.torque_allocation
    return A, B


def battery_rate(e: float, u, p: BatteryParams) -> float:
    """State-of-charge derivative; never positive while flying."""
    if not (0.0 <= e <= 1.0):
        raise ValueError("state of charge must lie in [0, 1]")
    u = np.asarray(u, dtype=float)
    return -p.efficiency / p.capacity * p.discharge_gain * float(u @ u)


def rk4_step(deriv, x, u, dt: float) -> np.ndarray:
    """Classical RK4 with zero-order-hold control."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(deriv(x, u))
    k2 = np.asarray(deriv(x + 0.5 * dt * k1, u))
    k3 = np.asarray(deriv(x + 0.5 * dt * k2, u))
    k4 = np.asarray(deriv(x + dt * k3, u))
    if not np.all(np.isfinite(k1)) or not np.all(np.isfinite(k4)):
        raise FloatingPointError("non-finite derivative during RK4 step")
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_system(chi: SystemState, u, dt: float, quad: QuadrotorParams,
                batt: BatteryParams) -> SystemState:
    """RK4 step of the coupled robot + battery system.

    The quaternion block is renormalized after the step; the state of charge
    is clamped at zero (depleted battery, never negative).
    """
    u_arr = np.asarray(u, dtype=float)
    # zero-order-hold control makes the discharge rate constant over the step
    soc_rate = -batt.efficiency / batt.capacity * batt.discharge_gain * float(u_arr @ u_arr)

    def deriv(z, uu):
        dz = np.empty(14)
        dz[:13] = quadrotor_dynamics(z[:13], uu, quad)
        dz[13] = soc_rate
        return dz

    z = np.concatenate([chi.robot, [chi.soc]])
    z_next = rk4_step(deriv, z, u, dt)
    z_next[3:7] = quat_normalize(z_next[3:7])
    return SystemState(z_next[:13], max(0.0, float(z_next[13])))


def double_integrator_dynamics(state, u) -> np.ndarray:
    """Planner model: state (px, py, vx, vy), control is planar acceleration."""
    state = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    return np.concatenate([state[2:4], u])


def lift_planar_state(di_state, altitude: float) -> np.ndarray:
    """Embed a planar double-integrator state as a level quadrotor state."""
    di_state = np.asarray(di_state, dtype=float)
    x = np.zeros(13)
    x[0:2] = di_state[0:2]
    x[2] = altitude
    x[3] = 1.0
    x[7:9] = di_state[2:4]
    return x
