"""Spectral ergodicity metric and gradient-based ergodic trajectory optimization.

The time-average spatial distribution of a trajectory and the target density
are both expanded in a truncated cosine basis over the rectangular domain.
The ergodicity metric is the Sobolev-weighted squared distance between the two
coefficient vectors. Trajectories are optimized over the control sequence of a
planar double integrator (states rolled out with the forward-Euler discrete
dynamics), with a quadratic boundary penalty keeping the robot in the domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from eclares.grid import DomainSpec
from eclares.tisd import Tisd
from eclares.trajectory import Trajectory

__all__ = [
    "ErgodicSpectrum",
    "PtoConfig",
    "basis_eval",
    "basis_normalizers",
    "sobolev_weights",
    "tisd_coefficients",
    "trajectory_coefficients",
    "ergodic_metric",
    "boundary_penalty",
    "pto_optimize",
]


def basis_normalizers(K: int, spec: DomainSpec) -> np.ndarray:
    """h_k per multi-index so that the basis is orthonormal in L2(domain)."""
    factors = []
    for L in spec.lengths:
        f = np.full(K + 1, L / 2.0)
        f[0] = L
        factors.append(f)
    h2 = factors[0][:, None] * factors[1][None, :] if len(factors) == 2 else factors[0]
    return np.sqrt(h2)


def sobolev_weights(K: int, spec: DomainSpec) -> np.ndarray:
    """Lambda_k = (1 + |k|^2)^(-(s+1)/2); decays with frequency magnitude."""
    s = len(spec.lengths)
    k = np.arange(K + 1)
    if s == 2:
        norm2 = k[:, None] ** 2 + k[None, :] ** 2
    else:
        norm2 = k ** 2
    return (1.0 + norm2) ** (-(s + 1) / 2.0)


def basis_eval(point, multi_index, spec: DomainSpec) -> float:
    """Orthonormal cosine basis function f_k evaluated at one point."""
    p = np.clip(np.asarray(point, dtype=float), 0.0, np.asarray(spec.lengths))
    h = 1.0
    val = 1.0
    for i, (ki, L) in enumerate(zip(multi_index, spec.lengths)):
        val *= np.cos(ki * np.pi * p[i] / L)
        h *= L if ki == 0 else L / 2.0
    return float(val / np.sqrt(h))


def _basis_tables(positions: np.ndarray, K: int, spec: DomainSpec):
    """Per-axis cosine/sine tables for a batch of planar positions."""
    Lx, Ly = spec.lengths
    k = np.arange(K + 1)
    px = np.clip(positions[:, 0], 0.0, Lx)
    py = np.clip(positions[:, 1], 0.0, Ly)
    ax = np.outer(px, k * np.pi / Lx)
    ay = np.outer(py, k * np.pi / Ly)
    return np.cos(ax), np.sin(ax), np.cos(ay), np.sin(ay)


def _eval_batch(positions: np.ndarray, K: int, spec: DomainSpec) -> np.ndarray:
    """(n, K+1, K+1) array of all basis values at all positions."""
    cx, _, cy, _ = _basis_tables(positions, K, spec)
    h = basis_normalizers(K, spec)
    return cx[:, :, None] * cy[:, None, :] / h[None, :, :]


def tisd_coefficients(tisd: Tisd, K: int) -> np.ndarray:
    """Coefficients of the cell density treated as point masses at cell centers."""
    F = _eval_batch(tisd.spec.cell_centers(), K, tisd.spec)
    return np.tensordot(tisd.density, F, axes=(0, 0))


def trajectory_coefficients(positions: np.ndarray, K: int, spec: DomainSpec) -> np.ndarray:
    """Coefficients of the empirical time-average distribution of the samples."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    if positions.shape[0] == 0:
        raise ValueError("trajectory must contain at least one sample")
    return _eval_batch(positions, K, spec).mean(axis=0)


def ergodic_metric(lam: np.ndarray, traj_coeffs: np.ndarray, tisd_coeffs: np.ndarray) -> float:
    """Sobolev-weighted squared coefficient distance; zero iff the spectra match."""
    if traj_coeffs.shape != tisd_coeffs.shape:
        raise ValueError("coefficient arrays must have the same shape")
    d = traj_coeffs - tisd_coeffs
    return float(np.sum(lam * d * d))


@dataclass(frozen=True)
class ErgodicSpectrum:
    """Truncated spectral data for one trajectory / density pair."""

    max_index: int
    lam: np.ndarray
    normalizers: np.ndarray
    traj_coeffs: np.ndarray
    tisd_coeffs: np.ndarray

    def metric(self) -> float:
        return ergodic_metric(self.lam, self.traj_coeffs, self.tisd_coeffs)


def build_spectrum(positions: np.ndarray, tisd: Tisd, K: int) -> ErgodicSpectrum:
    spec = tisd.spec
    return ErgodicSpectrum(
        max_index=K,
        lam=sobolev_weights(K, spec),
        normalizers=basis_normalizers(K, spec),
        traj_coeffs=trajectory_coefficients(positions, K, spec),
        tisd_coeffs=tisd_coefficients(tisd, K),
    )


def boundary_penalty(positions: np.ndarray, spec: DomainSpec, c_b: float) -> float:
    """Quadratic penalty on position components outside the rectangular domain."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    L = np.asarray(spec.lengths)
    over = np.maximum(positions - L, 0.0)
    under = np.minimum(positions, 0.0)
    return float(c_b * np.sum(over ** 2 + under ** 2))


@dataclass
class PtoConfig:
    """Configuration of the ergodic trajectory optimizer."""

    horizon: float = 10.0
    dt: float = 0.2
    num_harmonics: int = 8
    control_weight: float = 0.05
    boundary_weight: float = 50.0
    max_iterations: int = 100
    descent_tolerance: float = 1e-8
    armijo_slope: float = 1e-4
    armijo_shrink: float = 0.5
    initial_step: float = 1.0

    def __post_init__(self):
        n = self.horizon / self.dt
        if abs(n - round(n)) > 1e-9:
            raise ValueError("horizon must be an integer multiple of dt")
        if self.control_weight <= 0.0 or self.boundary_weight <= 0.0:
            raise ValueError("control and boundary weights must be positive")

    @property
    def num_steps(self) -> int:
        return int(round(self.horizon / self.dt))


def rollout_double_integrator(x0: np.ndarray, controls: np.ndarray, dt: float) -> np.ndarray:
    """Forward-Euler rollout of (px, py, vx, vy) under acceleration controls."""
    n = controls.shape[0]
    states = np.empty((n + 1, 4))
    states[0] = x0
    for j in range(n):
        p, v = states[j, :2], states[j, 2:]
        states[j + 1, :2] = p + v * dt
        states[j + 1, 2:] = v + controls[j] * dt
    return states


def _objective_and_positions(x0, controls, tisd_coeffs, lam, cfg: PtoConfig, spec: DomainSpec):
    states = rollout_double_integrator(x0, controls, cfg.dt)
    pos = states[:, :2]
    c = trajectory_coefficients(pos, cfg.num_harmonics, spec)
    J = (
        ergodic_metric(lam, c, tisd_coeffs)
        + boundary_penalty(pos, spec, cfg.boundary_weight)
        + 0.5 * cfg.dt * cfg.control_weight * float(np.sum(controls ** 2))
    )
    return J, states, c


def pto_objective(x0, controls, tisd: Tisd, cfg: PtoConfig) -> float:
    """Total PTO objective for a given control sequence."""
    lam = sobolev_weights(cfg.num_harmonics, tisd.spec)
    phik = tisd_coefficients(tisd, cfg.num_harmonics)
    J, _, _ = _objective_and_positions(np.asarray(x0, float), np.asarray(controls, float),
                                       phik, lam, cfg, tisd.spec)
    return J


def pto_gradient(x0, controls, tisd: Tisd, cfg: PtoConfig) -> np.ndarray:
    """Analytic gradient of the PTO objective with respect to the controls."""
    spec = tisd.spec
    lam = sobolev_weights(cfg.num_harmonics, spec)
    phik = tisd_coefficients(tisd, cfg.num_harmonics)
    _, states, c = _objective_and_positions(np.asarray(x0, float), np.asarray(controls, float),
                                            phik, lam, cfg, spec)
    return _gradient(states, np.asarray(controls, float), c, phik, lam, cfg, spec)


def _gradient(states, controls, c, phik, lam, cfg: PtoConfig, spec: DomainSpec) -> np.ndarray:
    K = cfg.num_harmonics
    Lx, Ly = spec.lengths
    pos = states[:, :2]
    n_samples = pos.shape[0]

    cx, sx, cy, sy = _basis_tables(pos, K, spec)
    h = basis_normalizers(K, spec)
    w = 2.0 * lam * (c - phik) / n_samples  # dPhi/dc_k scaled by the sample average

    k = np.arange(K + 1)
    kx = k * np.pi / Lx
    ky = k * np.pi / Ly
    # d f_k / dx = -kx sin(kx x) cos(ky y) / h, similarly for y
    wh = w / h
    gx = -np.einsum("kl,nk,nl,k->n", wh, sx, cy, kx)
    gy = -np.einsum("kl,nk,nl,l->n", wh, cx, sy, ky)
    dJ_dpos = np.stack([gx, gy], axis=1)

    # boundary penalty gradient
    L = np.asarray(spec.lengths)
    dJ_dpos += 2.0 * cfg.boundary_weight * (np.maximum(pos - L, 0.0) + np.minimum(pos, 0.0))

    # adjoint pass through p_{j+1} = p_j + v_j dt, v_{j+1} = v_j + u_j dt
    n = controls.shape[0]
    grad = cfg.dt * cfg.control_weight * controls.copy()
    lam_p = dJ_dpos[n].copy()
    lam_v = np.zeros(2)
    for j in range(n - 1, -1, -1):
        grad[j] += cfg.dt * lam_v
        lam_v = lam_v + cfg.dt * lam_p
        lam_p = lam_p + dJ_dpos[j]
    return grad


def spiral_guess(x0: np.ndarray, cfg: PtoConfig, spec: DomainSpec) -> np.ndarray:
    """Cold-start control sequence: damped pull toward the domain center with a
    rotating excitation. Generated by a closed-loop rollout so the resulting
    open-loop sequence keeps the trajectory inside the domain."""
    center = 0.5 * np.asarray(spec.lengths, dtype=float)
    omega = 4.0 * np.pi / cfg.horizon
    amp = 0.1 * min(spec.lengths)
    state = np.asarray(x0, dtype=float).copy()
    controls = np.empty((cfg.num_steps, 2))
    for i in range(cfg.num_steps):
        t = i * cfg.dt
        forcing = amp * np.array([np.cos(omega * t), np.sin(omega * t)])
        u = 1.0 * (center - state[0:2]) - 1.2 * state[2:4] + forcing
        controls[i] = u
        state[0:2] += cfg.dt * state[2:4]
        state[2:4] += cfg.dt * u
    return controls


def pto_optimize(
    x0,
    tisd: Tisd,
    cfg: PtoConfig,
    t0: float = 0.0,
    initial_controls: np.ndarray | None = None,
    stats_out: dict | None = None,
) -> Trajectory:
    """Gradient descent with Armijo backtracking on the control sequence.

    Returns a dynamically feasible double-integrator trajectory whose objective
    is never above that of the initial guess. With max_iterations = 0 the
    initial guess is returned unchanged. If stats_out is given it is filled
    with iteration counts and the objective / metric before and after descent.
    """
    spec = tisd.spec
    x0 = np.asarray(x0, dtype=float)
    if initial_controls is None:
        controls = spiral_guess(x0, cfg, spec)
    else:
        controls = np.array(initial_controls, dtype=float)
        if controls.shape != (cfg.num_steps, 2):
            raise ValueError(f"initial controls must have shape ({cfg.num_steps}, 2)")

    lam = sobolev_weights(cfg.num_harmonics, spec)
    phik = tisd_coefficients(tisd, cfg.num_harmonics)

    J, states, c = _objective_and_positions(x0, controls, phik, lam, cfg, spec)
    if not np.isfinite(J):
        raise RuntimeError(f"non-finite objective {J} for the initial guess")
    if stats_out is not None:
        stats_out["objective_initial"] = J
        stats_out["metric_initial"] = ergodic_metric(lam, c, phik)

    iterations = 0
    step = cfg.initial_step
    for _ in range(cfg.max_iterations):
        grad = _gradient(states, controls, c, phik, lam, cfg, spec)
        g2 = float(np.sum(grad ** 2))
        if g2 < cfg.descent_tolerance:
            break
        accepted = False
        while step > 1e-12:
            trial = controls - step * grad
            J_trial, states_trial, c_trial = _objective_and_positions(
                x0, trial, phik, lam, cfg, spec)
            if not np.isfinite(J_trial):
                raise RuntimeError("non-finite objective during line search")
            if J_trial <= J - cfg.armijo_slope * step * g2:
                controls, J, states, c = trial, J_trial, states_trial, c_trial
                accepted = True
                iterations += 1
                step = min(step * 2.0, 1e6)
                break
            step *= cfg.armijo_shrink
        if not accepted:
            break

    if stats_out is not None:
        stats_out["objective_final"] = J
        stats_out["metric_final"] = ergodic_metric(lam, c, phik)
        stats_out["iterations"] = iterations

    return Trajectory(t0=t0, dt=cfg.dt, states=states, controls=controls)
