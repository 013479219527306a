"""Vehicle and battery dynamics tests: equilibria, Jacobians, integrator order."""

import numpy as np
import pytest

from eclares.quadrotor import (
    BatteryParams,
    QuadrotorParams,
    SystemState,
    battery_rate,
    double_integrator_dynamics,
    hat,
    hover_control,
    lift_planar_state,
    quadrotor_dynamics,
    quadrotor_jacobians,
    quat_left,
    quat_normalize,
    quat_right,
    quat_rotate,
    rk4_step,
    step_system,
)

PARAMS = QuadrotorParams()
BATT = BatteryParams()


def hover_state(position=(1.0, 1.0, 1.0)):
    x = np.zeros(13)
    x[0:3] = position
    x[3] = 1.0  # identity quaternion, scalar first
    return x


def test_hat_antisymmetry():
    v = np.array([1.0, -2.0, 3.0])
    H = hat(v)
    np.testing.assert_allclose(H, -H.T)
    w = np.array([0.5, 0.1, -0.4])
    np.testing.assert_allclose(H @ w, np.cross(v, w))


def test_quat_products_match_rotation_composition():
    rng = np.random.default_rng(0)
    for _ in range(20):
        q1 = quat_normalize(rng.normal(size=4))
        q2 = quat_normalize(rng.normal(size=4))
        a = rng.normal(size=3)
        q12 = quat_left(q1) @ q2
        np.testing.assert_allclose(
            quat_rotate(q12, a), quat_rotate(q1, quat_rotate(q2, a)), atol=1e-12)
        # left and right products agree on the quaternion algebra
        np.testing.assert_allclose(quat_left(q1) @ q2, quat_right(q2) @ q1, atol=1e-12)


def test_quat_rotate_identity_and_yaw():
    e = np.array([1.0, 0.0, 0.0, 0.0])
    a = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(quat_rotate(e, a), a)
    half = np.pi / 4
    q_yaw90 = np.array([np.cos(half), 0.0, 0.0, np.sin(half)])
    np.testing.assert_allclose(
        quat_rotate(q_yaw90, np.array([1.0, 0.0, 0.0])),
        [0.0, 1.0, 0.0], atol=1e-12)


def test_hover_equilibrium():
    """Thrust mg/4 per rotor holds the vehicle exactly still."""
    x = hover_state()
    u = hover_control(PARAMS)
    np.testing.assert_allclose(u, PARAMS.mass * PARAMS.gravity / 4.0)
    deriv = quadrotor_dynamics(x, u, PARAMS)
    assert np.linalg.norm(deriv) < 1e-10


def test_torque_allocation_geometry():
    T = PARAMS.torque_allocation
    d = PARAMS.arm_length / np.sqrt(2.0)
    k = PARAMS.yaw_torque_coeff
    np.testing.assert_allclose(T[0], [d, d, -d, -d])
    np.testing.assert_allclose(T[1], [-d, d, d, -d])
    np.testing.assert_allclose(T[2], [k, -k, k, -k])


def test_jacobians_match_finite_differences():
    rng = np.random.default_rng(3)
    x = hover_state()
    x[3:7] = quat_normalize(np.array([0.9, 0.1, -0.2, 0.15]))
    x[7:10] = rng.normal(0.0, 0.5, 3)
    x[10:13] = rng.normal(0.0, 0.5, 3)
    u = hover_control(PARAMS) + rng.normal(0.0, 0.1, 4)

    A, B = quadrotor_jacobians(x, u, PARAMS)
    eps = 1e-6
    A_fd = np.zeros((13, 13))
    for i in range(13):
        dx = np.zeros(13); dx[i] = eps
        A_fd[:, i] = (quadrotor_dynamics(x + dx, u, PARAMS)
                      - quadrotor_dynamics(x - dx, u, PARAMS)) / (2 * eps)
    B_fd = np.zeros((13, 4))
    for i in range(4):
        du = np.zeros(4); du[i] = eps
        B_fd[:, i] = (quadrotor_dynamics(x, u + du, PARAMS)
                      - quadrotor_dynamics(x, u - du, PARAMS)) / (2 * eps)
    np.testing.assert_allclose(A, A_fd, atol=1e-4)
    np.testing.assert_allclose(B, B_fd, atol=1e-4)


def test_quaternion_norm_drift():
    """Unit norm preserved to 1e-6 over 10 000 renormalized RK4 steps."""
    chi = SystemState(robot=hover_state(), soc=1.0)
    u = hover_control(PARAMS) + np.array([0.01, -0.01, 0.01, -0.01])
    worst = 0.0
    for _ in range(10_000):
        chi = step_system(chi, u, 0.002, PARAMS, BATT)
        worst = max(worst, abs(np.linalg.norm(chi.robot[3:7]) - 1.0))
    assert worst < 1e-6


def test_angular_momentum_free_body():
    """Zero torque: |J w| is conserved by the Euler equations."""
    p = PARAMS
    w = np.array([0.3, -0.5, 0.8])
    h0 = np.linalg.norm(p.inertia @ w)

    def euler_only(w_, _u):
        return p.inertia_inv @ (-np.cross(w_, p.inertia @ w_))

    for _ in range(2000):
        w = rk4_step(euler_only, w, None, 0.001)
    assert np.linalg.norm(p.inertia @ w) == pytest.approx(h0, rel=1e-9)


def test_rk4_observed_order():
    """Convergence order on x' = x measured from successive halvings."""
    def f(x, _u):
        return x

    errs = []
    for n in (10, 20, 40):
        x = np.array([1.0])
        dt = 1.0 / n
        for _ in range(n):
            x = rk4_step(f, x, None, dt)
        errs.append(abs(float(x[0]) - np.e))
    p1 = np.log2(errs[0] / errs[1])
    p2 = np.log2(errs[1] / errs[2])
    assert min(p1, p2) >= 3.8


def test_battery_rate_class_k():
    assert battery_rate(1.0, np.zeros(4), BATT) == 0.0
    u = np.array([1.0, 1.0, 1.0, 1.0])
    r1 = battery_rate(1.0, u, BATT)
    r2 = battery_rate(1.0, 2 * u, BATT)
    assert r1 < 0.0
    assert r2 == pytest.approx(4.0 * r1)  # quadratic in thrust norm


def test_soc_monotone_and_clamped():
    chi = SystemState(robot=hover_state(), soc=0.02)
    u = hover_control(PARAMS)
    prev = chi.soc
    for _ in range(2000):
        chi = step_system(chi, u, 0.05, PARAMS, BATT)
        assert chi.soc <= prev + 1e-15
        prev = chi.soc
    assert chi.soc == 0.0


def test_hover_endurance_scale():
    """One full battery sustains hover for roughly a minute and a half."""
    chi = SystemState(robot=hover_state(), soc=1.0)
    u = hover_control(PARAMS)
    t, dt = 0.0, 0.05
    while chi.soc > 0.0 and t < 300.0:
        chi = step_system(chi, u, dt, PARAMS, BATT)
        t += dt
    assert 60.0 < t < 120.0


def test_double_integrator_and_lift():
    state = np.array([0.5, 0.6, 0.1, -0.2])
    deriv = double_integrator_dynamics(state, np.array([1.0, 2.0]))
    np.testing.assert_allclose(deriv, [0.1, -0.2, 1.0, 2.0])
    lifted = lift_planar_state(state, altitude=1.0)
    assert lifted.shape == (13,)
    np.testing.assert_allclose(lifted[0:3], [0.5, 0.6, 1.0])
    np.testing.assert_allclose(lifted[3:7], [1.0, 0.0, 0.0, 0.0])
    np.testing.assert_allclose(lifted[7:10], [0.1, -0.2, 0.0])


def test_nonfinite_rejected():
    def bad(x, _u):
        return x * np.inf

    with pytest.raises(FloatingPointError):
        rk4_step(bad, np.ones(2), None, 0.1)
