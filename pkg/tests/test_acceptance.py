"""End-to-end acceptance gate.

Each test covers one acceptance criterion and prints a single pass/fail line.
Mission-level criteria share session-scoped runs to keep the suite tractable;
all tolerances are asserted exactly as stated, never loosened.

Run with `pytest tests/test_acceptance.py -v -s` to see the summary lines.
"""

import time

import numpy as np
import pytest

from eclares.clarity import ClarityParams, clarity_closed_form, clarity_rate, max_clarity, time_to_clarity
from eclares.config import build_preset
from eclares.ergodic import (
    PtoConfig,
    basis_eval,
    pto_gradient,
    pto_objective,
    pto_optimize,
    sobolev_weights,
    tisd_coefficients,
    ergodic_metric,
)
from eclares.grid import DomainSpec
from eclares.mission import MissionConfig, run_mission, write_metrics_csv
from eclares.quadrotor import (
    BatteryParams,
    QuadrotorParams,
    SystemState,
    hover_control,
    quadrotor_dynamics,
    rk4_step,
    step_system,
)
from eclares.tisd import Tisd

SPEC = DomainSpec((2.0, 2.0), 0.2)


def report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"\n[{status}] criterion {num}: {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {num} failed: {name} {detail}"


# ---------------------------------------------------------------- shared runs


@pytest.fixture(scope="session")
def static_runs():
    """Spatiostatic 300 s missions for all three methods (same seed)."""
    out = {}
    for method in ("clarity_tisd", "uniform_tisd", "lawnmower"):
        cfg = build_preset("desk-spatiostatic")
        cfg.method = method
        t0 = time.perf_counter()
        log = run_mission(cfg)
        out[method] = (log, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="session")
def stochastic_seed_runs():
    """Stochastic 300 s missions for three methods across five seeds."""
    out = {}
    for seed in range(5):
        for method in ("clarity_tisd", "uniform_tisd", "lawnmower"):
            cfg = build_preset("desk-stochastic")
            cfg.method = method
            cfg.seed = seed
            out[(seed, method)] = run_mission(cfg)
    return out


@pytest.fixture(scope="session")
def filter_pair_runs():
    """Same seed, 150 s, with and without the energy-aware filter."""
    runs = {}
    for enabled in (True, False):
        cfg = build_preset("desk-stochastic")
        cfg.duration = 150.0
        cfg.eware_enabled = enabled
        runs[enabled] = run_mission(cfg)
    return runs


def plateau(log):
    q = np.asarray(log.q_d)
    return float(q[int(0.8 * len(q)):].mean())


# ---------------------------------------------------------------- criteria


def test_criterion_1_clarity_oracles():
    start = time.perf_counter()
    grid = [
        (q0, C, Q, R)
        for q0 in (0.0, 0.2, 0.5, 0.9)
        for Q in (0.0, 0.1, 1.0)
        for R in (0.5, 1.0)
        for C in (0.0, 1.0)
    ]
    q0s, Cs, Qs, Rs = (np.array(v) for v in zip(*grid))

    def rate(q):
        return (Cs * Cs / Rs) * (1.0 - q) ** 2 - Qs * q * q

    worst = 0.0
    for t in (0.1, 1.0, 5.0, 10.0):
        n = int(400 * max(t, 1.0))
        dt = t / n
        q = q0s.copy()
        for _ in range(n):  # vectorized RK4 over the whole parameter grid
            k1 = rate(q)
            k2 = rate(q + 0.5 * dt * k1)
            k3 = rate(q + 0.5 * dt * k2)
            k4 = rate(q + dt * k3)
            q = q + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        q = np.clip(q, 0.0, 1.0)
        closed = np.array([
            clarity_closed_form(t, grid[i][0], ClarityParams(Cs[i], Qs[i], Rs[i]))
            for i in range(len(grid))
        ])
        worst = max(worst, float(np.abs(closed - q).max()))
    rt_worst = 0.0
    for Q in (0.0, 0.1, 1.0):
        for R in (0.5, 1.0):
            p = ClarityParams(1.0, Q, R)
            q_inf = max_clarity(p)
            for q0 in (0.0, 0.1, 0.4):
                for q1 in (q0 + 0.05, q0 + 0.2, q_inf - 1e-3):
                    if not q0 < q1 < q_inf - 1e-3 + 1e-15:
                        continue
                    dt = time_to_clarity(q0, q1, p)
                    rt_worst = max(rt_worst, abs(clarity_closed_form(dt, q0, p) - q1))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and rt_worst < 1e-9 and elapsed < 5.0
    report(1, "clarity closed form vs RK4 and round trip", ok,
           f"oracle err {worst:.2e}, round trip err {rt_worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_spectral_identities():
    start = time.perf_counter()
    # orthonormality under grid quadrature
    K, n = 4, 100
    xs = (np.arange(n) + 0.5) * SPEC.lengths[0] / n
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    dA = (SPEC.lengths[0] / n) ** 2
    idx = [(kx, ky) for kx in range(K + 1) for ky in range(K + 1)]
    vals = np.array([[basis_eval(p, k, SPEC) for p in pts] for k in idx])
    gram_err = float(np.abs(vals @ vals.T * dA - np.eye(len(idx))).max())

    # metric zero iff coefficients equal
    density = np.zeros(SPEC.num_cells)
    density[[12, 87]] = 0.5
    tisd = Tisd(spec=SPEC, density=density, targets_satisfied=False)
    phik = tisd_coefficients(tisd, 6)
    lam = sobolev_weights(6, SPEC)
    zero_ok = ergodic_metric(lam, phik, phik) == 0.0
    other = np.zeros(SPEC.num_cells)
    other[3] = 1.0
    nonzero_ok = ergodic_metric(
        lam, tisd_coefficients(Tisd(SPEC, other, False), 6), phik) > 0.0

    # analytic gradient vs central differences
    cfg = PtoConfig(horizon=2.0, dt=0.2, num_harmonics=4)
    x0 = np.array([0.3, 0.4, 0.0, 0.0])
    rng = np.random.default_rng(5)
    controls = rng.normal(0.0, 0.2, size=(cfg.num_steps, 2))
    grad = pto_gradient(x0, controls, tisd, cfg)
    eps = 1e-6
    fd = np.zeros_like(grad)
    for i in range(controls.shape[0]):
        for j in range(2):
            up = controls.copy(); up[i, j] += eps
            dn = controls.copy(); dn[i, j] -= eps
            fd[i, j] = (pto_objective(x0, up, tisd, cfg)
                        - pto_objective(x0, dn, tisd, cfg)) / (2 * eps)
    rel = float(np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12))
    elapsed = time.perf_counter() - start
    ok = gram_err < 1e-3 and zero_ok and nonzero_ok and rel < 1e-3 and elapsed < 30.0
    report(2, "basis orthonormality, metric identity, gradient check", ok,
           f"gram err {gram_err:.2e}, grad rel err {rel:.2e}, {elapsed:.1f}s")


def test_criterion_3_pto_descent():
    cfg = PtoConfig(horizon=10.0, dt=0.2, num_harmonics=8, max_iterations=200)
    density = np.zeros(SPEC.num_cells)
    density[[22, 77]] = 0.5
    tisd = Tisd(spec=SPEC, density=density, targets_satisfied=False)
    stats = {}
    pto_optimize(np.array([0.4, 0.7, 0.0, 0.0]), tisd, cfg,
                 initial_controls=np.zeros((cfg.num_steps, 2)), stats_out=stats)
    ratio = stats["objective_final"] / stats["objective_initial"]
    ok = ratio <= 0.5
    report(3, "trajectory optimizer halves the objective", ok,
           f"final/initial = {ratio:.3f} in {stats['iterations']} iterations")


def test_criterion_4_spatiostatic_comparison(static_runs):
    clarity, t_c = static_runs["clarity_tisd"]
    uniform, t_u = static_runs["uniform_tisd"]
    mower, t_m = static_runs["lawnmower"]
    conv = clarity.q_d[-1] <= 0.1 * clarity.q_d[0]
    order = clarity.q_d[-1] <= uniform.q_d[-1]
    mower_pos = plateau(mower) > 0.0
    runtime_ok = max(t_c, t_u, t_m) < 60.0
    ok = conv and order and mower_pos and runtime_ok
    report(4, "static environment: convergence and method ordering", ok,
           f"clarity {clarity.q_d[-1]:.4f} (start {clarity.q_d[0]:.3f}), "
           f"uniform {uniform.q_d[-1]:.4f}, lawnmower plateau {plateau(mower):.4f}, "
           f"max runtime {max(t_c, t_u, t_m):.0f}s")


def test_criterion_5_stochastic_ordering(stochastic_seed_runs):
    wins, mower_rises = 0, 0
    details = []
    for seed in range(5):
        p_c = plateau(stochastic_seed_runs[(seed, "clarity_tisd")])
        p_u = plateau(stochastic_seed_runs[(seed, "uniform_tisd")])
        mower = np.asarray(stochastic_seed_runs[(seed, "lawnmower")].q_d)
        if 0.0 < p_c < p_u:
            wins += 1
        if mower[-1] > mower.min():
            mower_rises += 1
        details.append(f"s{seed}: {p_c:.3f}/{p_u:.3f}")
    ok = wins >= 4 and mower_rises >= 4
    report(5, "stochastic environment: plateau ordering across seeds", ok,
           f"ordering holds on {wins}/5 seeds, lawnmower rises on {mower_rises}/5; "
           + ", ".join(details))


def test_criterion_6_energy_filter_ablation(filter_pair_runs):
    with_f = filter_pair_runs[True]
    without = filter_pair_runs[False]
    min_soc = min(with_f.soc)
    landings_ok = len(with_f.landing_socs) > 0 and all(
        0.0 < s <= 0.10 for s in with_f.landing_socs)
    crash_ok = without.crashed and without.soc[-1] == 0.0 \
        and without.dist_to_charger[-1] > 0.3
    ok = min_soc > 0.0 and landings_ok and crash_ok
    report(6, "energy filter keeps SoC positive; ablation crashes", ok,
           f"min SoC {min_soc:.4f}, landing SoCs "
           f"{[round(s, 3) for s in with_f.landing_socs]}, "
           f"ablation crash at dist {without.dist_to_charger[-1]:.2f}m")


def test_criterion_7_filter_timing(filter_pair_runs):
    audit = filter_pair_runs[True].audit
    times_ms = [rec.elapsed_ms for rec in audit]
    worst = max(times_ms)
    mean = float(np.mean(times_ms))
    # T_E budget is 2 s; ten-fold margin means every iteration under 200 ms
    ok = len(times_ms) > 0 and worst < 200.0
    report(7, "filter build+validate well under the cadence budget", ok,
           f"mean {mean:.1f} ms, worst {worst:.1f} ms over {len(times_ms)} iterations")


def test_criterion_8_vehicle_suite():
    params, batt = QuadrotorParams(), BatteryParams()
    x = np.zeros(13)
    x[0:3] = [1.0, 1.0, 1.0]
    x[3] = 1.0
    hover_norm = float(np.linalg.norm(quadrotor_dynamics(x, hover_control(params), params)))

    chi = SystemState(x.copy(), 1.0)
    u = hover_control(params) + np.array([0.01, -0.01, 0.01, -0.01])
    drift = 0.0
    soc_monotone = True
    prev_soc = chi.soc
    for _ in range(10_000):
        chi = step_system(chi, u, 0.002, params, batt)
        drift = max(drift, abs(float(np.linalg.norm(chi.robot[3:7])) - 1.0))
        soc_monotone &= chi.soc <= prev_soc + 1e-15
        prev_soc = chi.soc

    errs = []
    for n in (10, 20, 40):
        y = np.array([1.0])
        for _ in range(n):
            y = rk4_step(lambda z, _u: z, y, None, 1.0 / n)
        errs.append(abs(float(y[0]) - np.e))
    order = min(np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2]))

    ok = drift < 1e-6 and hover_norm < 1e-10 and order >= 3.8 and soc_monotone
    report(8, "vehicle suite: quaternion drift, hover, RK4 order, SoC", ok,
           f"drift {drift:.2e}, hover |dx| {hover_norm:.2e}, order {order:.2f}")


def test_criterion_9_determinism(tmp_path):
    outputs = []
    for run in range(2):
        cfg = build_preset("desk-stochastic")
        cfg.duration = 20.0
        cfg.seed = 2024
        log = run_mission(cfg)
        path = tmp_path / f"metrics_{run}.csv"
        write_metrics_csv(log, path)
        outputs.append(path.read_bytes())
    ok = outputs[0] == outputs[1] and len(outputs[0]) > 0
    report(9, "identical config and seed give byte-identical output", ok,
           f"{len(outputs[0])} bytes compared")
