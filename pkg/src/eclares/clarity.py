"""Scalar clarity dynamics, closed-form propagation, and time-to-clarity inversion.

Clarity q in [0, 1] measures how well a scalar stochastic quantity is known:
0 means unknown, 1 means perfectly known. Under a constant sensing gain C,
process-noise variance rate Q, and measurement-noise variance R, clarity obeys
the Riccati-like scalar ODE

    dq/dt = (C^2 / R) (1 - q)^2 - Q q^2

which has an exact closed-form solution and an invertible time-to-clarity map.
Every public function also accepts numpy arrays for the clarity / noise
arguments so that whole cell fields can be propagated in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ClarityParams",
    "UnreachableClarityError",
    "clarity_rate",
    "max_clarity",
    "clarity_closed_form",
    "time_to_clarity",
    "closed_form_field",
]

# clamp tolerance for floating-point drift outside [0, 1]
_CLIP_TOL = 1e-12

# exponent cap: beyond this exp() would overflow and q is at q_inf anyway
_EXP_CAP = 500.0


class UnreachableClarityError(ValueError):
    """Requested clarity level is at or above the maximum attainable value."""


@dataclass(frozen=True)
class ClarityParams:
    """Constant parameters of the scalar clarity ODE.

    sensing_gain: dimensionless gain C >= 0 (1 while a cell is observed, 0 otherwise).
    process_noise: variance rate Q >= 0 of the underlying quantity.
    measurement_noise: variance R > 0 of the sensor output.
    """

    sensing_gain: float = 1.0
    process_noise: float = 0.0
    measurement_noise: float = 1.0

    def __post_init__(self):
        if not (self.sensing_gain >= 0.0):
            raise ValueError(f"sensing_gain must be >= 0, got {self.sensing_gain}")
        if not (self.process_noise >= 0.0):
            raise ValueError(f"process_noise must be >= 0, got {self.process_noise}")
        if not (self.measurement_noise > 0.0):
            raise ValueError(f"measurement_noise must be > 0, got {self.measurement_noise}")


def _clip01(q):
    return np.clip(q, 0.0, 1.0)


def _check_q(q, name="q"):
    q = np.asarray(q, dtype=float)
    if np.any(q < -_CLIP_TOL) or np.any(q > 1.0 + _CLIP_TOL):
        raise ValueError(f"{name} must lie in [0, 1], got {q}")
    return _clip01(q)


def clarity_rate(q, p: ClarityParams):
    """dq/dt = (C^2/R) (1-q)^2 - Q q^2. May be negative (decay)."""
    q = _check_q(q)
    C, Q, R = p.sensing_gain, p.process_noise, p.measurement_noise
    rate = (C * C / R) * (1.0 - q) ** 2 - Q * q * q
    return float(rate) if np.isscalar(rate) or rate.ndim == 0 else rate


def max_clarity(p: ClarityParams) -> float:
    """Maximum attainable clarity q_inf = k/(k+1) with k = C/sqrt(Q R).

    Q = 0 with C > 0 gives q_inf = 1 (no decay), C = 0 with Q > 0 gives 0.
    C = Q = 0 freezes the current information; by convention we return 1
    (nothing decays, so no finite ceiling binds).
    """
    C, Q, R = p.sensing_gain, p.process_noise, p.measurement_noise
    if Q == 0.0:
        return 1.0
    if C == 0.0:
        return 0.0
    with np.errstate(divide="ignore"):
        k = C / np.sqrt(Q * R)
    if not np.isfinite(k):
        return 1.0
    return float(k / (k + 1.0))


def _growth_branch(t, q0, C, R):
    """Q = 0 closed form; a = C^2/R clamped finite so a * t is 0 at t = 0."""
    with np.errstate(over="ignore"):
        a = np.minimum(C * C / R, np.finfo(float).max)
        return 1.0 - (1.0 - q0) / (1.0 + a * (1.0 - q0) * t)


def _closed_form(t, q0, C, Q, R):
    """Vectorized closed-form solution; all arguments broadcastable arrays."""
    t = np.asarray(t, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    C = np.asarray(C, dtype=float)
    Q = np.asarray(Q, dtype=float)

    t, q0, C, Q = np.broadcast_arrays(t, q0, C, Q)
    out = np.empty_like(q0)

    frozen = (C == 0.0) & (Q == 0.0)
    decay = (C == 0.0) & (Q > 0.0)
    growth = (C > 0.0) & (Q == 0.0)
    general = (C > 0.0) & (Q > 0.0)

    if np.any(frozen):
        out[frozen] = q0[frozen]

    if np.any(decay):
        # dq/dt = -Q q^2  =>  q(t) = q0 / (1 + Q q0 t)
        m = decay
        out[m] = q0[m] / (1.0 + Q[m] * q0[m] * t[m])

    if np.any(growth):
        # dq/dt = (C^2/R)(1-q)^2  =>  q(t) = 1 - (1-q0)/(1 + (C^2/R)(1-q0) t)
        m = growth
        out[m] = _growth_branch(t[m], q0[m], C[m], R)

    if np.any(general):
        # k can underflow to 0 (or overflow) for extreme parameter ratios;
        # reroute those cells to the matching limiting branch
        k_all = np.zeros_like(out)
        with np.errstate(divide="ignore"):
            k_all[general] = C[general] / np.sqrt(Q[general] * R)
        degenerate_lo = general & (k_all == 0.0)
        degenerate_hi = general & ~np.isfinite(k_all)
        general = general & (k_all > 0.0) & np.isfinite(k_all)
        if np.any(degenerate_lo):
            m = degenerate_lo
            out[m] = q0[m] / (1.0 + Q[m] * q0[m] * t[m])
        if np.any(degenerate_hi):
            m = degenerate_hi
            out[m] = _growth_branch(t[m], q0[m], C[m], R)

    if np.any(general):
        m = general
        k = k_all[m]
        q_inf = k / (k + 1.0)
        g1 = q_inf - q0[m]
        g3 = (k - 1.0) * q0[m] - k
        expo = 2.0 * k * Q[m] * t[m]
        saturated = expo > _EXP_CAP
        expo = np.minimum(expo, _EXP_CAP)
        # denominator g2 + g3 exp(x) written as (g2 + g3) + g3 expm1(x) with
        # g2 + g3 = -2k/(k+1) analytically; avoids cancellation for extreme k
        denom = -2.0 * k / (k + 1.0) + g3 * np.expm1(expo)
        # |denom| >= 2k/(k+1) = 2 q_inf, so q_inf/denom is bounded by 1/2;
        # dividing g1/denom first can overflow when k is subnormal
        q = q_inf + 2.0 * g1 * (q_inf / denom)
        out[m] = np.where(saturated, q_inf, q)

    return _clip01(out)


def clarity_closed_form(t, q0, p: ClarityParams):
    """Exact solution q(t; q0) of the clarity ODE after t seconds of constant C."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0):
        raise ValueError("t must be >= 0")
    q0 = _check_q(q0, "q0")
    out = _closed_form(t_arr, q0, p.sensing_gain, p.process_noise, p.measurement_noise)
    return float(out) if out.ndim == 0 else out


def closed_form_field(t: float, q0, C, Q, R: float):
    """Array form of clarity_closed_form with per-element sensing gain and noise."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    return _closed_form(t, _check_q(q0, "q0"), C, Q, R)


def time_to_clarity(q0: float, q1: float, p: ClarityParams) -> float:
    """Observation time needed to raise clarity from q0 to q1 (0 if q1 <= q0).

    Uses the analytic inversion of the closed form; a guarded bisection over
    [0, 1e6] s backs it up if the analytic branch misbehaves numerically.
    Raises UnreachableClarityError for q1 >= q_inf.
    """
    q0 = float(_check_q(q0, "q0"))
    q1 = float(_check_q(q1, "q1"))
    if q1 <= q0:
        return 0.0

    C, Q, R = p.sensing_gain, p.process_noise, p.measurement_noise
    if C == 0.0:
        # no sensing: clarity can only decay or stay frozen
        raise UnreachableClarityError(f"q1={q1} unreachable without sensing (C=0)")

    q_inf = max_clarity(p)
    if q1 >= q_inf:
        raise UnreachableClarityError(f"q1={q1} >= max attainable clarity {q_inf}")

    if Q == 0.0:
        a = C * C / R
        return (q1 - q0) / (a * (1.0 - q0) * (1.0 - q1))

    k = C / np.sqrt(Q * R)
    g1 = q_inf - q0
    g2 = g1 * (k - 1.0)
    g3 = (k - 1.0) * q0 - k
    # invert q1 = q_inf (1 + 2 g1 / (g2 + g3 E)) for E = exp(2 k Q t)
    E = (2.0 * g1 * q_inf / (q1 - q_inf) - g2) / g3
    if np.isfinite(E) and E >= 1.0:
        t = float(np.log(E) / (2.0 * k * Q))
        if np.isfinite(t) and t >= 0.0:
            return t
    return _bisect_time(q0, q1, p)


def _bisect_time(q0: float, q1: float, p: ClarityParams, t_max: float = 1e6) -> float:
    """Bisection fallback for the closed-form inversion."""
    lo, hi = 0.0, t_max
    if clarity_closed_form(hi, q0, p) < q1:
        raise UnreachableClarityError(f"q1={q1} not reached within {t_max} s")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if clarity_closed_form(mid, q0, p) < q1:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)
