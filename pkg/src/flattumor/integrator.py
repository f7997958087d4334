"""Adaptive integration of the reduced free-boundary ODE.

The height is advanced in log form, ``u = ln rho``, where the equation reads
``u' = mu * (Phi(t) g(e^u) - sigma_tilde)``. Positivity is then structural:
no step can produce ``rho <= 0``. The stepper is the Dormand-Prince 5(4) pair
with local extrapolation, a PI step-size controller and the classical
fourth-order continuous extension for output at arbitrary times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import ModelParams, g

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "StepLimitExceeded",
    "ToleranceFailure",
    "integrate",
    "poincare_map",
    "log_rate",
]

ENVELOPE_SLACK = 1e-9

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1 = 71 / 57600
E3 = -71 / 16695
E4 = 71 / 1920
E5 = -17253 / 339200
E6 = 22 / 525
E7 = -1 / 40
D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
# PI controller exponents (Hairer & Wanner, DOPRI5 defaults)
ALPHA = 0.7 / 5
BETA = 0.04


class IntegrationError(RuntimeError):
    """Base class for integration failures; carries the partial trajectory."""

    def __init__(self, message: str, trajectory: "Trajectory | None" = None):
        super().__init__(message)
        self.trajectory = trajectory


class StepLimitExceeded(IntegrationError):
    pass


class ToleranceFailure(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control settings. ``max_step=None`` means one sixteenth of the period."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float | None = None
    max_steps: int = 10_000_000

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")

    def step_cap(self, period: float) -> float:
        return self.max_step if self.max_step is not None else period / 16.0


@dataclass
class Trajectory:
    """Sampled heights ``rho(t)`` and stepper statistics.

    ``envelope_violations`` counts accepted steps and samples that left the
    two-sided exponential envelope by more than the slack; it is zero for a
    correct integration.
    """

    t: np.ndarray
    rho: np.ndarray
    accepted: int = 0
    rejected: int = 0
    error_estimate: float = 0.0
    envelope_violations: int = 0
    method: str = "dopri5-log"

    @property
    def final(self) -> float:
        return float(self.rho[-1])

    def __len__(self) -> int:
        return len(self.t)


def log_rate(params: ModelParams) -> Callable[[float, float], float]:
    """Right-hand side ``u' = mu (Phi(t) g(e^u) - sigma_tilde)`` as a fast closure."""
    mu, st = params.mu, params.sigma_tilde
    f = params.forcing
    a0 = f.a0
    coeffs = [(k, a, b) for k, (a, b) in enumerate(zip(f.cos, f.sin), start=1) if a or b]
    omega = 2.0 * math.pi / f.period
    cos, sin, exp = math.cos, math.sin, math.exp

    if not coeffs:

        def rate(t: float, u: float) -> float:
            return mu * (a0 * g(exp(u)) - st)

    else:

        def rate(t: float, u: float) -> float:
            w = omega * t
            phi = a0
            for k, a, b in coeffs:
                phi += a * cos(k * w) + b * sin(k * w)
            return mu * (phi * g(exp(u)) - st)

    return rate


def _envelope_ok(params: ModelParams, u0: float, dt: float, u: float) -> bool:
    # log form of rho0 e^{-mu st t} <= rho <= rho0 e^{mu (Phi* - st) t}
    lower = u0 - params.mu * params.sigma_tilde * dt
    upper = u0 + params.mu * (params.forcing.phi_star - params.sigma_tilde) * dt
    return lower - ENVELOPE_SLACK <= u <= upper + ENVELOPE_SLACK


def integrate(
    params: ModelParams,
    rho0: float,
    t0: float,
    t1: float,
    cfg: IntegratorConfig | None = None,
    t_eval: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate the height equation from ``t0`` to ``t1``.

    Parameters
    ----------
    params : ModelParams
    rho0 : float
        Initial height. ``0`` follows the zero solution exactly.
    t0, t1 : float
        Time span. ``t1 < t0`` integrates backwards (no envelope check then).
    cfg : IntegratorConfig, optional
    t_eval : sequence of float, optional
        Output times, monotone in the direction of integration and inside the
        span. By default every accepted step is recorded.

    Raises
    ------
    StepLimitExceeded
        ``cfg.max_steps`` steps were taken before reaching ``t1``.
    ToleranceFailure
        The step size collapsed below floating-point resolution.
    """
    cfg = cfg or IntegratorConfig()
    if rho0 < 0 or not math.isfinite(rho0):
        raise ValueError(f"rho0 must be a finite non-negative number, got {rho0}")
    if t1 == t0:
        raise ValueError("integration span is empty")
    direction = 1.0 if t1 > t0 else -1.0
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        lo, hi = min(t0, t1), max(t0, t1)
        span = abs(t1 - t0)
        if np.any(t_eval < lo - 1e-12 * span) or np.any(t_eval > hi + 1e-12 * span):
            raise ValueError("t_eval must lie inside the integration span")
        if np.any(direction * np.diff(t_eval) < 0):
            raise ValueError("t_eval must be ordered in the direction of integration")

    if rho0 == 0.0:
        ts = t_eval if t_eval is not None else np.array([t0, t1])
        return Trajectory(t=np.array(ts), rho=np.zeros(len(ts)), method="zero")

    rate = log_rate(params)
    forward = direction > 0
    h_max = cfg.step_cap(params.period)
    rtol, atol = cfg.rel_tol, cfg.abs_tol

    t = float(t0)
    u = math.log(rho0)
    u_start = u
    k1 = rate(t, u)

    out_t: list[float] = []
    out_u: list[float] = []
    eval_idx = 0
    n_eval = 0 if t_eval is None else len(t_eval)
    if t_eval is None:
        out_t.append(t)
        out_u.append(u)
    else:
        while eval_idx < n_eval and t_eval[eval_idx] == t0:
            out_t.append(t0)
            out_u.append(u)
            eval_idx += 1

    # initial step guess from the derivative scale
    sc0 = atol + rtol * max(1.0, abs(u))
    d1 = abs(k1) / sc0
    h = min(h_max, abs(t1 - t0), 0.01 / d1 if d1 > 1e-5 else 1e-3 * h_max * 16)
    h = max(h, 1e-6 * min(h_max, abs(t1 - t0)))

    accepted = rejected = 0
    err_sum = 0.0
    violations = 0
    err_prev = 1e-4
    last_rejected = False

    def partial() -> Trajectory:
        return Trajectory(
            t=np.array(out_t),
            rho=np.exp(np.array(out_u)),
            accepted=accepted,
            rejected=rejected,
            error_estimate=err_sum,
            envelope_violations=violations,
        )

    while direction * (t1 - t) > 0:
        if accepted + rejected >= cfg.max_steps:
            raise StepLimitExceeded(
                f"step limit {cfg.max_steps} reached at t={t:.17g}", partial()
            )
        remaining = abs(t1 - t)
        if h >= remaining or remaining - h < 1e-12 * abs(t1 - t0):
            h = remaining
        if h <= 16 * math.ulp(max(abs(t), 1.0)):
            raise ToleranceFailure(f"step size underflow at t={t:.17g}", partial())
        s = direction * h

        k2 = rate(t + C2 * s, u + s * A21 * k1)
        k3 = rate(t + C3 * s, u + s * (A31 * k1 + A32 * k2))
        k4 = rate(t + C4 * s, u + s * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = rate(t + C5 * s, u + s * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = rate(t + s, u + s * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        u_new = u + s * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        t_new = t + s if h < remaining else float(t1)
        k7 = rate(t_new, u_new)
        err = s * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sc = atol + rtol * max(1.0, abs(u), abs(u_new))
        err_norm = abs(err) / sc

        if not math.isfinite(err_norm):
            rejected += 1
            h *= MIN_FACTOR
            last_rejected = True
            continue

        # err_norm == 1 counts as a rejection
        if err_norm < 1.0:
            if t_eval is not None and eval_idx < n_eval:
                ydiff = u_new - u
                bspl = s * k1 - ydiff
                r5 = s * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
                r4 = ydiff - s * k7 - bspl
                while eval_idx < n_eval and (
                    (forward and t_eval[eval_idx] <= t_new)
                    or (not forward and t_eval[eval_idx] >= t_new)
                ):
                    te = float(t_eval[eval_idx])
                    if te == t_new:
                        ue = u_new
                    else:
                        th = (te - t) / s
                        th1 = 1.0 - th
                        ue = u + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)))
                    if forward and not _envelope_ok(params, u_start, te - t0, ue):
                        violations += 1
                    out_t.append(te)
                    out_u.append(ue)
                    eval_idx += 1
            elif t_eval is None:
                out_t.append(t_new)
                out_u.append(u_new)
            if forward and not _envelope_ok(params, u_start, t_new - t0, u_new):
                violations += 1
            accepted += 1
            err_sum += abs(err)
            t, u, k1 = t_new, u_new, k7
            factor = SAFETY * max(err_norm, 1e-10) ** -ALPHA * err_prev**BETA
            factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            if last_rejected:
                factor = min(factor, 1.0)
            err_prev = max(err_norm, 1e-4)
            h = min(h * factor, h_max)
            last_rejected = False
        else:
            rejected += 1
            factor = max(MIN_FACTOR, SAFETY * err_norm**-ALPHA)
            h *= factor
            last_rejected = True

    return partial()


def poincare_map(params: ModelParams, rho0: float, cfg: IntegratorConfig | None = None) -> float:
    """Period map ``rho0 -> rho(T)``."""
    if rho0 <= 0:
        raise ValueError(f"rho0 must be positive, got {rho0}")
    return integrate(params, rho0, 0.0, params.period, cfg, t_eval=[params.period]).final
