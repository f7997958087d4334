"""Periodic solution of the height equation in the persistence regime.

When the mean supply exceeds the threshold, the interval

    x2    = g^{-1}(st / Phi*)
    x_bar = g^{-1}(st / Phi_mean) * exp(-mu (Phi* - st) T)

is mapped into itself by the period map ``F``. ``F`` is increasing, so
``F(x) - x`` changes sign on the interval and bisection locates the unique
fixed point. The exponential attraction rate toward the orbit comes from a
mean-value bound on ``g'`` over the range swept by the trajectory.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .integrator import IntegratorConfig, integrate, poincare_map
from .model import ModelParams, g_inverse, g_prime

__all__ = [
    "Bracket",
    "PeriodicSolution",
    "RateEstimate",
    "RegimeError",
    "BracketError",
    "ConvergenceError",
    "compute_bracket",
    "find_periodic",
    "orbit_extrema",
    "convergence_rate",
    "verify_periodicity",
]

ORBIT_SAMPLES = 513
MAX_BISECTIONS = 200
SCAN_POINTS = 1024


class RegimeError(ValueError):
    """Raised when an operation is called outside its parameter regime."""


class BracketError(RuntimeError):
    """The invariant bracket failed its sign test beyond integration tolerance."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Bracket:
    x_bar: float
    x2: float

    def __post_init__(self) -> None:
        if not 0 < self.x_bar < self.x2:
            raise ValueError(f"invalid bracket [{self.x_bar}, {self.x2}]")

    def __contains__(self, x: float) -> bool:
        return self.x_bar <= x <= self.x2


@dataclass
class PeriodicSolution:
    rho_star_0: float
    t: np.ndarray
    rho: np.ndarray
    rho_min: float
    rho_max: float
    residual: float
    bracket: Bracket
    tol: float
    iterations: int = 0


@dataclass(frozen=True)
class RateEstimate:
    """Per-trajectory attraction rate ``delta`` and constant ``C``.

    The bound reads ``|rho(t)/rho*(t) - 1| <= C exp(-delta t)`` with
    ``C = |1 - exp(y0)|`` and ``y0 = ln(rho0 / rho*(0))``. Only the mean-value
    minimum for the sign of ``y0`` is computed; the other one is NaN.
    """

    delta: float
    C: float
    M_min: float
    M_bar_min: float
    y0: float


def compute_bracket(params: ModelParams) -> Bracket:
    """Invariant interval of the period map; needs ``sigma_tilde < mean(Phi)``."""
    f = params.forcing
    st = params.sigma_tilde
    if not st < f.mean:
        raise RegimeError(
            f"no positive periodic solution: sigma_tilde={st} >= mean forcing {f.mean}"
        )
    x2 = g_inverse(st / f.phi_star)
    x_bar = g_inverse(st / f.mean) * math.exp(-params.mu * (f.phi_star - st) * params.period)
    return Bracket(x_bar=x_bar, x2=x2)


def find_periodic(
    params: ModelParams,
    cfg: IntegratorConfig | None = None,
    tol: float = 1e-10,
    bracket: Bracket | None = None,
) -> PeriodicSolution:
    """Fixed point of the period map by bisection on ``F(x) - x``.

    Parameters
    ----------
    params : ModelParams
        Must be in the persistence regime.
    cfg : IntegratorConfig, optional
    tol : float
        Relative tolerance; the returned fixed point satisfies
        ``|F(x) - x| < tol * x`` and the final bracket is narrower than ``tol * x``.
    bracket : Bracket, optional
        Sub-interval of the invariant bracket to search. Its endpoints must
        carry the sign pattern ``F(lo) >= lo`` and ``F(hi) <= hi``.
    """
    full = compute_bracket(params)
    b = bracket or full
    lo, hi = b.x_bar, b.x2
    slack = 1e-8 * full.x2

    def h(x: float) -> float:
        return poincare_map(params, x, cfg) - x

    h_lo, h_hi = h(lo), h(hi)
    if h_lo < -slack or h_hi > slack:
        raise BracketError(
            f"sign test failed on [{lo:.17g}, {hi:.17g}]: "
            f"F(lo)-lo={h_lo:.3e}, F(hi)-hi={h_hi:.3e}"
        )

    x = None
    iterations = 0
    if abs(h_lo) < tol * lo:
        x, hx = lo, h_lo
    elif abs(h_hi) < tol * hi:
        x, hx = hi, h_hi
    else:
        for iterations in range(1, MAX_BISECTIONS + 1):
            mid = 0.5 * (lo + hi)
            hx = h(mid)
            if hx > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < tol * mid and abs(hx) < tol * mid:
                x = mid
                break
        if x is None:
            raise ConvergenceError(f"no convergence after {MAX_BISECTIONS} bisections")

    ts = np.linspace(0.0, params.period, ORBIT_SAMPLES)
    orbit = integrate(params, x, 0.0, params.period, cfg, t_eval=ts)
    sol = PeriodicSolution(
        rho_star_0=x,
        t=orbit.t,
        rho=orbit.rho,
        rho_min=math.nan,
        rho_max=math.nan,
        residual=abs(orbit.final - x),
        bracket=full,
        tol=tol,
        iterations=iterations,
    )
    sol.rho_min, sol.rho_max = orbit_extrema(sol)
    return sol


def _vertex(y_left: float, y_mid: float, y_right: float) -> float:
    # extremal value of the parabola through three equally spaced points
    curv = y_left - 2.0 * y_mid + y_right
    if curv == 0.0:
        return y_mid
    slope = 0.5 * (y_right - y_left)
    offset = -slope / curv
    if abs(offset) > 1.0:
        return y_mid
    return y_mid - 0.5 * slope * slope / curv


def orbit_extrema(sol: PeriodicSolution) -> tuple[float, float]:
    """Minimum and maximum of the orbit, refined by a parabola through neighbors.

    Samples are taken to cover one full period, so the last sample repeats the
    first and neighbors wrap around.
    """
    rho = np.asarray(sol.rho, dtype=float)
    if rho.size == 0:
        raise ValueError("orbit has no samples")
    if rho.size < 4:
        return float(rho.min()), float(rho.max())
    cyc = rho[:-1]
    n = cyc.size
    i_min, i_max = int(np.argmin(cyc)), int(np.argmax(cyc))
    lo = _vertex(cyc[(i_min - 1) % n], cyc[i_min], cyc[(i_min + 1) % n])
    hi = _vertex(cyc[(i_max - 1) % n], cyc[i_max], cyc[(i_max + 1) % n])
    lo = min(lo, float(cyc[i_min]))
    hi = max(hi, float(cyc[i_max]))
    if lo <= 0:
        raise ValueError("orbit minimum must be positive")
    return lo, hi


def _min_neg_slope(a: float, b: float) -> float:
    """Minimum of ``-g'`` over ``[a, b]``: dense scan then bounded refinement."""
    xs = np.linspace(a, b, SCAN_POINTS)
    vals = np.array([-g_prime(x) for x in xs])
    if np.any(vals <= 0):
        raise ArithmeticError("-g' must be positive on (0, inf)")
    i = int(np.argmin(vals))
    best = float(vals[i])
    if 0 < i < SCAN_POINTS - 1:
        res = minimize_scalar(
            lambda x: -g_prime(x),
            bounds=(xs[i - 1], xs[i + 1]),
            method="bounded",
            options={"xatol": 1e-12 * max(b, 1.0)},
        )
        best = min(best, float(res.fun))
    return best


def convergence_rate(
    params: ModelParams, sol: PeriodicSolution, rho0: float
) -> RateEstimate:
    """Exponential attraction rate toward the periodic orbit for one start value."""
    if rho0 <= 0:
        raise ValueError("rho0 must be positive")
    if not params.sigma_tilde < params.forcing.mean:
        raise RegimeError("convergence_rate needs sigma_tilde < mean forcing")
    y0 = math.log(rho0 / sol.rho_star_0)
    C = abs(1.0 - math.exp(y0))
    lead = params.mu * params.forcing.phi_lower * sol.rho_min
    if y0 > 0:
        m = _min_neg_slope(sol.rho_min, sol.rho_max * math.exp(y0))
        return RateEstimate(delta=lead * m, C=C, M_min=m, M_bar_min=math.nan, y0=y0)
    if y0 < 0:
        m = _min_neg_slope(sol.rho_min * math.exp(y0), sol.rho_max)
        return RateEstimate(
            delta=lead * m * math.exp(y0), C=C, M_min=math.nan, M_bar_min=m, y0=y0
        )
    return RateEstimate(delta=math.inf, C=0.0, M_min=math.nan, M_bar_min=math.nan, y0=0.0)


def verify_periodicity(
    sol: PeriodicSolution,
    params: ModelParams,
    cfg: IntegratorConfig | None = None,
    periods: int = 5,
    rho0: float | None = None,
) -> float:
    """Largest relative drift ``|rho(kT) - rho0| / rho0`` over ``k = 1..periods``.

    ``rho0`` defaults to the fixed point stored in ``sol``.
    """
    start = sol.rho_star_0 if rho0 is None else rho0
    T = params.period
    marks = T * np.arange(1, periods + 1)
    traj = integrate(params, start, 0.0, marks[-1], cfg, t_eval=marks)
    return float(np.max(np.abs(traj.rho - start)) / start)
