"""Closed-form pieces of the flat multi-layer tumor model.

The tumor occupies the slab ``0 < y < rho(t)``. With the quasi-steady nutrient
equation the whole free-boundary problem collapses to one scalar ODE,

    rho' = mu * rho * (Phi(t) * g(rho) - sigma_tilde),    g(rho) = tanh(rho) / rho,

and the nutrient and pressure fields are explicit functions of ``rho(t)``.
Everything in this module is pure and dimensionless.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "ForcingFunction",
    "ModelParams",
    "FieldSnapshot",
    "forcing_eval",
    "forcing_extrema",
    "g",
    "g_prime",
    "g_inverse",
    "one_minus_g",
    "rhs",
    "sigma_field",
    "pressure_field",
    "pressure_gradient",
    "boundary_velocity",
    "field_snapshot",
    "growth_envelope",
]

POSITIVITY_SAMPLES = 4096
TAYLOR_CUTOFF = 1e-4
# (x - tanh x) / x = sum_k c_k x^(2k), k = 1..16; converges fast for x < pi/2
_DEFICIT_SERIES = (
    1 / 3,
    -2 / 15,
    17 / 315,
    -62 / 2835,
    1382 / 155925,
    -21844 / 6081075,
    929569 / 638512875,
    -6404582 / 10854718875,
    443861162 / 1856156927625,
    -18888466084 / 194896477400625,
    113927491862 / 2900518163668125,
    -58870668456604 / 3698160658676859375,
    8374643517010684 / 1298054391195577640625,
    -689005380505609448 / 263505041412702261046875,
    129848163681107301953 / 122529844256906551386796875,
    -1736640792209901647222 / 4043484860477916195764296875,
)
_DEFICIT_CUTOFF = 0.5


@dataclass(frozen=True)
class ForcingFunction:
    """Positive T-periodic nutrient supply as a truncated Fourier series.

    ``Phi(t) = a0 + sum_k a[k] cos(2 pi k t / T) + b[k] sin(2 pi k t / T)``

    The mean over a period is ``a0`` exactly. The maximum and minimum are found
    numerically once at construction; a non-positive minimum is rejected.
    """

    period: float
    a0: float
    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()
    phi_star: float = field(init=False, repr=False, compare=False)
    phi_lower: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        cos = tuple(float(c) for c in self.cos)
        sin = tuple(float(s) for s in self.sin)
        n = max(len(cos), len(sin))
        cos = cos + (0.0,) * (n - len(cos))
        sin = sin + (0.0,) * (n - len(sin))
        object.__setattr__(self, "cos", cos)
        object.__setattr__(self, "sin", sin)
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "a0", float(self.a0))
        values = (self.period, self.a0) + cos + sin
        if not all(math.isfinite(v) for v in values):
            raise ValueError("forcing coefficients must be finite")
        if self.period <= 0:
            raise ValueError(f"period must be positive, got {self.period}")
        hi, lo = _series_extrema(self)
        if lo <= 0:
            raise ValueError(
                f"forcing must stay positive; its minimum over a period is {lo:.6g}"
            )
        object.__setattr__(self, "phi_star", hi)
        object.__setattr__(self, "phi_lower", lo)

    @classmethod
    def constant(cls, value: float, period: float = 1.0) -> "ForcingFunction":
        return cls(period=period, a0=value)

    @property
    def mean(self) -> float:
        return self.a0

    @property
    def harmonics(self) -> int:
        return len(self.cos)

    def __call__(self, t):
        return forcing_eval(self, t)


@dataclass(frozen=True)
class ModelParams:
    """Aggressiveness ``mu``, proliferation threshold ``sigma_tilde`` and the forcing."""

    mu: float
    sigma_tilde: float
    forcing: ForcingFunction

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not (math.isfinite(self.sigma_tilde) and self.sigma_tilde > 0):
            raise ValueError(f"sigma_tilde must be positive, got {self.sigma_tilde}")

    @property
    def period(self) -> float:
        return self.forcing.period


@dataclass(frozen=True)
class FieldSnapshot:
    t: float
    rho: float
    y: np.ndarray
    sigma: np.ndarray
    p: np.ndarray


def forcing_eval(f: ForcingFunction, t):
    """Evaluate the forcing at scalar or array ``t``."""
    if np.ndim(t) == 0:
        t = float(t)
        w = 2.0 * math.pi * t / f.period
        total = f.a0
        for k, (a, b) in enumerate(zip(f.cos, f.sin), start=1):
            total += a * math.cos(k * w) + b * math.sin(k * w)
        return total
    t = np.asarray(t, dtype=float)
    w = 2.0 * np.pi * t / f.period
    total = np.full_like(t, f.a0)
    for k, (a, b) in enumerate(zip(f.cos, f.sin), start=1):
        total += a * np.cos(k * w) + b * np.sin(k * w)
    return total


def _series_extrema(f: ForcingFunction) -> tuple[float, float]:
    if not f.cos:
        return f.a0, f.a0
    dt = f.period / POSITIVITY_SAMPLES
    ts = np.arange(POSITIVITY_SAMPLES) * dt
    vals = forcing_eval(f, ts)

    def refine(i: int, sign: float) -> float:
        res = minimize_scalar(
            lambda s: sign * forcing_eval(f, s),
            bounds=(ts[i] - dt, ts[i] + dt),
            method="bounded",
            options={"xatol": 1e-13 * f.period},
        )
        return sign * min(sign * vals[i], sign * float(forcing_eval(f, res.x)))

    hi = refine(int(np.argmax(vals)), -1.0)
    lo = refine(int(np.argmin(vals)), 1.0)
    return hi, lo


def forcing_extrema(f: ForcingFunction) -> tuple[float, float]:
    """Return ``(Phi*, Phi_*)``, the maximum and minimum over one period."""
    return f.phi_star, f.phi_lower


def one_minus_g(rho: float) -> float:
    """``1 - tanh(rho)/rho`` without cancellation for small ``rho``."""
    if rho < _DEFICIT_CUTOFF:
        x2 = rho * rho
        acc = 0.0
        for c in reversed(_DEFICIT_SERIES):
            acc = acc * x2 + c
        return acc * x2
    return 1.0 - math.tanh(rho) / rho


def g(rho: float) -> float:
    """Shape function ``tanh(rho)/rho``, extended by 1 at the origin."""
    if rho < TAYLOR_CUTOFF:
        r2 = rho * rho
        return 1.0 - r2 / 3.0 + 2.0 * r2 * r2 / 15.0
    if rho < _DEFICIT_CUTOFF:
        return 1.0 - one_minus_g(rho)
    return math.tanh(rho) / rho


def _sech2(rho: float) -> float:
    e = math.exp(-2.0 * rho)
    return 4.0 * e / (1.0 + e) ** 2


def g_prime(rho: float) -> float:
    """Derivative of :func:`g`; zero at the origin, negative elsewhere."""
    if rho < TAYLOR_CUTOFF:
        return -2.0 * rho / 3.0 + 8.0 * rho**3 / 15.0
    if rho < _DEFICIT_CUTOFF:
        x2 = rho * rho
        acc = 0.0
        for k in range(len(_DEFICIT_SERIES), 0, -1):
            acc = acc * x2 + 2 * k * _DEFICIT_SERIES[k - 1]
        return -acc * rho
    return _sech2(rho) / rho - math.tanh(rho) / (rho * rho)


def g_inverse(v: float, rtol: float = 1e-12) -> float:
    """Unique ``rho > 0`` with ``g(rho) = v`` for ``0 < v < 1``, by bisection.

    The bracket ``(1e-300, 1/v]`` is valid since ``g(rho) < 1/rho``. For
    ``v >= 1/2`` the comparison is made on ``1 - g`` against ``1 - v`` (exact
    in floating point), which keeps full relative accuracy near the origin.
    """
    v = float(v)
    if not (0.0 < v < 1.0):
        raise ValueError(f"g_inverse needs 0 < v < 1, got {v}")
    if v >= 0.5:
        target = 1.0 - v

        def above(r: float) -> bool:
            return one_minus_g(r) < target

    else:

        def above(r: float) -> bool:
            return g(r) > v

    lo, hi = 1e-300, 1.0 / v
    for _ in range(2000):
        mid = 0.5 * (lo + hi) if hi < 1e3 * lo else math.sqrt(lo * hi)
        if above(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


def rhs(params: ModelParams, t: float, rho: float) -> float:
    """Growth rate ``mu * rho * (Phi(t) g(rho) - sigma_tilde)``."""
    if rho == 0.0:
        return 0.0
    phi = forcing_eval(params.forcing, t)
    return params.mu * rho * (phi * g(rho) - params.sigma_tilde)


def _check_depth(rho: float, y) -> np.ndarray | float:
    arr = np.asarray(y, dtype=float)
    tol = 1e-14 * max(rho, 1.0)
    if np.any(arr < -tol) or np.any(arr > rho + tol):
        raise ValueError(f"y must lie in [0, rho={rho}]")
    return float(arr) if arr.ndim == 0 else arr


def _cosh_ratio(y, rho: float):
    # cosh(y)/cosh(rho) without overflow for large rho
    y = np.asarray(y, dtype=float)
    out = np.exp(y - rho) * (1.0 + np.exp(-2.0 * y)) / (1.0 + math.exp(-2.0 * rho))
    return float(out) if out.ndim == 0 else out


def sigma_field(params: ModelParams, t: float, rho: float, y):
    """Nutrient concentration ``Phi(t) cosh(y)/cosh(rho)`` on ``0 <= y <= rho``."""
    y = _check_depth(rho, y)
    return forcing_eval(params.forcing, t) * _cosh_ratio(y, rho)


def pressure_field(params: ModelParams, t: float, rho: float, y):
    """Pressure solving ``-p'' = mu (sigma - sigma_tilde)`` with ``p'(0) = 0``, ``p(rho) = 0``."""
    y = _check_depth(rho, y)
    mu, st = params.mu, params.sigma_tilde
    phi = forcing_eval(params.forcing, t)
    y2 = np.square(y)
    return 0.5 * mu * st * (y2 - rho * rho) + mu * phi * (1.0 - _cosh_ratio(y, rho))


def pressure_gradient(params: ModelParams, t: float, rho: float, y):
    """Analytic ``dp/dy = mu sigma_tilde y - mu Phi(t) sinh(y)/cosh(rho)``."""
    y = _check_depth(rho, y)
    phi = forcing_eval(params.forcing, t)
    yy = np.asarray(y, dtype=float)
    sinh_ratio = np.exp(yy - rho) * (1.0 - np.exp(-2.0 * yy)) / (1.0 + math.exp(-2.0 * rho))
    out = params.mu * params.sigma_tilde * yy - params.mu * phi * sinh_ratio
    return float(out) if out.ndim == 0 else out


def boundary_velocity(params: ModelParams, t: float, rho: float) -> float:
    """Normal velocity ``-dp/dy`` at the free boundary, ``mu Phi tanh(rho) - mu sigma_tilde rho``."""
    phi = forcing_eval(params.forcing, t)
    return params.mu * (phi * math.tanh(rho) - params.sigma_tilde * rho)


def field_snapshot(
    params: ModelParams, t: float, rho: float, y: Sequence[float] | None = None, n: int = 257
) -> FieldSnapshot:
    """Nutrient and pressure on a grid of ``[0, rho]`` (uniform, ``n`` points, by default)."""
    if y is None:
        y = np.linspace(0.0, rho, n)
    y = np.asarray(y, dtype=float)
    if y.size < 2 or y[0] != 0.0 or y[-1] != rho or np.any(np.diff(y) <= 0):
        raise ValueError("grid must increase strictly from 0 to rho")
    return FieldSnapshot(
        t=float(t),
        rho=float(rho),
        y=y,
        sigma=sigma_field(params, t, rho, y),
        p=pressure_field(params, t, rho, y),
    )


def growth_envelope(params: ModelParams, rho0: float, t: float) -> tuple[float, float]:
    """Two-sided exponential bound ``(rho0 e^{-mu st t}, rho0 e^{mu (Phi* - st) t})``.

    Since ``0 < g < 1``, ``-mu st rho <= rho' <= mu (Phi* - st) rho``.
    """
    if rho0 <= 0 or t < 0:
        raise ValueError("growth_envelope needs rho0 > 0 and t >= 0")
    mu, st = params.mu, params.sigma_tilde
    return (
        rho0 * math.exp(-mu * st * t),
        rho0 * math.exp(mu * (params.forcing.phi_star - st) * t),
    )
