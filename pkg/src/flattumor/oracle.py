"""Brute-force checks that share no code path with the production solvers.

* :func:`reference_integrate` is classical fixed-step RK4 on ``ln rho``,
  compiled with numba and carrying its own copy of the right-hand side.
* :func:`field_residuals` differences the closed-form nutrient and pressure
  profiles and measures how fast the PDE residuals shrink under refinement.
* :func:`periodic_field_check` does the same along a periodic orbit, and
  also compares the orbit's time derivative with the boundary pressure flux.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .integrator import IntegratorConfig, Trajectory, integrate
from .model import ModelParams, forcing_eval, pressure_field, pressure_gradient, sigma_field

__all__ = [
    "ResidualReport",
    "PeriodicFieldReport",
    "reference_integrate",
    "field_residuals",
    "periodic_field_check",
]

MIN_ORDER = 1.9


@numba.njit(cache=True)
def _shape(r):
    if r < 1e-4:
        r2 = r * r
        return 1.0 - r2 / 3.0 + 2.0 * r2 * r2 / 15.0
    return math.tanh(r) / r


@numba.njit(cache=True)
def _log_growth(t, u, mu, st, omega, a0, ca, sa):
    phi = a0
    for k in range(ca.shape[0]):
        phi += ca[k] * math.cos((k + 1) * omega * t) + sa[k] * math.sin((k + 1) * omega * t)
    return mu * (phi * _shape(math.exp(u)) - st)


@numba.njit(cache=True)
def _rk4_log(u0, t0, h, n, record_every, mu, st, omega, a0, ca, sa):
    n_out = n // record_every + 1
    if n % record_every:
        n_out += 1
    ts = np.empty(n_out)
    us = np.empty(n_out)
    ts[0] = t0
    us[0] = u0
    u = u0
    j = 1
    for i in range(n):
        t = t0 + i * h
        k1 = _log_growth(t, u, mu, st, omega, a0, ca, sa)
        k2 = _log_growth(t + 0.5 * h, u + 0.5 * h * k1, mu, st, omega, a0, ca, sa)
        k3 = _log_growth(t + 0.5 * h, u + 0.5 * h * k2, mu, st, omega, a0, ca, sa)
        k4 = _log_growth(t + h, u + h * k3, mu, st, omega, a0, ca, sa)
        u += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if (i + 1) % record_every == 0 or i + 1 == n:
            ts[j] = t0 + (i + 1) * h
            us[j] = u
            j += 1
    return ts[:j], us[:j]


def reference_integrate(
    params: ModelParams,
    rho0: float,
    t0: float,
    t1: float,
    h: float,
    max_records: int = 1024,
) -> Trajectory:
    """Fixed-step RK4 reference solution, recording at most ``max_records + 1`` samples.

    ``h`` must divide ``t1 - t0`` up to rounding; the step count is rounded to
    the nearest integer and the last sample sits exactly at ``t1`` in exact
    arithmetic.
    """
    if rho0 <= 0:
        raise ValueError("reference_integrate needs rho0 > 0")
    if h <= 0 or t1 <= t0:
        raise ValueError("reference_integrate needs h > 0 and t1 > t0")
    n = int(round((t1 - t0) / h))
    if n < 1 or abs(n * h - (t1 - t0)) > 1e-9 * (t1 - t0):
        raise ValueError("h must divide the span")
    h = (t1 - t0) / n
    f = params.forcing
    ts, us = _rk4_log(
        math.log(rho0),
        float(t0),
        h,
        n,
        max(1, n // max_records),
        params.mu,
        params.sigma_tilde,
        2.0 * math.pi / f.period,
        f.a0,
        np.asarray(f.cos, dtype=float),
        np.asarray(f.sin, dtype=float),
    )
    return Trajectory(t=ts, rho=np.exp(us), accepted=n, method="rk4-fixed")


@dataclass
class ResidualReport:
    """Finite-difference residuals of the closed-form fields on three nested grids.

    Arrays are indexed by refinement level (spacing ``h``, ``h/2``, ``h/4``).
    """

    h: np.ndarray
    sigma_residual: np.ndarray
    pressure_residual: np.ndarray
    sigma_neumann: np.ndarray
    pressure_neumann: np.ndarray
    sigma_dirichlet: float
    pressure_dirichlet: float
    sigma_order: float
    pressure_order: float
    neumann_order: float

    @property
    def order(self) -> float:
        return min(self.sigma_order, self.pressure_order)

    @property
    def passed(self) -> bool:
        return self.order >= MIN_ORDER and self.neumann_order >= MIN_ORDER


def _observed_order(errors: np.ndarray) -> float:
    errors = np.asarray(errors, dtype=float)
    if np.all(errors == 0):
        return math.inf
    with np.errstate(divide="ignore"):
        ratios = np.log2(errors[:-1] / errors[1:])
    return float(np.min(ratios))


def _residuals_on_grid(params: ModelParams, t: float, rho: float, n: int):
    y = np.linspace(0.0, rho, n)
    dy = y[1] - y[0]
    s = sigma_field(params, t, rho, y)
    p = pressure_field(params, t, rho, y)
    s_yy = (s[2:] - 2.0 * s[1:-1] + s[:-2]) / dy**2
    p_yy = (p[2:] - 2.0 * p[1:-1] + p[:-2]) / dy**2
    r_sigma = np.max(np.abs(s_yy - s[1:-1]))
    r_p = np.max(np.abs(-p_yy - params.mu * (s[1:-1] - params.sigma_tilde)))
    # one-sided second-order first derivative at the impermeable base
    ds0 = (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * dy)
    dp0 = (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * dy)
    phi = forcing_eval(params.forcing, t)
    return dy, r_sigma, r_p, abs(ds0), abs(dp0), abs(s[-1] - phi), abs(p[-1])


def field_residuals(
    params: ModelParams, t: float, rho: float, grid_size: int = 257
) -> ResidualReport:
    """Residuals of ``sigma'' = sigma`` and ``-p'' = mu (sigma - st)`` plus boundary data.

    The grid is refined twice by halving the spacing (``n``, ``2n - 1``,
    ``4n - 3`` points) and the observed order is the smallest log2 ratio of
    successive errors.
    """
    if rho <= 0:
        raise ValueError("field_residuals needs rho > 0")
    if grid_size < 9 or grid_size % 2 == 0:
        raise ValueError("grid_size must be odd and at least 9")
    sizes = [grid_size, 2 * grid_size - 1, 4 * grid_size - 3]
    rows = [_residuals_on_grid(params, t, rho, n) for n in sizes]
    h, rs, rp, ns, np_, ds, dp = (np.array(col) for col in zip(*rows))
    neumann = min(_observed_order(ns), _observed_order(np_))
    return ResidualReport(
        h=h,
        sigma_residual=rs,
        pressure_residual=rp,
        sigma_neumann=ns,
        pressure_neumann=np_,
        sigma_dirichlet=float(np.max(ds)),
        pressure_dirichlet=float(np.max(dp)),
        sigma_order=_observed_order(rs),
        pressure_order=_observed_order(rp),
        neumann_order=neumann,
    )


@dataclass
class PeriodicFieldReport:
    """Field checks along a periodic orbit."""

    phases: np.ndarray
    min_order: float
    max_sigma_residual: float
    max_pressure_residual: float
    periodicity_residual: float
    velocity_residual: float
    boundary_residual: float
    residuals: list[ResidualReport] = field(default_factory=list, repr=False)

    def passed(self, periodicity_tol: float, velocity_tol: float = 1e-6) -> bool:
        return (
            self.min_order >= MIN_ORDER
            and self.periodicity_residual <= periodicity_tol
            and self.velocity_residual <= velocity_tol
            and self.boundary_residual == 0.0
        )


def _periodic_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    # five-point central stencil on a periodic sample (last sample == first)
    v = values[:-1]
    d = (
        -np.roll(v, -2) + 8.0 * np.roll(v, -1) - 8.0 * np.roll(v, 1) + np.roll(v, 2)
    ) / (12.0 * dt)
    return np.append(d, d[0])


def periodic_field_check(
    params: ModelParams,
    sol,
    grid_size: int = 257,
    n_phases: int = 8,
    cfg: IntegratorConfig | None = None,
) -> PeriodicFieldReport:
    """Check the reconstructed periodic nutrient and pressure fields.

    ``sol`` is a :class:`~flattumor.periodic.PeriodicSolution` with uniformly
    spaced orbit samples covering ``[0, T]``. The check

    * runs :func:`field_residuals` at ``n_phases`` evenly spaced orbit samples,
    * integrates from the fixed point to each of those phases and one period
      further, and compares sigma and p at fixed depth fractions (the fields
      must repeat),
    * differentiates the sampled orbit and compares with ``-dp/dy`` at the
      boundary, relative to the velocity scale ``mu * rho_max * Phi*``.
    """
    T = params.period
    t = np.asarray(sol.t, dtype=float)
    rho = np.asarray(sol.rho, dtype=float)
    picks = np.unique(np.linspace(0, len(t) - 1, n_phases, endpoint=False).astype(int))

    fractions = np.linspace(0.0, 1.0, 5)
    reports = []
    worst_period = 0.0
    worst_boundary = 0.0
    for i in picks:
        # land steps exactly on t_i and t_i + T so no interpolation error enters
        ti = float(t[i])
        a = sol.rho_star_0 if ti == 0.0 else integrate(params, sol.rho_star_0, 0.0, ti, cfg).final
        b = integrate(params, a, ti, ti + T, cfg).final
        reports.append(field_residuals(params, ti, a, grid_size))
        s_a = sigma_field(params, ti, a, fractions * a)
        s_b = sigma_field(params, ti + T, b, fractions * b)
        p_a = pressure_field(params, ti, a, fractions * a)
        p_b = pressure_field(params, ti + T, b, fractions * b)
        scale = max(float(np.max(np.abs(s_a))), float(np.max(np.abs(p_a))), 1.0)
        worst_period = max(
            worst_period,
            float(np.max(np.abs(s_a - s_b))) / scale,
            float(np.max(np.abs(p_a - p_b))) / scale,
        )
        worst_boundary = max(
            worst_boundary,
            abs(float(s_a[-1]) - forcing_eval(params.forcing, ti)),
            abs(float(p_a[-1])),
        )

    dt = t[1] - t[0]
    drho = _periodic_derivative(rho, dt)
    flux = np.array([-pressure_gradient(params, ti, ri, ri) for ti, ri in zip(t, rho)])
    vscale = params.mu * float(np.max(rho)) * params.forcing.phi_star
    return PeriodicFieldReport(
        phases=t[picks],
        min_order=min(r.order for r in reports),
        max_sigma_residual=max(float(r.sigma_residual[0]) for r in reports),
        max_pressure_residual=max(float(r.pressure_residual[0]) for r in reports),
        periodicity_residual=worst_period,
        velocity_residual=float(np.max(np.abs(drho - flux))) / vscale,
        boundary_residual=worst_boundary,
        residuals=reports,
    )
