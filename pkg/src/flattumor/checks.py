"""Property checks over parameter draws, shared by ``flattumor verify`` and the tests.

Each ``check_*`` function returns a :class:`CheckResult` holding the measured
numbers next to the pass/fail verdict, so reports can show how close a check
came to its threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .integrator import IntegratorConfig, integrate, poincare_map
from .model import ForcingFunction, ModelParams, growth_envelope
from .oracle import field_residuals, periodic_field_check, reference_integrate
from .periodic import (
    Bracket,
    PeriodicSolution,
    compute_bracket,
    convergence_rate,
    find_periodic,
    verify_periodicity,
)
from .regime import (
    EXTINCTION_STRICT,
    PERSISTENCE,
    ceiling_horizon,
    classify,
    extinction_run,
)

ENVELOPE_SLACK = 1e-9
ORACLE_RTOL = 1e-8
ORACLE_STEPS = 10**6
SELF_MAP_EPS = 1e-8
DEVIATION_FLOOR = 1e-9
CONVERGENCE_FACTORS = (0.25, 0.5, 2.0, 4.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    skipped: bool = False

    @property
    def status(self) -> str:
        if self.skipped:
            return "skip"
        return "pass" if self.passed else "fail"

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "measured": self.measured}


def skipped(name: str, reason: str) -> CheckResult:
    return CheckResult(name, True, {"reason": reason}, skipped=True)


# --- parameter draws -------------------------------------------------------


def random_forcing(
    rng: np.random.Generator,
    max_harmonics: int = 3,
    a0_range: tuple[float, float] = (0.5, 2.0),
    period_range: tuple[float, float] = (0.5, 2.0),
    max_rel_amplitude: float = 0.8,
) -> ForcingFunction:
    """Fourier forcing whose coefficient sum stays below ``max_rel_amplitude * a0``."""
    a0 = rng.uniform(*a0_range)
    period = rng.uniform(*period_range)
    k = int(rng.integers(0, max_harmonics + 1))
    if k == 0:
        return ForcingFunction(period, a0)
    raw = rng.uniform(-1.0, 1.0, size=(2, k))
    budget = rng.uniform(0.1, max_rel_amplitude) * a0
    raw *= budget / np.sum(np.abs(raw))
    return ForcingFunction(period, a0, tuple(raw[0]), tuple(raw[1]))


def random_params(
    rng: np.random.Generator,
    regime: str | None = None,
    mu_range: tuple[float, float] = (0.2, 2.0),
    **forcing_kw,
) -> ModelParams:
    """Random parameters; ``regime`` pins the threshold relative to the mean forcing."""
    f = random_forcing(rng, **forcing_kw)
    mu = rng.uniform(*mu_range)
    if regime == PERSISTENCE:
        st = f.mean * rng.uniform(0.2, 0.9)
    elif regime == EXTINCTION_STRICT:
        st = f.mean * rng.uniform(1.1, 2.0)
    else:
        st = f.mean * rng.uniform(0.2, 2.0)
    return ModelParams(mu, st, f)


def oracle_grid() -> list[ModelParams]:
    """Twenty fixed cases: four rates times five forcings of increasing roughness."""
    cases = []
    periods = (0.5, 1.0, 2.0, 1.0, 1.5)
    amplitudes = (0.2, 0.5, 0.8, 0.6, 0.4)
    thresholds = (0.3, 0.8, 1.2, 0.6, 1.0)
    for mu in (0.5, 1.0, 2.0, 4.0):
        for j in range(5):
            k = j % 3 + 1
            amp = amplitudes[j]
            f = ForcingFunction(periods[j], 1.0, (amp / k,) * k, (0.1 * amp / k,) * k)
            cases.append(ModelParams(mu, thresholds[j], f))
    return cases


# --- checks ----------------------------------------------------------------


def envelope_violations(
    params: ModelParams, rho0: float, periods: float, cfg: IntegratorConfig | None, samples: int = 257
) -> tuple[int, float]:
    """Samples outside the growth envelope, and the worst relative excursion."""
    span = periods * params.period
    ts = np.linspace(0.0, span, samples)
    traj = integrate(params, rho0, 0.0, span, cfg, t_eval=ts)
    worst = -math.inf
    bad = traj.envelope_violations
    for t, r in zip(traj.t, traj.rho):
        lo, hi = growth_envelope(params, rho0, float(t))
        excess = max(lo / r - 1.0, r / hi - 1.0)
        worst = max(worst, excess)
        if excess > ENVELOPE_SLACK:
            bad += 1
    return bad, worst


def check_envelope(
    draws: list[tuple[ModelParams, float]],
    cfg: IntegratorConfig | None = None,
    periods: float = 5.0,
) -> CheckResult:
    total = 0
    worst = -math.inf
    for params, rho0 in draws:
        bad, w = envelope_violations(params, rho0, periods, cfg)
        total += bad
        worst = max(worst, w)
    return CheckResult(
        "growth_envelope",
        total == 0,
        {"draws": len(draws), "violations": total, "worst_relative_excess": worst},
    )


def check_comparison(
    params: ModelParams,
    starts: list[float],
    cfg: IntegratorConfig | None = None,
    periods: float = 3.0,
) -> CheckResult:
    """Trajectories from ordered starts stay strictly ordered."""
    starts = sorted(starts)
    ts = np.linspace(0.0, periods * params.period, 129)
    paths = np.array([integrate(params, r, 0.0, ts[-1], cfg, t_eval=ts).rho for r in starts])
    gaps = np.diff(paths, axis=0)
    return CheckResult(
        "comparison",
        bool(np.all(gaps > 0)),
        {"starts": starts, "min_gap": float(np.min(gaps))},
    )


def check_oracle_equivalence(
    cases: list[ModelParams],
    cfg: IntegratorConfig | None = None,
    rho0: float = 1.0,
    steps: int = ORACLE_STEPS,
    rtol: float = ORACLE_RTOL,
) -> CheckResult:
    """Adaptive period map against fixed-step RK4 with ``T / steps``."""
    errors = []
    for p in cases:
        ref = reference_integrate(p, rho0, 0.0, p.period, p.period / steps).final
        got = poincare_map(p, rho0, cfg)
        errors.append(abs(got - ref) / ref)
    worst = max(errors)
    return CheckResult(
        "oracle_equivalence",
        worst <= rtol,
        {"cases": len(cases), "max_relative_error": worst, "tolerance": rtol},
    )


def check_field_residuals(params: ModelParams, rho: float, t: float = 0.0, grid_size: int = 257) -> CheckResult:
    rep = field_residuals(params, t, rho, grid_size)
    return CheckResult(
        "field_residuals",
        rep.passed and rep.pressure_dirichlet == 0.0,
        {
            "sigma_residual": rep.sigma_residual.tolist(),
            "pressure_residual": rep.pressure_residual.tolist(),
            "order": rep.order,
            "neumann_order": rep.neumann_order,
            "sigma_dirichlet": rep.sigma_dirichlet,
            "pressure_dirichlet": rep.pressure_dirichlet,
        },
    )


def check_bracket_self_map(
    params: ModelParams, cfg: IntegratorConfig | None = None, n: int = 32
) -> CheckResult:
    """The period map sends the invariant bracket into itself and is increasing there."""
    b = compute_bracket(params)
    xs = np.linspace(b.x_bar, b.x2, n)
    images = np.array([poincare_map(params, float(x), cfg) for x in xs])
    eps = SELF_MAP_EPS * b.x2
    inside = bool(np.all((images >= b.x_bar - eps) & (images <= b.x2 + eps)))
    increasing = bool(np.all(np.diff(images) > 0))
    return CheckResult(
        "bracket_self_map",
        inside and increasing,
        {
            "x_bar": b.x_bar,
            "x2": b.x2,
            "samples": n,
            "min_image": float(images.min()),
            "max_image": float(images.max()),
            "inside": inside,
            "increasing": increasing,
        },
    )


def convergence_probe(
    params: ModelParams,
    sol: PeriodicSolution,
    factor: float,
    n_periods: int = 50,
    cfg: IntegratorConfig | None = None,
) -> dict:
    """Follow ``rho0 = factor * rho*(0)`` for ``n_periods`` periods against the rate bound.

    The deviation is measured in the form the stability estimate controls,
    ``|rho(nT)/rho*(nT) - 1|``, with ``rho*(nT) = rho*(0)``. Iterating the
    period map keeps every sample on a step boundary.
    """
    rho0 = factor * sol.rho_star_0
    rate = convergence_rate(params, sol, rho0)
    T = params.period
    rho = [rho0]
    for _ in range(n_periods):
        rho.append(poincare_map(params, rho[-1], cfg))
    rho = np.array(rho)
    y = np.log(rho / sol.rho_star_0)
    dev = np.abs(np.expm1(y))
    n = np.arange(n_periods + 1)
    bound = rate.C * np.exp(-rate.delta * n * T)
    within = bool(np.all(dev <= bound * (1.0 + 1e-9) + DEVIATION_FLOOR))
    resolved = np.abs(y) > DEVIATION_FLOOR
    sign_kept = bool(np.all(np.sign(y[resolved]) == np.sign(rate.y0)))
    mono = bool(np.all(np.abs(y[1:]) <= np.abs(y[:-1]) * (1.0 + 1e-9) + DEVIATION_FLOOR))
    usable = (n > 0) & (dev > 1e3 * DEVIATION_FLOOR)
    if np.any(usable):
        measured = float(np.min(np.log(rate.C / dev[usable]) / (n[usable] * T)))
    else:
        measured = math.inf
    return {
        "factor": factor,
        "delta": rate.delta,
        "C": rate.C,
        "y0": rate.y0,
        "final_deviation": float(dev[-1]),
        "final_bound": float(bound[-1]),
        "measured_rate": measured,
        "within_bound": within,
        "sign_kept": sign_kept,
        "monotone": mono,
        "deviation": dev.tolist(),
    }


def check_convergence(
    params: ModelParams,
    sol: PeriodicSolution,
    n_periods: int = 50,
    cfg: IntegratorConfig | None = None,
    factors: tuple[float, ...] = CONVERGENCE_FACTORS,
) -> CheckResult:
    probes = [convergence_probe(params, sol, c, n_periods, cfg) for c in factors]
    ok = all(p["within_bound"] and p["sign_kept"] and p["monotone"] for p in probes)
    return CheckResult("convergence_envelope", ok, {"periods": n_periods, "probes": probes})


def check_periodicity(
    params: ModelParams, sol: PeriodicSolution, cfg: IntegratorConfig | None = None
) -> CheckResult:
    residual = verify_periodicity(sol, params, cfg)
    perturbed = verify_periodicity(sol, params, cfg, rho0=1.01 * sol.rho_star_0)
    return CheckResult(
        "periodicity",
        residual < 10 * sol.tol and perturbed > residual,
        {"residual": residual, "perturbed_residual": perturbed, "tolerance": 10 * sol.tol},
    )


def check_periodic_fields(
    params: ModelParams, sol: PeriodicSolution, cfg: IntegratorConfig | None = None
) -> CheckResult:
    rep = periodic_field_check(params, sol, cfg=cfg)
    tol = 10 * sol.tol
    return CheckResult(
        "periodic_fields",
        rep.passed(periodicity_tol=tol),
        {
            "min_order": rep.min_order,
            "periodicity_residual": rep.periodicity_residual,
            "velocity_residual": rep.velocity_residual,
            "boundary_residual": rep.boundary_residual,
            "periodicity_tolerance": tol,
            "velocity_tolerance": 1e-6,
        },
    )


def multistart_fixed_points(
    params: ModelParams,
    rng: np.random.Generator,
    probes: int = 10,
    cfg: IntegratorConfig | None = None,
    tol: float = 1e-10,
) -> np.ndarray:
    """Fixed points from random sub-brackets of the invariant interval.

    An endpoint whose sign test fails is pushed back to the full bracket's
    endpoint, so every sub-bracket still encloses a fixed point.
    """
    full = compute_bracket(params)
    found = []
    for _ in range(probes):
        a, b = np.sort(rng.uniform(full.x_bar, full.x2, size=2))
        lo = a if poincare_map(params, a, cfg) >= a else full.x_bar
        hi = b if poincare_map(params, b, cfg) <= b else full.x2
        if not lo < hi:
            lo, hi = full.x_bar, full.x2
        found.append(find_periodic(params, cfg, tol, bracket=Bracket(lo, hi)).rho_star_0)
    return np.array(found)


def check_uniqueness(
    params: ModelParams,
    rng: np.random.Generator,
    cfg: IntegratorConfig | None = None,
    tol: float = 1e-10,
    probes: int = 10,
) -> CheckResult:
    pts = multistart_fixed_points(params, rng, probes, cfg, tol)
    spread = float((pts.max() - pts.min()) / pts.mean())
    return CheckResult(
        "uniqueness",
        spread <= 10 * tol,
        {"probes": probes, "relative_spread": spread, "tolerance": 10 * tol},
    )


def check_extinction(
    params: ModelParams,
    rho0: float,
    cfg: IntegratorConfig | None = None,
    n_periods: int | None = None,
) -> CheckResult:
    report = classify(params)
    cert = extinction_run(params, rho0, n_periods, cfg, raise_on_violation=False)
    measured = {
        "regime": report.regime,
        "periods": int(cert.rho.shape[0] - 1),
        "violations": cert.violations,
        "first_below": cert.first_below,
        "final_rho": float(cert.period_values[-1]),
        "status": cert.status,
    }
    if report.regime == EXTINCTION_STRICT:
        horizon = ceiling_horizon(params, cert.threshold)
        measured["horizon"] = horizon
        ok = cert.violations == 0 and cert.first_below is not None and cert.first_below <= horizon
    else:
        ok = cert.violations == 0
    return CheckResult("extinction_bounds", ok, measured)
