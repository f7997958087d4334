"""Extinction versus persistence, decided by the mean nutrient supply.

Every positive solution dies out when ``sigma_tilde >= mean(Phi)``; otherwise
all positive solutions approach the unique periodic orbit. The maximum of
``Phi`` plays no role in the classification.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .integrator import IntegratorConfig, integrate
from .model import ModelParams, growth_envelope
from .periodic import RegimeError

__all__ = [
    "EXTINCTION_STRICT",
    "EXTINCTION_CRITICAL",
    "PERSISTENCE",
    "RegimeReport",
    "ExtinctionCertificate",
    "classify",
    "extinction_run",
    "ceiling_horizon",
    "growth_envelope",
    "BoundViolation",
]

EXTINCTION_STRICT = "extinction-strict"
EXTINCTION_CRITICAL = "extinction-critical"
PERSISTENCE = "persistence"

CEILING_SLACK = 1e-9
CRITICAL_PERIOD_CAP = 10_000
PHASES_PER_PERIOD = 8


class BoundViolation(RuntimeError):
    """A decay bound failed beyond slack; points at an integrator or formula bug."""

    def __init__(self, message: str, certificate: "ExtinctionCertificate"):
        super().__init__(message)
        self.certificate = certificate


@dataclass(frozen=True)
class RegimeReport:
    phi_bar: float
    phi_star: float
    phi_lower: float
    sigma_tilde: float
    regime: str
    margin: float

    def as_dict(self) -> dict:
        return {
            "phi_bar": self.phi_bar,
            "phi_star": self.phi_star,
            "phi_lower": self.phi_lower,
            "sigma_tilde": self.sigma_tilde,
            "regime": self.regime,
            "margin": self.margin,
        }


@dataclass
class ExtinctionCertificate:
    """Period-by-period record of an extinction run.

    ``rho`` has shape ``(n_periods + 1, PHASES_PER_PERIOD)``: row ``n`` holds
    ``rho(nT + s)`` for the phases ``s`` in ``phases`` (row ``n_periods`` only
    its first entry is meaningful). ``ceiling`` is the strict-regime bound per
    period and is empty in the critical regime.
    """

    regime: str
    rho0: float
    phases: np.ndarray
    rho: np.ndarray
    ceiling: np.ndarray
    threshold: float
    first_below: int | None
    violations: int
    status: str
    notes: list[str] = field(default_factory=list)

    @property
    def period_values(self) -> np.ndarray:
        return self.rho[:, 0]


def classify(params: ModelParams, tol: float = 1e-12) -> RegimeReport:
    """Compare the threshold with the exact period mean ``a0``."""
    f = params.forcing
    margin = f.mean - params.sigma_tilde
    if abs(margin) <= tol * f.mean:
        regime = EXTINCTION_CRITICAL
    elif margin > 0:
        regime = PERSISTENCE
    else:
        regime = EXTINCTION_STRICT
    return RegimeReport(
        phi_bar=f.mean,
        phi_star=f.phi_star,
        phi_lower=f.phi_lower,
        sigma_tilde=params.sigma_tilde,
        regime=regime,
        margin=margin,
    )


def ceiling_horizon(params: ModelParams, factor: float = 1e-8) -> int:
    """Periods after which the strict-regime ceiling drops below ``factor * rho0``."""
    mu, T = params.mu, params.period
    gap = params.sigma_tilde - params.forcing.mean
    if gap <= 0:
        raise RegimeError("ceiling horizon exists only when sigma_tilde > mean forcing")
    n = (math.log(1.0 / factor) + mu * T * params.forcing.mean) / (mu * T * gap)
    return max(1, math.ceil(n))


def extinction_run(
    params: ModelParams,
    rho0: float,
    n_periods: int | None = None,
    cfg: IntegratorConfig | None = None,
    threshold: float = 1e-8,
    tol: float = 1e-12,
    raise_on_violation: bool = True,
) -> ExtinctionCertificate:
    """Integrate an extinction-regime trajectory and check the decay bounds.

    In the strict regime each sample ``rho(nT + s)`` must stay below
    ``rho0 exp(mu T mean) exp(mu n T (mean - st))``. In the critical regime
    the period samples must be nonincreasing and every value within a period
    bounded by the period start times ``exp(mu (Phi* - st) T)``.

    ``n_periods`` defaults to the ceiling horizon (strict) or 200 (critical),
    and is capped at 10^4 in the critical regime. ``threshold`` is relative to
    ``rho0``.
    """
    report = classify(params, tol)
    if report.regime == PERSISTENCE:
        raise RegimeError(
            f"extinction_run needs sigma_tilde >= mean forcing (margin {report.margin:.6g})"
        )
    strict = report.regime == EXTINCTION_STRICT
    if n_periods is None:
        n_periods = ceiling_horizon(params, threshold) if strict else 200
    if not strict:
        n_periods = min(n_periods, CRITICAL_PERIOD_CAP)
    if n_periods < 1:
        raise ValueError("n_periods must be at least 1")

    T, mu, st = params.period, params.mu, params.sigma_tilde
    phases = T * np.arange(PHASES_PER_PERIOD) / PHASES_PER_PERIOD
    times = (T * np.arange(n_periods)[:, None] + phases[None, :]).ravel()
    times = np.append(times, n_periods * T)
    traj = integrate(params, rho0, 0.0, n_periods * T, cfg, t_eval=times)
    rho = np.full((n_periods + 1, PHASES_PER_PERIOD), np.nan)
    rho.ravel()[: times.size] = traj.rho

    notes: list[str] = []
    violations = 0
    n_idx = np.arange(n_periods + 1)
    if strict:
        ceiling = rho0 * np.exp(mu * T * report.phi_bar + mu * n_idx * T * report.margin)
        over = rho > ceiling[:, None] * (1.0 + CEILING_SLACK)
        violations = int(np.count_nonzero(over))
    else:
        ceiling = np.empty(0)
        starts = rho[:, 0]
        grew = starts[1:] > starts[:-1] * (1.0 + CEILING_SLACK)
        bound = starts[:-1] * math.exp(mu * (report.phi_star - st) * T) * (1.0 + CEILING_SLACK)
        # the next period start belongs to [a, a + T] as well
        within = np.column_stack([rho[:-1], starts[1:]])
        above = within > bound[:, None]
        violations = int(np.count_nonzero(grew) + np.count_nonzero(above))

    below = np.nonzero(rho[:, 0] < threshold * rho0)[0]
    first_below = int(below[0]) if below.size else None
    if violations:
        status = "bound-violated"
    elif first_below is not None:
        status = "below-threshold"
    else:
        status = "decaying" if not strict else "above-threshold"
        if not strict:
            notes.append("decaying, not yet below threshold")
    cert = ExtinctionCertificate(
        regime=report.regime,
        rho0=rho0,
        phases=phases,
        rho=rho,
        ceiling=ceiling,
        threshold=threshold,
        first_below=first_below,
        violations=violations,
        status=status,
        notes=notes,
    )
    if violations and raise_on_violation:
        raise BoundViolation(f"{violations} samples broke the decay bounds", cert)
    return cert
