"""Flat multi-layer tumor growth under a periodic external nutrient supply."""
from .integrator import IntegratorConfig, Trajectory, integrate, poincare_map
from .model import (
    FieldSnapshot,
    ForcingFunction,
    ModelParams,
    boundary_velocity,
    field_snapshot,
    forcing_eval,
    forcing_extrema,
    g,
    g_inverse,
    g_prime,
    growth_envelope,
    pressure_field,
    rhs,
    sigma_field,
)
from .periodic import (
    Bracket,
    PeriodicSolution,
    RateEstimate,
    compute_bracket,
    convergence_rate,
    find_periodic,
    orbit_extrema,
    verify_periodicity,
)
from .regime import ExtinctionCertificate, RegimeReport, classify, extinction_run

__version__ = "0.1.0"
