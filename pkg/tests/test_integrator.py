import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flattumor import ForcingFunction, IntegratorConfig, ModelParams, g_inverse, integrate, poincare_map
from flattumor.checks import random_params
from flattumor.integrator import IntegrationError, StepLimitExceeded, ToleranceFailure
from flattumor.model import growth_envelope
from flattumor.oracle import reference_integrate

# 30-digit mpmath Taylor-series ODE solutions
RHO_5_DECAY = 0.0059459282380206896  # mu=1, st=2, Phi=1, rho0=1, t=5
F_COSINE_1 = 1.2462871865928258  # mu=1, st=0.5, Phi=1+0.5cos(2 pi t), rho0=1, t=T


def test_stationary_solution(stationary):
    r0 = g_inverse(0.5)
    traj = integrate(stationary, r0, 0.0, 7.3)
    np.testing.assert_allclose(traj.rho, r0, rtol=1e-9)


def test_decay_example():
    p = ModelParams(1.0, 2.0, ForcingFunction.constant(1.0))
    traj = integrate(p, 1.0, 0.0, 5.0)
    assert math.exp(-10) <= traj.final <= math.exp(-5)
    assert traj.final == pytest.approx(RHO_5_DECAY, rel=1e-9)
    assert traj.final == pytest.approx(reference_integrate(p, 1.0, 0.0, 5.0, 1e-5).final, rel=1e-9)


def test_reverse_round_trip(cosine):
    forward = integrate(cosine, 0.7, 0.0, 3.0).final
    back = integrate(cosine, forward, 3.0, 0.0).final
    assert back == pytest.approx(0.7, rel=1e-8)


def test_zero_solution(cosine):
    traj = integrate(cosine, 0.0, 0.0, 2.0, t_eval=[0.0, 1.0, 2.0])
    assert traj.method == "zero"
    assert np.all(traj.rho == 0.0)


def test_samples_at_requested_times(cosine):
    ts = np.linspace(0.0, 2.0, 11)
    traj = integrate(cosine, 1.0, 0.0, 2.0, t_eval=ts)
    np.testing.assert_array_equal(traj.t, ts)
    assert traj.envelope_violations == 0
    assert traj.accepted > 0


def test_dense_output_matches_step_landing(cosine):
    ts = np.linspace(0.0, 1.0, 33)[1:]
    dense = integrate(cosine, 1.0, 0.0, 1.0, t_eval=ts).rho
    exact = [integrate(cosine, 1.0, 0.0, t).final for t in ts]
    np.testing.assert_allclose(dense, exact, rtol=1e-8)


def test_poincare_fixed_point(stationary):
    r0 = g_inverse(0.5)
    assert poincare_map(stationary, r0) == pytest.approx(r0, rel=1e-12)


def test_poincare_against_reference(cosine):
    ref = reference_integrate(cosine, 1.0, 0.0, 1.0, 1e-6).final
    got = poincare_map(cosine, 1.0)
    assert got == pytest.approx(ref, rel=1e-8)
    assert got == pytest.approx(F_COSINE_1, rel=1e-9)


def test_critical_map_does_not_grow():
    p = ModelParams(1.0, 1.0, ForcingFunction(1.0, 1.0, sin=(0.5,)))
    for r0 in np.geomspace(1e-3, 50, 15):
        assert poincare_map(p, r0) <= r0


def test_period_composition(cosine):
    two = integrate(cosine, 0.8, 0.0, 2.0).final
    twice = poincare_map(cosine, poincare_map(cosine, 0.8))
    assert two == pytest.approx(twice, rel=1e-10)


def test_step_limit_keeps_partial(cosine):
    with pytest.raises(StepLimitExceeded) as info:
        integrate(cosine, 1.0, 0.0, 10.0, IntegratorConfig(max_steps=5))
    partial = info.value.trajectory
    assert partial is not None and 0 < len(partial) <= 6
    assert partial.t[-1] < 10.0


def test_tolerance_failure_is_distinct(cosine):
    cfg = IntegratorConfig(rel_tol=1e-300, abs_tol=1e-300)
    with pytest.raises(ToleranceFailure):
        integrate(cosine, 1.0, 0.0, 1.0, cfg)
    assert not issubclass(ToleranceFailure, StepLimitExceeded)
    assert issubclass(ToleranceFailure, IntegrationError)


@pytest.mark.parametrize(
    "kw", [dict(rel_tol=0.0), dict(abs_tol=-1.0), dict(max_step=0.0), dict(max_steps=0)]
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        IntegratorConfig(**kw)


def test_bad_inputs(cosine):
    with pytest.raises(ValueError):
        integrate(cosine, -1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        integrate(cosine, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        integrate(cosine, 1.0, 0.0, 1.0, t_eval=[0.5, 0.2])
    with pytest.raises(ValueError):
        poincare_map(cosine, 0.0)


def test_default_max_step_is_sixteenth_period():
    assert IntegratorConfig().step_cap(2.0) == 0.125
    assert IntegratorConfig(max_step=0.3).step_cap(2.0) == 0.3


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 20))
def test_envelope_holds(seed, rho0):
    p = random_params(np.random.default_rng(seed))
    ts = np.linspace(0.0, 4 * p.period, 41)
    traj = integrate(p, rho0, 0.0, ts[-1], t_eval=ts)
    assert traj.envelope_violations == 0
    for t, r in zip(traj.t, traj.rho):
        lo, hi = growth_envelope(p, rho0, t)
        assert lo * (1 - 1e-9) <= r <= hi * (1 + 1e-9)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 10), st.floats(1.001, 3))
def test_no_crossing(seed, rho0, ratio):
    p = random_params(np.random.default_rng(seed))
    ts = np.linspace(0.0, 3 * p.period, 31)
    a = integrate(p, rho0, 0.0, ts[-1], t_eval=ts).rho
    b = integrate(p, rho0 * ratio, 0.0, ts[-1], t_eval=ts).rho
    assert np.all(a < b)


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 10))
def test_positive(seed, rho0):
    p = random_params(np.random.default_rng(seed), mu_range=(1.0, 4.0))
    traj = integrate(p, rho0, 0.0, 20 * p.period)
    assert np.all(traj.rho > 0)
