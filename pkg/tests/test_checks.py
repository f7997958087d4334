import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flattumor import ForcingFunction, ModelParams, find_periodic
from flattumor.checks import (
    CheckResult,
    check_comparison,
    check_convergence,
    check_periodicity,
    random_forcing,
    random_params,
    skipped,
)
from flattumor.regime import EXTINCTION_STRICT, PERSISTENCE, classify
from flattumor.reporting import dump_json, fmt, orbit_svg, to_jsonable


@given(st.integers(0, 2**32 - 1))
def test_random_forcing_stays_positive(seed):
    f = random_forcing(np.random.default_rng(seed))
    assert f.harmonics <= 3
    assert sum(map(abs, f.cos)) + sum(map(abs, f.sin)) <= 0.8 * f.a0 + 1e-12
    assert f.phi_lower > 0


@given(st.integers(0, 2**32 - 1), st.sampled_from([PERSISTENCE, EXTINCTION_STRICT]))
def test_random_params_regime(seed, regime):
    assert classify(random_params(np.random.default_rng(seed), regime)).regime == regime


def test_check_result_status():
    assert CheckResult("a", True).status == "pass"
    assert CheckResult("a", False).status == "fail"
    s = skipped("b", "why")
    assert s.status == "skip" and s.passed and s.as_dict()["measured"] == {"reason": "why"}


def test_comparison_and_periodicity(cosine, cosine_orbit):
    assert check_comparison(cosine, [2.0, 0.5, 1.0]).passed
    assert check_periodicity(cosine, cosine_orbit).passed


def test_convergence_reports_rates(cosine, cosine_orbit):
    res = check_convergence(cosine, cosine_orbit, n_periods=20)
    assert res.passed
    for probe in res.measured["probes"]:
        assert len(probe["deviation"]) == 21
        assert probe["measured_rate"] >= probe["delta"]


def test_fmt_round_trips():
    for x in (1 / 3, 1e-300, -2.5e17, math.pi):
        assert float(fmt(x)) == x


def test_json_non_finite_becomes_null():
    text = dump_json({"a": math.inf, "b": np.float64(math.nan), "c": np.arange(2), "d": np.bool_(True)})
    assert json.loads(text) == {"a": None, "b": None, "c": [0, 1], "d": True}
    assert to_jsonable((1, 2.5)) == [1, 2.5]


def test_svg_is_deterministic():
    t = np.linspace(0, 1, 9)
    a = orbit_svg(t, 1 + 0.1 * np.sin(2 * np.pi * t), 1 + 0.5 * np.cos(2 * np.pi * t))
    b = orbit_svg(t, 1 + 0.1 * np.sin(2 * np.pi * t), 1 + 0.5 * np.cos(2 * np.pi * t))
    assert a == b and a.count("<polyline") == 2
    flat = orbit_svg(t, np.ones(9), np.ones(9), title="a < b")
    assert "a &lt; b" in flat and "nan" not in flat
