import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlbermudan.control import (
    EuropeanControl,
    OuterControl,
    black_scholes_call,
    cv_adjust,
    european_max_call,
    european_max_call_quad,
    make_controls,
)
from mlbermudan.model import ModelParams, TimeGrid
from mlbermudan.rng import Stream

BENCH = ModelParams()


def test_zero_volatility_is_deterministic():
    p = ModelParams(sigma=0.0)
    x = np.array([100.0, 120.0, 90.0, 80.0, 110.0])
    expect = math.exp(-0.05 * 3) * max(120 * math.exp(-0.05 * 2) - 100, 0)
    assert european_max_call(x, 1.0, 3.0, 100.0, p) == pytest.approx(expect, rel=1e-15)


@pytest.mark.parametrize("x", [60.0, 90.0, 100.0, 115.0, 180.0])
@pytest.mark.parametrize("t", [0.0, 1.0, 2.9])
def test_single_asset_matches_black_scholes(x, t):
    p = ModelParams(d=1, x0=(100.0,))
    got = float(european_max_call(np.array([x]), t, 3.0, 100.0, p))
    assert got == pytest.approx(black_scholes_call(x, t, 3.0, 100.0, p), abs=1e-8)


@pytest.mark.parametrize(
    "x,t",
    [
        ((100.0,) * 5, 0.0),
        ((80.0, 90.0, 100.0, 110.0, 120.0), 1.0),
        ((150.0, 60.0, 60.0, 60.0, 60.0), 2.0),
        ((40.0,) * 5, 0.0),
    ],
)
def test_quadrature_rule_matches_adaptive_reference(x, t):
    x = np.array(x)
    ref, err = european_max_call_quad(x, t, 3.0, 100.0, BENCH)
    assert err < 1e-9 * max(ref, 1.0)
    assert float(european_max_call(x, t, 3.0, 100.0, BENCH)) == pytest.approx(ref, rel=1e-8, abs=1e-10)


def test_vectorised_evaluation_matches_rows(rng):
    x = rng.uniform(70, 130, (6, 5))
    rows = [float(european_max_call(xi, 1.0, 3.0, 100.0, BENCH)) for xi in x]
    np.testing.assert_allclose(european_max_call(x, 1.0, 3.0, 100.0, BENCH), rows, rtol=1e-14)


def test_benchmark_value_against_monte_carlo():
    gen = Stream(99).generator()
    T, kappa = 3.0, 100.0
    s = BENCH.sigma * math.sqrt(T)
    total, total2, n = 0.0, 0.0, 0
    for _ in range(10):
        xi = gen.standard_normal((1_000_000, 5))
        xt = 100.0 * np.exp(BENCH.drift * T + s * xi)
        pay = math.exp(-BENCH.r * T) * np.maximum(xt.max(axis=1) - kappa, 0.0)
        total += pay.sum()
        total2 += (pay * pay).sum()
        n += len(pay)
    mean = total / n
    se = math.sqrt((total2 / n - mean**2) / n)
    value = float(european_max_call(np.full(5, 100.0), 0.0, T, kappa, BENCH))
    assert abs(value - mean) <= 3 * se


def test_value_bounds():
    x = np.array([80.0, 90.0, 100.0, 110.0, 120.0])
    T = 3.0
    disc = math.exp(-BENCH.r * T)
    e_max = float(european_max_call(x, 0.0, T, 0.0, BENCH)) / disc  # strike 0 gives E[max X_T]
    v = float(european_max_call(x, 0.0, T, 100.0, BENCH))
    assert disc * max(e_max - 100.0, 0.0) <= v <= disc * e_max
    p1 = ModelParams(d=1, x0=(100.0,))
    assert v >= max(black_scholes_call(xi, 0.0, T, 100.0, p1) for xi in x)


@given(st.integers(0, 4), st.floats(50.0, 150.0), st.floats(0.5, 20.0))
def test_monotone_in_each_asset(i, base, bump):
    x = np.full(5, base)
    up = x.copy()
    up[i] += bump
    assert european_max_call(up, 0.0, 3.0, 100.0, BENCH) >= european_max_call(x, 0.0, 3.0, 100.0, BENCH) - 1e-12


def test_monotone_in_volatility():
    x = np.array([80.0, 90.0, 100.0, 110.0, 120.0])
    vals = [float(european_max_call(x, 0.0, 3.0, 100.0, ModelParams(sigma=s))) for s in np.linspace(0.0, 0.6, 13)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_after_maturity_rejected():
    with pytest.raises(ValueError):
        european_max_call(np.full(5, 100.0), 3.5, 3.0, 100.0, BENCH)


def test_discounted_value_is_a_martingale(rng):
    grid = TimeGrid.uniform(3.0, 3)
    eu = EuropeanControl(BENCH, grid, 100.0)
    xi = rng.standard_normal((50_000, 5))
    z1 = 100.0 * np.exp(BENCH.drift + BENCH.sigma * xi)
    v = eu(1, z1)
    se = v.std() / math.sqrt(len(v))
    assert abs(v.mean() - float(eu(0, np.full((1, 5), 100.0))[0])) <= 3 * se


# cv_adjust ------------------------------------------------------------------------


def test_zero_coefficient_leaves_sample_unchanged(rng):
    raw, cv = rng.normal(size=50), rng.normal(size=50)
    np.testing.assert_array_equal(cv_adjust(raw, cv, 0.3, beta=0.0), raw)


def test_perfect_control_removes_all_variance(rng):
    raw = rng.normal(5.0, 2.0, 100)
    out = cv_adjust(raw, raw, 5.0, beta=1.0)
    assert np.ptp(out) <= 1e-14 and out.mean() == pytest.approx(5.0, rel=1e-15)
    out = cv_adjust(raw, raw, 5.0, beta="auto")
    assert np.ptp(out) <= 1e-12


def test_constant_control_gets_zero_coefficient(rng):
    raw = rng.normal(size=30)
    np.testing.assert_array_equal(cv_adjust(raw, np.full(30, 2.0), 1.0, beta="auto"), raw)


def test_unknown_beta_rejected():
    with pytest.raises(ValueError):
        cv_adjust([1.0, 2.0], [1.0, 3.0], 0.0, beta="optimal")


@given(st.floats(-3.0, 3.0), st.floats(-5.0, 5.0), st.integers(2, 40), st.integers(0, 1000))
def test_mean_shift_identity(beta, expectation, n, seed):
    gen = np.random.default_rng(seed)
    raw, cv = gen.normal(size=n), gen.normal(size=n)
    out = cv_adjust(raw, cv, expectation, beta)
    assert out.mean() == pytest.approx(raw.mean() - beta * (cv.mean() - expectation), abs=1e-10)


def test_make_controls_modes():
    grid = TimeGrid.uniform(3.0, 3)
    assert make_controls("off", BENCH, grid, 100.0) == (None, None)
    inner, outer = make_controls("outer", BENCH, grid, 100.0)
    assert inner is None and outer.beta == 1.0
    assert make_controls("outer-beta", BENCH, grid, 100.0)[1].beta == "auto"
    inner, outer = make_controls("inner", BENCH, grid, 100.0)
    assert isinstance(inner, EuropeanControl) and outer.beta == "auto"
    with pytest.raises(ValueError):
        make_controls("both", BENCH, grid, 100.0)


def test_outer_expectation_is_value_at_start():
    grid = TimeGrid.uniform(3.0, 3)
    oc = OuterControl(EuropeanControl(BENCH, grid, 100.0))
    assert oc.expectation == float(european_max_call(np.full(5, 100.0), 0.0, 3.0, 100.0, BENCH))
