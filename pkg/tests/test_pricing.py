import math

import numpy as np
import pytest

from mlbermudan.estimators import FunctionEstimator, make_trainer, train_mesh
from mlbermudan.model import PathSet
from mlbermudan.oracle import (
    ChainPayoff,
    FiniteChain,
    binomial_chain,
    dp_solve,
    exact_estimator,
    random_chain,
    trained_policy_value,
)
from mlbermudan.payoff import FunctionPayoff
from mlbermudan.pricing import (
    estimate_bias_curve,
    exercise,
    price_single_level,
    run_single_level,
    sample_mean_se,
    stopping_time,
)
from mlbermudan.rng import Stream


def test_zero_estimator_exercises_immediately(bench):
    model, g = bench
    est = FunctionEstimator(lambda j, z: 0.0, model.J, g)
    paths = model.simulate(50, Stream(1))
    tau, value = exercise(est, paths)
    assert np.all(tau == 0)
    res = price_single_level(est, paths)
    assert res.value == float(g(0, model.x0)) and res.std_error == 0.0


def test_infinite_estimator_never_exercises_early(bench):
    model, g = bench
    est = FunctionEstimator(lambda j, z: np.inf, model.J, g)
    paths = model.simulate(50, Stream(1))
    tau, value = exercise(est, paths)
    assert np.all(tau == model.J)
    np.testing.assert_array_equal(value, g(model.J, paths.date(model.J)))


def test_single_path_stopping_time(bench):
    model, g = bench
    est = FunctionEstimator(lambda j, z: np.inf, model.J, g)
    assert stopping_time(est, model.simulate(1, Stream(1)).path(0)) == model.J


def test_ties_count_as_exercise():
    pay = FunctionPayoff(lambda j, z: np.full(z.shape[:-1], 2.0), 2)
    est = FunctionEstimator(lambda j, z: 2.0, 2, pay)
    assert stopping_time(est, np.ones((3, 1))) == 0


def test_degenerate_single_date_chain():
    ch = FiniteChain(values=(np.array([5.0]),), trans=(), gains=(np.array([3.0]),))
    est = FunctionEstimator(lambda j, z: 0.0, 0, ChainPayoff(ch))
    res = price_single_level(est, ch.simulate(10, Stream(0)))
    assert res.value == 3.0 and res.std_error == 0.0


def test_empty_testing_set_rejected(bench):
    model, g = bench
    est = FunctionEstimator(lambda j, z: 0.0, model.J, g)
    with pytest.raises(ValueError):
        price_single_level(est, PathSet(np.empty((model.J + 1, 0, model.d))))


def test_bad_start_rejected(bench):
    model, g = bench
    est = FunctionEstimator(lambda j, z: 0.0, model.J, g)
    with pytest.raises(ValueError):
        exercise(est, model.simulate(3, Stream(0)), start=model.J + 1)


@pytest.mark.parametrize("name,chain", [("binomial", binomial_chain()), ("random", random_chain(5, 3, seed=1))])
def test_exact_continuation_reproduces_dp_decisions(name, chain):
    sol = dp_solve(chain)
    idx = chain.simulate_indices(500, Stream(4))
    paths = chain.simulate(500, Stream(4))
    tau, value = exercise(exact_estimator(chain, sol), paths)
    for i in range(500):
        expect = next(j for j in range(chain.J + 1) if chain.gains[j][idx[j, i]] >= sol.C[j][idx[j, i]])
        assert tau[i] == expect
        assert value[i] == chain.gains[expect][idx[expect, i]]


def test_exact_rule_is_unbiased_at_the_optimum():
    ch = binomial_chain()
    v0 = dp_solve(ch).V0
    est = exact_estimator(ch)
    vals = [price_single_level(est, ch.simulate(400, Stream(8, (rep,)))).value for rep in range(100)]
    mean, se = sample_mean_se(np.array(vals))
    assert mean <= v0 + 3 * se
    assert abs(mean - v0) <= 3 * se


def test_std_error_is_sample_variance_over_n(bench):
    model, g = bench
    res = run_single_level(model, make_trainer("mesh", model, g), 32, 500, Stream(2))
    assert res.std_error**2 == pytest.approx(np.var(res.samples, ddof=1) / 500, rel=1e-12)
    assert res.n == 500 and res.k == 32


def test_stopping_family_is_consistent(bench):
    model, g = bench
    est = train_mesh(model.simulate(64, Stream(5)), g, model)
    paths = model.simulate(300, Stream(6))
    taus = [exercise(est, paths, start=j)[0] for j in range(model.J + 1)]
    for j in range(model.J):
        later = taus[j] > j
        np.testing.assert_array_equal(taus[j][later], taus[j + 1][later])
        assert np.all(taus[j] >= j) and np.all(taus[j] <= model.J)


def test_training_and_testing_streams_differ(bench):
    model, g = bench
    seen = []

    def trainer(paths):
        seen.append(paths.states.copy())
        return FunctionEstimator(lambda j, z: 0.0, model.J, g)

    run_single_level(model, trainer, 20, 20, Stream(3))
    fresh = model.simulate(20, Stream(3).child(0, 1))
    assert not np.array_equal(seen[0], fresh.states)


def test_cost_tally_of_single_run(bench):
    model, g = bench
    res = run_single_level(model, make_trainer("mesh", model, g), 16, 100, Stream(1))
    assert res.cost.train_units == 16**2
    assert res.cost.eval_units == 100 * 16
    assert res.cost.recomputed_units() == res.cost.total


def test_bias_curve_of_exact_rule_is_flat():
    ch = binomial_chain()
    v0 = dp_solve(ch).V0
    sol = dp_solve(ch)
    rows, _ = estimate_bias_curve(ch, lambda paths: exact_estimator(ch, sol), [4, 8, 16], v0, 40, n=200, stream=1)
    for r in rows:
        assert abs(r["bias"]) <= 3 * r["ci"] / 1.96


def test_mesh_bias_is_nonnegative_in_trend():
    ch = binomial_chain(strike=110.0, J=2, steps=25)
    v0 = dp_solve(ch).V0
    pay = FunctionPayoff(lambda j, z: ch.payoff(j, z[..., 0]), ch.J)
    rows, slope = estimate_bias_curve(
        ch, lambda p: train_mesh(p, pay, ch), [16, 64, 256], v0, 10, stream=3,
        exact_value=lambda t: trained_policy_value(ch, t),
    )
    assert all(r["bias"] >= 0 for r in rows)  # a stopping rule never beats the optimum
    assert rows[-1]["bias"] < rows[0]["bias"]
    assert math.isfinite(slope)
