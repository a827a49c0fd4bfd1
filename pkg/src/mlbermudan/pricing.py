"""Low-biased single-level price estimate from a trained stopping rule."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .costs import CostTally
from .estimators.base import MESH_PROFILE, EstimatorProfile, TrainedEstimator
from .model import PathSet
from .rng import TEST, TRAIN, Stream, as_stream


def exercise(trained: TrainedEstimator, paths: PathSet, payoff=None, start: int = 0):
    """Stopping dates tau = min{j >= start : g_j(Z_j) >= C_{k,j}(Z_j)} and payoffs g_tau(Z_tau).

    The estimator is not evaluated on a path after it has stopped.
    """
    payoff = trained.payoff if payoff is None else payoff
    n, J = paths.count, paths.J
    if not 0 <= start <= J:
        raise ValueError(f"start {start} outside 0..{J}")
    tau = np.full(n, J)
    value = np.zeros(n)
    active = np.arange(n)
    for j in range(start, J + 1):
        z = paths.states[j, active]
        g = payoff(j, z)
        stop = g >= trained.continuation(j, z)
        tau[active[stop]] = j
        value[active[stop]] = g[stop]
        active = active[~stop]
        if active.size == 0:
            break
    return tau, value


def stopping_time(trained: TrainedEstimator, path, start: int = 0) -> int:
    """Stopping date of a single trajectory given as an array of shape (J+1, d)."""
    path = np.asarray(path, dtype=float)
    tau, _ = exercise(trained, PathSet(path[:, None, :]), start=start)
    return int(tau[0])


@dataclass
class PriceEstimate:
    value: float
    std_error: float
    n: int
    k: int
    cost: CostTally | None = None
    samples: np.ndarray | None = None
    tau: np.ndarray | None = None

    @property
    def variance(self) -> float:
        return self.std_error**2


def sample_mean_se(x: np.ndarray) -> tuple[float, float]:
    n = len(x)
    if n == 0:
        raise ValueError("empty sample")
    mean = float(np.mean(x))
    if n == 1:
        return mean, 0.0
    return mean, math.sqrt(float(np.var(x, ddof=1)) / n)


def price_single_level(
    trained: TrainedEstimator,
    testing: PathSet,
    payoff=None,
    control=None,
    profile: EstimatorProfile = MESH_PROFILE,
) -> PriceEstimate:
    """V_0^{n,k}: mean of g_tau over independent testing paths.

    ``control`` is an optional outer control variate (see ``control.OuterControl``);
    when given, per-path samples are the adjusted payoffs.
    """
    if testing.count == 0:
        raise ValueError("empty testing set")
    ops0 = trained.eval_ops
    tau, value = exercise(trained, testing, payoff)
    samples = control.adjust(testing, tau, value) if control is not None else value
    mean, se = sample_mean_se(samples)
    cost = CostTally(profile)
    cost.add_evaluation(trained, testing.count, trained.eval_ops - ops0)
    return PriceEstimate(mean, se, testing.count, trained.k, cost, samples, tau)


def run_single_level(
    model,
    trainer,
    k: int,
    n: int,
    stream: Stream | int | None = None,
    control=None,
    profile: EstimatorProfile = MESH_PROFILE,
) -> PriceEstimate:
    """Train on k fresh paths, test on n independent fresh paths."""
    stream = as_stream(stream)
    t0 = time.perf_counter()
    trained = trainer(model.simulate(k, stream.child(0, TRAIN)))
    est = price_single_level(trained, model.simulate(n, stream.child(0, TEST)), control=control, profile=profile)
    tally = CostTally(profile)
    tally.add_training(trained)
    est.cost = tally.merge(est.cost)
    est.cost.wall_seconds = time.perf_counter() - t0
    return est


def fit_loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def estimate_bias_curve(
    model,
    trainer,
    ks,
    reference: float,
    repetitions: int,
    n: int | None = None,
    stream: Stream | int | None = None,
    exact_value=None,
    control=None,
):
    """Empirical bias V* - E[V_0^{n,k}] per k, with 95% intervals and the fitted log-log slope.

    ``exact_value(trained)`` short-cuts the testing phase with the exact value of
    the trained stopping rule (available on finite chains); otherwise ``n``
    testing paths are simulated per repetition.
    """
    stream = as_stream(stream)
    rows = []
    for k in ks:
        vals = []
        for rep in range(repetitions):
            s = stream.child(rep, k)
            trained = trainer(model.simulate(k, s.child(TRAIN)))
            if exact_value is not None:
                vals.append(exact_value(trained))
            else:
                vals.append(price_single_level(trained, model.simulate(n, s.child(TEST)), control=control).value)
        mean, se = sample_mean_se(np.array(vals))
        rows.append({"k": k, "mean": mean, "bias": reference - mean, "ci": 1.96 * se})
    bias = np.array([abs(r["bias"]) for r in rows])
    ok = bias > 0
    slope = fit_loglog_slope(np.array(ks)[ok], bias[ok]) if ok.sum() >= 2 else float("nan")
    return rows, slope
