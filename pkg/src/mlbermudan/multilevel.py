"""Multilevel low-biased estimator over a sequence of training sizes k_0 < ... < k_L.

Level l >= 1 trains a fine estimator on k_l fresh paths and a coarse one on the
first k_{l-1} of those same paths, then evaluates both stopping rules on the
same n_l independent testing paths.  Level 0 is an ordinary single-level run.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .control import cv_adjust
from .costs import CostTally
from .estimators.base import MESH_PROFILE, EstimatorProfile, TrainedEstimator
from .pricing import exercise
from .rng import TEST, TRAIN, Stream, as_stream


@dataclass
class LevelPair:
    fine: TrainedEstimator
    coarse: TrainedEstimator
    paths: object = None  # the shared training PathSet

    def __post_init__(self):
        if self.coarse.k > self.fine.k:
            raise ValueError("coarse level must not use more paths than the fine level")


@dataclass
class CoupledLevels:
    base: TrainedEstimator
    pairs: list[LevelPair] = field(default_factory=list)

    @property
    def ks(self) -> list[int]:
        return [self.base.k] + [p.fine.k for p in self.pairs]

    @property
    def L(self) -> int:
        return len(self.pairs)


def train_coupled(ks, model, trainer, stream: Stream | int | None = None, nested: bool = False) -> CoupledLevels:
    """Train level 0 on its own paths and one (fine, coarse) pair per higher level.

    With ``nested=True`` all levels share one training set of size k_L and every
    estimator is trained on a prefix of it; then coarse_l is identical to fine_{l-1}
    and the correction sum telescopes exactly (a diagnostic mode).
    """
    ks = [int(k) for k in ks]
    if any(b < a for a, b in zip(ks, ks[1:])):
        raise ValueError(f"training sizes must be non-decreasing, got {ks}")
    stream = as_stream(stream)
    if nested:
        paths = model.simulate(ks[-1], stream.child(0, TRAIN))
        fits = [trainer(paths.head(k)) for k in ks]
        return CoupledLevels(fits[0], [LevelPair(fits[l], fits[l - 1], paths) for l in range(1, len(ks))])
    base = trainer(model.simulate(ks[0], stream.child(0, TRAIN)))
    pairs = []
    for l in range(1, len(ks)):
        paths = model.simulate(ks[l], stream.child(l, TRAIN))
        pairs.append(LevelPair(trainer(paths), trainer(paths.head(ks[l - 1])), paths))
    return CoupledLevels(base, pairs)


@dataclass
class LevelStat:
    level: int
    k: int
    n: int
    mean: float
    var: float
    cost: float
    k_coarse: int | None = None
    disagree: float = 0.0  # fraction of testing paths with differing stopping dates


@dataclass
class MultilevelEstimate:
    value: float
    std_error: float
    levels: list[LevelStat]
    cost: CostTally

    @property
    def variance(self) -> float:
        return self.std_error**2


def _level_samples(est, paths, control):
    tau, value = exercise(est, paths)
    cv = control.values(paths, tau) if control is not None else None
    return tau, value, cv


def price_multilevel(
    levels: CoupledLevels,
    ns,
    model,
    stream: Stream | int | None = None,
    control=None,
    profile: EstimatorProfile = MESH_PROFILE,
    shared_testing: bool = False,
) -> MultilevelEstimate:
    """Telescoped estimate V_0^{n,k} with per-level sample statistics.

    ``control`` is an outer control: level 0 uses control - E[control], each
    correction uses the difference of the two controls, with ``control.beta``
    (a number or 'auto', fitted per level).  ``shared_testing`` reuses level 0's testing paths on
    every level (diagnostic only; the variance formula then no longer applies).
    """
    ns = [int(n) for n in ns]
    if len(ns) != levels.L + 1:
        raise ValueError(f"need {levels.L + 1} sample sizes, got {len(ns)}")
    if any(n < 1 for n in ns):
        raise ValueError("every level needs at least one testing path")
    stream = as_stream(stream)
    t0 = time.perf_counter()
    tally = CostTally(profile)
    stats = []

    test0 = model.simulate(ns[0], stream.child(0, TEST))
    ops0 = levels.base.eval_ops
    _, v0, c0 = _level_samples(levels.base, test0, control)
    if control is not None:
        v0 = cv_adjust(v0, c0, control.expectation, control.beta)
    tally.add_training(levels.base)
    tally.add_evaluation(levels.base, ns[0], levels.base.eval_ops - ops0)
    stats.append(LevelStat(0, levels.base.k, ns[0], float(np.mean(v0)), _var(v0), tally.total))

    for l, pair in enumerate(levels.pairs, start=1):
        before = tally.total
        paths = test0 if shared_testing else model.simulate(ns[l], stream.child(l, TEST))
        if shared_testing and ns[l] != ns[0]:
            raise ValueError("shared testing needs equal sample sizes on every level")
        of, oc = pair.fine.eval_ops, pair.coarse.eval_ops
        tf, vf, cf = _level_samples(pair.fine, paths, control)
        tc, vc, cc = _level_samples(pair.coarse, paths, control)
        for est, ops in ((pair.fine, of), (pair.coarse, oc)):
            tally.add_training(est)
            tally.add_evaluation(est, ns[l], est.eval_ops - ops)
        corr = vf - vc
        if control is not None:
            # the control difference has mean zero whatever the coefficient
            corr = cv_adjust(corr, cf - cc, 0.0, control.beta)
        stats.append(
            LevelStat(
                l, pair.fine.k, ns[l], float(np.mean(corr)), _var(corr), tally.total - before,
                pair.coarse.k, float(np.mean(tf != tc)),
            )
        )
    tally.wall_seconds = time.perf_counter() - t0
    value = sum(s.mean for s in stats)
    se = math.sqrt(sum(s.var / s.n for s in stats))
    return MultilevelEstimate(value, se, stats, tally)


def _var(x) -> float:
    return float(np.var(x, ddof=1)) if len(x) > 1 else 0.0


def run_multilevel(model, trainer, ks, ns, stream=None, control=None, profile=MESH_PROFILE) -> MultilevelEstimate:
    stream = as_stream(stream)
    levels = train_coupled(ks, model, trainer, stream)
    return price_multilevel(levels, ns, model, stream, control, profile)


def level_diagnostics(estimate: MultilevelEstimate) -> list[dict]:
    return [
        {
            "level": s.level,
            "k": s.k,
            "n": s.n,
            "mean_corr": s.mean,
            "var_corr": s.var,
            "cost": s.cost,
        }
        for s in estimate.levels
    ]
