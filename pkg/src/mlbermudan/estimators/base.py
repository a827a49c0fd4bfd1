"""Shared pieces of the continuation-value estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# rows of query points processed per chunk in pairwise kernels
CHUNK = 512


@dataclass(frozen=True)
class EstimatorProfile:
    """Quality and cost exponents: gamma_k = k^-mu, training k^(1+kappa1), evaluation k^kappa2."""

    mu: float
    kappa1: float
    kappa2: float
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("mu", "kappa1", "kappa2", "alpha"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


MESH_PROFILE = EstimatorProfile(mu=1.0, kappa1=1.0, kappa2=1.0, alpha=1.0)
LOCAL_PROFILE = EstimatorProfile(mu=1.0 / 6.0, kappa1=1.0, kappa2=1.0, alpha=1.0)


def global_profile(rho: float) -> EstimatorProfile:
    return EstimatorProfile(mu=1.0, kappa1=2 * rho, kappa2=rho, alpha=1.0)


class TrainedEstimator:
    """Continuation values C_{k,j} for j = 0..J with C_{k,J} = 0.

    Subclasses implement ``_continuation(j, z)`` for j < J.  ``eval_ops``
    counts elementary kernel/basis evaluations and is the only mutable state.
    """

    kind = "base"

    def __init__(self, k: int, J: int, payoff):
        self.k = k
        self.J = J
        self.payoff = payoff
        self.train_ops = 0
        self.eval_ops = 0
        self.eval_points = 0

    def continuation(self, j: int, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if not 0 <= j <= self.J:
            raise IndexError(f"date index {j} outside 0..{self.J}")
        if j == self.J:
            return np.zeros(len(z))
        self.eval_points += len(z)
        return self._continuation(j, z)

    def _continuation(self, j: int, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, j: int, z) -> np.ndarray:
        return self.continuation(j, z)


class FunctionEstimator(TrainedEstimator):
    """Continuation values given directly by ``fn(j, z)``; for exact solutions and test stubs."""

    kind = "function"

    def __init__(self, fn, J: int, payoff, k: int = 1):
        super().__init__(k, J, payoff)
        self.fn = fn

    def _continuation(self, j, z):
        self.eval_ops += len(z)
        return np.broadcast_to(np.asarray(self.fn(j, z), dtype=float), (len(z),)).copy()


def continuation_target(trained: TrainedEstimator, j: int, z) -> np.ndarray:
    """zeta_{k,j}(z) = max(g_j(z), C_{k,j}(z))."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    return np.maximum(trained.payoff(j, z), trained.continuation(j, z))


def training_targets(payoff, j: int, z: np.ndarray, cont: np.ndarray) -> np.ndarray:
    return np.maximum(payoff(j, z), cont)
