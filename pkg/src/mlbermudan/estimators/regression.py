"""Global least-squares regression on a fixed basis (Longstaff-Schwartz style targets).

At each date the coefficients solve min_a sum_i [zeta_{k,j+1}(Z_{j+1}^i) - psi(Z_j^i) a]^2.
The solve uses an SVD-based least-squares routine on column-scaled features, so a
singular design (e.g. at j = 0 where all paths coincide) returns the minimum-norm
solution instead of failing.
"""

from __future__ import annotations

import csv
import itertools
import logging

import numpy as np

from ..model import PathSet
from .base import TrainedEstimator

log = logging.getLogger(__name__)

# condition number above which a warning is logged
COND_WARN = 1e12


class PolynomialBasis:
    """Monomials of total degree <= ``degree`` in z / scale, optionally followed by g_j(z)."""

    def __init__(self, d: int, degree: int = 2, payoff=None, scale: float = 1.0):
        self.d = d
        self.degree = degree
        self.payoff = payoff
        self.scale = scale
        self.exponents = [
            combo
            for deg in range(degree + 1)
            for combo in itertools.combinations_with_replacement(range(d), deg)
        ]

    @property
    def size(self) -> int:
        return len(self.exponents) + (self.payoff is not None)

    def __call__(self, j: int, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(z) / self.scale
        cols = [np.prod(z[:, list(c)], axis=1) if c else np.ones(len(z)) for c in self.exponents]
        if self.payoff is not None:
            cols.append(self.payoff(j, z * self.scale))
        return np.column_stack(cols)


class FunctionBasis:
    """Basis from a plain list of functions psi_m(z) acting on rows of z."""

    def __init__(self, functions):
        self.functions = list(functions)

    @property
    def size(self) -> int:
        return len(self.functions)

    def __call__(self, j, z):
        z = np.atleast_2d(z)
        return np.column_stack([np.broadcast_to(f(z), (len(z),)) for f in self.functions])


def solve_least_squares(psi: np.ndarray, target: np.ndarray):
    """Coefficients and condition number of the column-scaled design."""
    norms = np.sqrt((psi * psi).sum(axis=0))
    norms[norms == 0] = 1.0
    sol, _, rank, sv = np.linalg.lstsq(psi / norms, target, rcond=None)
    cond = np.inf if sv[-1] == 0 else sv[0] / sv[-1]
    return sol / norms, cond, int(rank)


class GlobalEstimator(TrainedEstimator):
    kind = "global"

    def __init__(self, k, J, payoff, basis):
        super().__init__(k, J, payoff)
        self.basis = basis
        self.coef: list[np.ndarray] = [None] * J
        self.cond: list[float] = [np.nan] * J
        self.rank: list[int] = [0] * J

    def _continuation(self, j, z):
        psi = self.basis(j, z)
        self.eval_ops += psi.size
        return psi @ self.coef[j]

    def export_coefficients(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["date", "index", "coefficient", "cond", "rank"])
            for j, a in enumerate(self.coef):
                for m, v in enumerate(a):
                    w.writerow([j, m, repr(float(v)), repr(float(self.cond[j])), self.rank[j]])


def train_global(training: PathSet, payoff, basis) -> GlobalEstimator:
    k, J = training.count, training.J
    est = GlobalEstimator(k, J, payoff, basis)
    zeta_next = payoff(J, training.date(J))
    for j in range(J - 1, -1, -1):
        x = training.date(j)
        psi = basis(j, x)
        coef, cond, rank = solve_least_squares(psi, zeta_next)
        if j > 0 and cond > COND_WARN:
            log.warning("regression date %d: condition number %.3g, rank %d", j, cond, rank)
        est.coef[j], est.cond[j], est.rank[j] = coef, cond, rank
        est.train_ops += k * psi.shape[1] ** 2
        if j > 0:
            zeta_next = np.maximum(payoff(j, x), psi @ coef)
    return est
