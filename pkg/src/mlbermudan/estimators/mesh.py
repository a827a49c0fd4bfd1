"""Stochastic mesh estimator with likelihood-ratio weights.

C_{k,j}(z) = (1/k) sum_i zeta_{k,j+1}(Z_{j+1}^i) w_ij(z),
w_ij(z) = p(z, Z_{j+1}^i) / ((1/k) sum_l p(Z_j^l, Z_{j+1}^i)).

Densities are handled in log space.  The denominators are computed once per
training point, so evaluating C_{k,j} at a new point costs one row of k
density evaluations.
"""

from __future__ import annotations

import logging

import numpy as np

from ..model import PathSet
from .base import CHUNK, TrainedEstimator

log = logging.getLogger(__name__)


def _log_mean_exp_columns(logp: np.ndarray) -> np.ndarray:
    # column-wise log((1/k) sum_l exp(logp[l, i])); equal entries give the entry back exactly
    top = logp.max(axis=0)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = safe + np.log(np.exp(logp - safe).mean(axis=0))
    return np.where(np.isfinite(top), out, -np.inf)


class MeshEstimator(TrainedEstimator):
    kind = "mesh"

    def __init__(self, k, J, payoff, model, control=None):
        super().__init__(k, J, payoff)
        self.model = model
        self.control = control
        self.succ: list[np.ndarray] = [None] * J  # Z_{j+1}^i per date j
        self.log_denom: list[np.ndarray] = [None] * J
        self.zeta: list[np.ndarray] = [None] * J  # zeta_{k,j+1}(Z_{j+1}^i), control removed if any
        self.degenerate = 0

    def weights(self, j: int, z) -> np.ndarray:
        """Mesh weights w_ij(z), shape (len(z), k)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        logp = self.model.log_density(j + 1, z, self.succ[j])
        with np.errstate(invalid="ignore"):
            w = np.exp(logp - self.log_denom[j])
        return np.where(np.isfinite(self.log_denom[j]), np.nan_to_num(w, nan=0.0), 0.0)

    def _continuation(self, j, z):
        out = np.empty(len(z))
        for lo in range(0, len(z), CHUNK):
            w = self.weights(j, z[lo : lo + CHUNK])
            out[lo : lo + CHUNK] = w @ self.zeta[j] / self.k
        self.eval_ops += len(z) * self.k
        if self.control is not None:
            out += self.control(j, z)
        return out


def train_mesh(training: PathSet, payoff, model, control=None) -> MeshEstimator:
    """Backward recursion over the k training paths; Theta(J k^2) density evaluations.

    ``control`` (optional) is a martingale ``control(j, z)`` with
    E[control(j+1, Z_{j+1}) | Z_j = z] = control(j, z); it is subtracted from the
    regression targets and added back analytically (inner control variate).
    """
    k, J = training.count, training.J
    if k < 1:
        raise ValueError("mesh needs at least one training path")
    est = MeshEstimator(k, J, payoff, model, control)
    zeta_next = payoff(J, training.date(J))
    for j in range(J - 1, -1, -1):
        x, y = training.date(j), training.date(j + 1)
        logp = np.empty((k, k))
        for lo in range(0, k, CHUNK):
            logp[lo : lo + CHUNK] = model.log_density(j + 1, x[lo : lo + CHUNK], y)
        log_denom = _log_mean_exp_columns(logp)
        bad = ~np.isfinite(log_denom)
        if bad.any():
            est.degenerate += int(bad.sum())
            log.warning("mesh date %d: %d zero denominators, weights set to 0", j, bad.sum())
        target = zeta_next - (control(j + 1, y) if control is not None else 0.0)
        est.succ[j] = y
        est.log_denom[j] = log_denom
        est.zeta[j] = target
        est.train_ops += k * k
        if j > 0:
            cont = np.empty(k)
            for lo in range(0, k, CHUNK):
                with np.errstate(invalid="ignore"):
                    w = np.exp(logp[lo : lo + CHUNK] - log_denom)
                w = np.where(bad, 0.0, np.nan_to_num(w, nan=0.0))
                cont[lo : lo + CHUNK] = w @ target / k
            if control is not None:
                cont += control(j, x)
            zeta_next = np.maximum(payoff(j, x), cont)
    return est
