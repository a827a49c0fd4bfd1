"""Local constant (Nadaraya-Watson) regression with the indicator kernel 1(|u| <= 1).

Only degree 0 is provided; an empty neighbourhood yields C_{k,j}(z) = 0.
"""

from __future__ import annotations

import numpy as np

from ..model import PathSet
from .base import CHUNK, TrainedEstimator


def default_bandwidth(k: int, d: int, scale: float = 100.0) -> float:
    """delta_k = scale * k^(-1/(d+2))."""
    return scale * k ** (-1.0 / (d + 2))


def _neighbour_average(z, centres, values, bandwidth):
    """Indicator-kernel average of ``values`` over centres within ``bandwidth`` of each z."""
    out = np.zeros(len(z))
    for lo in range(0, len(z), CHUNK):
        diff = z[lo : lo + CHUNK, None, :] - centres[None, :, :]
        hit = np.sqrt((diff * diff).sum(axis=-1)) <= bandwidth
        cnt = hit.sum(axis=1)
        tot = hit @ values
        np.divide(tot, cnt, out=out[lo : lo + CHUNK], where=cnt > 0)
    return out


class LocalEstimator(TrainedEstimator):
    kind = "local"

    def __init__(self, k, J, payoff, bandwidth):
        super().__init__(k, J, payoff)
        self.bandwidth = bandwidth
        self.centres: list[np.ndarray] = [None] * J  # Z_j^i
        self.zeta: list[np.ndarray] = [None] * J  # zeta_{k,j+1}(Z_{j+1}^i)

    def weights(self, j: int, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        diff = z[:, None, :] - self.centres[j][None, :, :]
        hit = (np.sqrt((diff * diff).sum(axis=-1)) <= self.bandwidth).astype(float)
        cnt = hit.sum(axis=1, keepdims=True)
        return np.divide(hit, cnt, out=np.zeros_like(hit), where=cnt > 0)

    def _continuation(self, j, z):
        self.eval_ops += len(z) * self.k
        return _neighbour_average(z, self.centres[j], self.zeta[j], self.bandwidth)


def train_local(training: PathSet, payoff, bandwidth: float | None = None, scale: float = 100.0) -> LocalEstimator:
    """Backward local-constant regression; ``bandwidth`` defaults to ``default_bandwidth(k, d, scale)``."""
    k, J = training.count, training.J
    if bandwidth is None:
        bandwidth = default_bandwidth(k, training.d, scale)
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    est = LocalEstimator(k, J, payoff, bandwidth)
    zeta_next = payoff(J, training.date(J))
    for j in range(J - 1, -1, -1):
        x = training.date(j)
        est.centres[j] = x
        est.zeta[j] = zeta_next
        est.train_ops += k * k
        if j > 0:
            cont = _neighbour_average(x, x, zeta_next, bandwidth)
            zeta_next = np.maximum(payoff(j, x), cont)
    return est
