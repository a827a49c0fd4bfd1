"""Exercise payoffs g_j(z), already discounted to time 0."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import TimeGrid


@dataclass(frozen=True)
class MaxCallPayoff:
    """g_j(z) = exp(-r t_j) * (max_i z_i - kappa)^+."""

    kappa: float
    r: float
    grid: TimeGrid

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"strike must be >= 0, got {self.kappa}")

    def __call__(self, j: int, z) -> np.ndarray:
        if not 0 <= j <= self.grid.J:
            raise IndexError(f"date index {j} outside 0..{self.grid.J}")
        z = np.asarray(z, dtype=float)
        disc = math.exp(-self.r * self.grid.times[j])
        return disc * np.maximum(z.max(axis=-1) - self.kappa, 0.0)


@dataclass(frozen=True)
class FunctionPayoff:
    """Wraps an arbitrary vectorised ``fn(j, z)``; used for bounded test payoffs."""

    fn: Callable[[int, np.ndarray], np.ndarray]
    J: int

    def __call__(self, j: int, z) -> np.ndarray:
        if not 0 <= j <= self.J:
            raise IndexError(f"date index {j} outside 0..{self.J}")
        return np.asarray(self.fn(j, np.asarray(z, dtype=float)), dtype=float)


def make_payoff(kind: str, kappa: float, r: float, grid: TimeGrid):
    if kind in ("max-call", "maxcall"):
        return MaxCallPayoff(kappa, r, grid)
    raise ValueError(f"unknown payoff kind {kind!r}; only 'max-call' ships")
