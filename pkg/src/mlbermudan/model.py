"""Exact simulation of independent geometric Brownian motions on an exercise grid."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .rng import Stream, as_stream

# trajectories per generator block; fixed so that output never depends on workers
BLOCK = 4096


@dataclass(frozen=True)
class ModelParams:
    d: int = 5
    r: float = 0.05
    delta: float = 0.1
    sigma: float = 0.2
    x0: tuple[float, ...] = (100.0,) * 5

    def __post_init__(self):
        x0 = tuple(float(v) for v in np.atleast_1d(self.x0))
        if len(x0) == 1 and self.d > 1:
            x0 = x0 * self.d
        object.__setattr__(self, "x0", x0)
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if len(x0) != self.d:
            raise ValueError(f"x0 has {len(x0)} components, expected d={self.d}")
        if any(v <= 0 for v in x0):
            raise ValueError("all components of x0 must be positive")

    @property
    def drift(self) -> float:
        """Log-drift per unit time, r - delta - sigma^2/2."""
        return self.r - self.delta - 0.5 * self.sigma**2


@dataclass(frozen=True)
class TimeGrid:
    times: tuple[float, ...]

    def __post_init__(self):
        t = tuple(float(v) for v in self.times)
        object.__setattr__(self, "times", t)
        if len(t) < 2:
            raise ValueError("time grid needs at least two dates")
        if t[0] != 0.0:
            raise ValueError("time grid must start at 0")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("time grid must be strictly increasing")

    @classmethod
    def uniform(cls, T: float, J: int) -> "TimeGrid":
        return cls(tuple(j * T / J for j in range(J + 1)) if J > 0 else (0.0,))

    @property
    def J(self) -> int:
        return len(self.times) - 1

    @property
    def T(self) -> float:
        return self.times[-1]

    def dt(self, j: int) -> float:
        """Elapsed time t_j - t_{j-1}."""
        if not 1 <= j <= self.J:
            raise IndexError(f"date index {j} outside 1..{self.J}")
        return self.times[j] - self.times[j - 1]


@dataclass(frozen=True)
class PathSet:
    """Trajectories stored date-major: ``states[j, i]`` is the state of path i at date j."""

    states: np.ndarray
    seed_info: str = ""

    def __post_init__(self):
        s = np.asarray(self.states, dtype=float)
        if s.ndim != 3:
            raise ValueError("states must have shape (dates, paths, d)")
        s.setflags(write=False)
        object.__setattr__(self, "states", s)

    @property
    def count(self) -> int:
        return self.states.shape[1]

    @property
    def J(self) -> int:
        return self.states.shape[0] - 1

    @property
    def d(self) -> int:
        return self.states.shape[2]

    def date(self, j: int) -> np.ndarray:
        return self.states[j]

    def path(self, i: int) -> np.ndarray:
        return self.states[:, i, :]

    def head(self, m: int) -> "PathSet":
        """The first ``m`` trajectories (a view, no copy)."""
        if not 1 <= m <= self.count:
            raise ValueError(f"cannot take {m} of {self.count} paths")
        return PathSet(self.states[:, :m, :], f"{self.seed_info}[:{m}]")


def gbm_step(x, dt: float, params: ModelParams, xi) -> np.ndarray:
    """Advance GBM states by ``dt`` with the exact lognormal update.

    ``x`` and ``xi`` may carry leading batch dimensions; the last axis is the asset.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if x.shape[-1:] != xi.shape[-1:]:
        raise ValueError(f"dimension mismatch: x {x.shape} vs xi {xi.shape}")
    return x * np.exp(params.drift * dt + params.sigma * math.sqrt(dt) * xi)


def simulate_paths(
    count: int,
    grid: TimeGrid,
    params: ModelParams,
    stream: Stream | int | None = None,
    workers: int = 1,
) -> PathSet:
    """Simulate ``count`` independent trajectories started at ``params.x0``.

    Normals are drawn per block of ``BLOCK`` paths from ``stream.child(block)``,
    so the result is bit-identical for any ``workers``.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    stream = as_stream(stream)
    states = np.empty((grid.J + 1, count, params.d))
    states[0] = params.x0

    def fill(b: int) -> None:
        lo, hi = b * BLOCK, min(count, (b + 1) * BLOCK)
        gen = stream.child(b).generator()
        xi = gen.standard_normal((grid.J, hi - lo, params.d))
        for j in range(1, grid.J + 1):
            states[j, lo:hi] = gbm_step(states[j - 1, lo:hi], grid.dt(j), params, xi[j - 1])

    nblocks = -(-count // BLOCK)
    if workers > 1 and nblocks > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(fill, range(nblocks)))
    else:
        for b in range(nblocks):
            fill(b)
    return PathSet(states, str(stream))


def log_transition_density(j: int, x, y, params: ModelParams, grid: TimeGrid) -> np.ndarray:
    """Log of the density of Z_j at ``y`` given Z_{j-1} = ``x`` (broadcasts over leading axes)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("transition density needs positive states")
    if params.sigma <= 0:
        raise ValueError("transition density is singular for sigma = 0")
    dt = grid.dt(j)
    s2 = params.sigma**2 * dt
    ly = np.log(y)
    dev = ly - np.log(x) - params.drift * dt
    per_asset = -ly - 0.5 * math.log(2 * math.pi * s2) - dev**2 / (2 * s2)
    return per_asset.sum(axis=-1)


@numba.njit(cache=True, nogil=True)
def _pairwise_sq(u, v, out):
    # out[i, l] = sum_d (v[l, d] - u[i, d])^2, fixed summation order
    for i in range(u.shape[0]):
        for l in range(v.shape[0]):
            acc = 0.0
            for a in range(u.shape[1]):
                t = v[l, a] - u[i, a]
                acc += t * t
            out[i, l] = acc


def pairwise_log_density(j: int, x, y, params: ModelParams, grid: TimeGrid) -> np.ndarray:
    """log p_j(x_i, y_l) for every pair, shape (len(x), len(y)); compiled loop, no (m, k, d) temporaries."""
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=float)))
    y = np.ascontiguousarray(np.atleast_2d(np.asarray(y, dtype=float)))
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("transition density needs positive states")
    if params.sigma <= 0:
        raise ValueError("transition density is singular for sigma = 0")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch {x.shape[1]} vs {y.shape[1]}")
    dt = grid.dt(j)
    s2 = params.sigma**2 * dt
    ly = np.log(y)
    out = np.empty((len(x), len(y)))
    _pairwise_sq(np.log(x), ly - params.drift * dt, out)
    shift = -ly.sum(axis=1) - 0.5 * y.shape[1] * math.log(2 * math.pi * s2)
    out *= -1.0 / (2 * s2)
    out += shift
    return out


def transition_density(j: int, x, y, params: ModelParams, grid: TimeGrid):
    """Product of univariate lognormal transition densities over assets."""
    out = np.exp(log_transition_density(j, x, y, params, grid))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GBMModel:
    """Markov chain Z_j = X_{t_j} of d independent GBMs; the object estimators train against."""

    params: ModelParams = field(default_factory=ModelParams)
    grid: TimeGrid = field(default_factory=lambda: TimeGrid.uniform(3.0, 3))

    @property
    def J(self) -> int:
        return self.grid.J

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def x0(self) -> np.ndarray:
        return np.array(self.params.x0)

    def simulate(self, count: int, stream: Stream | int | None = None, workers: int = 1) -> PathSet:
        return simulate_paths(count, self.grid, self.params, stream, workers)

    def log_density(self, j: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Pairwise log densities, shape (len(x), len(y)), for the move into date j."""
        return pairwise_log_density(j, x, y, self.params, self.grid)
