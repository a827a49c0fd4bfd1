"""Finite-state Markov chains with exact dynamic-programming solutions.

A ``FiniteChain`` behaves like a model for the estimators: states are scalar
labels (d = 1), ``simulate`` draws trajectories and ``log_density`` returns
log transition probabilities, which the mesh uses as a density with respect to
counting measure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .estimators.base import FunctionEstimator
from .model import PathSet
from .rng import Stream, as_stream


@dataclass(frozen=True)
class FiniteChain:
    values: tuple  # values[j]: sorted state labels at date j
    trans: tuple  # trans[j-1]: row-stochastic matrix from date j-1 to date j
    gains: tuple  # gains[j]: payoff per state at date j
    start: int = 0
    name: str = "chain"

    def __post_init__(self):
        if len(self.trans) != len(self.values) - 1 or len(self.gains) != len(self.values):
            raise ValueError("values, transitions and gains disagree on the number of dates")
        for j, P in enumerate(self.trans, start=1):
            P = np.asarray(P)
            if P.shape != (len(self.values[j - 1]), len(self.values[j])):
                raise ValueError(f"transition {j} has shape {P.shape}")
            if np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12):
                raise ValueError(f"transition {j} is not row-stochastic")
        for v in self.values:
            if np.any(np.diff(v) <= 0):
                raise ValueError("state labels must be strictly increasing")

    @property
    def J(self) -> int:
        return len(self.values) - 1

    @property
    def d(self) -> int:
        return 1

    @property
    def x0(self) -> np.ndarray:
        return np.array([self.values[0][self.start]])

    def index(self, j: int, z) -> np.ndarray:
        z = np.asarray(z, dtype=float).reshape(-1)
        idx = np.searchsorted(self.values[j], z)
        idx = np.clip(idx, 0, len(self.values[j]) - 1)
        if not np.array_equal(self.values[j][idx], z):
            raise ValueError(f"point is not a state of the chain at date {j}")
        return idx

    def simulate_indices(self, count: int, stream) -> np.ndarray:
        gen = as_stream(stream).generator()
        idx = np.empty((self.J + 1, count), dtype=int)
        idx[0] = self.start
        u = gen.random((self.J, count))
        for j in range(1, self.J + 1):
            cdf = np.cumsum(np.asarray(self.trans[j - 1]), axis=1)
            cdf[:, -1] = 1.0
            rows = cdf[idx[j - 1]]
            idx[j] = (rows < u[j - 1][:, None]).sum(axis=1)
        return idx

    def simulate(self, count: int, stream: Stream | int | None = None, workers: int = 1) -> PathSet:
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        idx = self.simulate_indices(count, stream)
        states = np.stack([self.values[j][idx[j]] for j in range(self.J + 1)])[:, :, None]
        return PathSet(states, str(as_stream(stream)))

    def log_density(self, j: int, x, y) -> np.ndarray:
        P = np.asarray(self.trans[j - 1])
        with np.errstate(divide="ignore"):
            return np.log(P[np.ix_(self.index(j - 1, x), self.index(j, y))])

    def payoff(self, j: int, z) -> np.ndarray:
        return np.asarray(self.gains[j])[self.index(j, z)]


class ChainPayoff:
    def __init__(self, chain: FiniteChain):
        self.chain = chain

    def __call__(self, j, z):
        if not 0 <= j <= self.chain.J:
            raise IndexError(f"date index {j} outside 0..{self.chain.J}")
        return self.chain.payoff(j, z)


def _expect(P, w) -> np.ndarray:
    # E[w(Z_{j+1}) | Z_j] row by row; one fixed summation order shared by every caller,
    # so the DP value and the enumerated optimum agree bit for bit
    P = np.asarray(P, float)
    w = np.asarray(w, float)
    return (P * w[..., None, :]).sum(axis=-1)


@dataclass
class DPSolution:
    V: list  # V_j^* per state
    C: list  # C_j^* per state, C_J = 0
    V0: float

    def exercise_region(self, j: int, gains) -> np.ndarray:
        return np.asarray(gains[j]) >= self.C[j]


def dp_solve(chain: FiniteChain) -> DPSolution:
    """Exact backward recursion C_j = P_{j+1} max(g_{j+1}, C_{j+1}), C_J = 0."""
    J = chain.J
    V = [None] * (J + 1)
    C = [None] * (J + 1)
    C[J] = np.zeros(len(chain.values[J]))
    V[J] = np.maximum(np.asarray(chain.gains[J], float), C[J])
    for j in range(J - 1, -1, -1):
        C[j] = _expect(chain.trans[j], V[j + 1])
        V[j] = np.maximum(np.asarray(chain.gains[j], float), C[j])
    return DPSolution(V, C, float(V[0][chain.start]))


def policy_value(chain: FiniteChain, exercise) -> float:
    """Exact E[g_tau(Z_tau)] for the Markov rule ``exercise[j][s]`` (j < J); exercise at J is forced."""
    J = chain.J
    w = np.asarray(chain.gains[J], float)
    for j in range(J - 1, -1, -1):
        cont = _expect(chain.trans[j], w)
        w = np.where(exercise[j], chain.gains[j], cont)
    return float(w[chain.start])


def reachable(chain: FiniteChain) -> list:
    mask = [np.zeros(len(v), bool) for v in chain.values]
    mask[0][chain.start] = True
    for j in range(1, chain.J + 1):
        mask[j] = (np.asarray(chain.trans[j - 1])[mask[j - 1]] > 0).any(axis=0)
    return mask


def enumerate_policies(chain: FiniteChain, max_bits: int = 22, chunk: int = 4096) -> float:
    """Best value over every Markov exercise rule on the reachable states (brute force)."""
    J = chain.J
    reach = reachable(chain)
    slots = [(j, s) for j in range(J) for s in np.flatnonzero(reach[j])]
    if len(slots) > max_bits:
        raise ValueError(f"{2 ** len(slots)} policies is too many to enumerate")
    nb = len(slots)
    best = -np.inf
    for lo in range(0, 2**nb, chunk):
        codes = np.arange(lo, min(lo + chunk, 2**nb), dtype=np.int64)
        bits = ((codes[:, None] >> np.arange(nb)) & 1).astype(bool)  # (policies, slots)
        # backward recursion for a block of policies at once
        w = np.broadcast_to(np.asarray(chain.gains[J], float), (len(codes), len(chain.values[J])))
        for j in range(J - 1, -1, -1):
            cont = _expect(chain.trans[j], w)
            ex = np.zeros((len(codes), len(chain.values[j])), bool)
            for b, (jj, s) in enumerate(slots):
                if jj == j:
                    ex[:, s] = bits[:, b]
            w = np.where(ex, np.asarray(chain.gains[j], float)[None, :], cont)
        best = max(best, float(w[:, chain.start].max()))
    return best


def exact_estimator(chain: FiniteChain, solution: DPSolution | None = None):
    """The true continuation values C_j^* as a trained-estimator object."""
    sol = solution or dp_solve(chain)
    return FunctionEstimator(lambda j, z: sol.C[j][chain.index(j, z)], chain.J, ChainPayoff(chain))


def trained_policy_value(chain: FiniteChain, trained) -> float:
    """Exact value of the stopping rule induced by a trained estimator (no testing noise)."""
    ex = []
    for j in range(chain.J):
        z = np.asarray(chain.values[j], float)[:, None]
        ex.append(np.asarray(chain.gains[j]) >= trained.continuation(j, z))
    return policy_value(chain, ex)


# fixtures ---------------------------------------------------------------------


def binomial_chain(
    s0=100.0, strike=100.0, r=0.05, delta=0.0, sigma=0.2, T=1.0, J=3, steps=5, kind="put"
) -> FiniteChain:
    """Recombining binomial tree with ``steps`` moves between exercise dates.

    Payoffs are discounted to time 0, matching the convention of the GBM benchmark.
    """
    h = T / (J * steps)
    u = math.exp(sigma * math.sqrt(h))
    p = (math.exp((r - delta) * h) - 1 / u) / (u - 1 / u)
    if not 0 < p < 1:
        raise ValueError("binomial probability outside (0, 1)")
    values, gains, trans = [], [], []
    for j in range(J + 1):
        a = np.arange(-j * steps, j * steps + 1, 2)
        s = s0 * u**a.astype(float)
        t = j * T / J
        intrinsic = (strike - s) if kind == "put" else (s - strike)
        values.append(s)
        gains.append(math.exp(-r * t) * np.maximum(intrinsic, 0.0))
        if j > 0:
            prev = np.arange(-(j - 1) * steps, (j - 1) * steps + 1, 2)
            ups = (a[None, :] - prev[:, None] + steps) / 2
            P = np.where(
                (ups >= 0) & (ups <= steps) & (ups == np.round(ups)),
                binom.pmf(np.round(ups).astype(int), steps, p),
                0.0,
            )
            trans.append(P / P.sum(axis=1, keepdims=True))
    return FiniteChain(tuple(values), tuple(trans), tuple(gains), 0, f"binomial-{kind}-J{J}-m{steps}")


def random_chain(n_states=5, J=2, seed=7) -> FiniteChain:
    """Random chain with ``n_states`` labels 0..n-1 per date and uniform payoffs; starts in state 0."""
    gen = np.random.default_rng(seed)
    values = tuple(np.arange(n_states, dtype=float) for _ in range(J + 1))
    trans = tuple(gen.dirichlet(np.ones(n_states), size=n_states) for _ in range(J))
    gains = tuple(gen.uniform(0, 1, n_states) for _ in range(J + 1))
    return FiniteChain(values, trans, gains, 0, f"random-{n_states}x{J + 1}")


def exhaustive_stopping_rules(chain: FiniteChain):
    """Yield every Markov rule as a list of boolean arrays (small chains only)."""
    J = chain.J
    sizes = [len(chain.values[j]) for j in range(J)]
    for flat in itertools.product((False, True), repeat=sum(sizes)):
        out, pos = [], 0
        for m in sizes:
            out.append(np.array(flat[pos : pos + m]))
            pos += m
        yield out


def fixtures() -> dict:
    """Named chains shipped for the oracle checks; all small enough to enumerate."""
    return {
        "binomial-put": binomial_chain(),
        "binomial-put-itm": binomial_chain(strike=110.0, J=3, steps=4),
        "random-5x3": random_chain(5, 2, seed=7),
        "random-5x4": random_chain(5, 3, seed=1),
    }


def oracle_suite(chains: dict | None = None) -> list[tuple[str, bool, str]]:
    """(check name, passed, detail) for every DP invariant on every fixture."""
    out = []
    for name, ch in (chains or fixtures()).items():
        sol = dp_solve(ch)
        enum = enumerate_policies(ch)
        out.append((f"{name}: V0 equals enumeration", sol.V0 == enum, f"dp={sol.V0!r} enum={enum!r}"))
        ok = all(np.array_equal(sol.V[j], np.maximum(ch.gains[j], sol.C[j])) for j in range(ch.J + 1))
        out.append((f"{name}: V = max(g, C)", ok, ""))
        out.append((f"{name}: C_J = 0", bool(np.all(sol.C[ch.J] == 0)), ""))
        rows = all(np.allclose(np.sum(P, axis=1), 1.0, atol=1e-12) for P in ch.trans)
        out.append((f"{name}: rows stochastic", rows, ""))
        zero = FiniteChain(ch.values, ch.trans, tuple(np.zeros_like(g) for g in ch.gains), ch.start)
        out.append((f"{name}: zero payoff gives zero value", all(np.all(v == 0) for v in dp_solve(zero).V), ""))
    return out
