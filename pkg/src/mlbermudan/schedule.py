"""Closed-form (k, n) schedules and complexity predictions.

Single level: k = (eps/c_k)^(-2/(mu(1+alpha))), n = (eps/c_n)^(-2).
Multilevel: k_l = k0 theta^l, n_l proportional to
(sum_{i=1..L} k_i^((kappa2 - mu alpha/2)/2)) * k_l^((-kappa2 - mu alpha/2)/2).
All real-valued quantities are rounded up and floored at 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .costs import CostTally  # noqa: F401  (re-exported)
from .estimators.base import LOCAL_PROFILE, MESH_PROFILE, EstimatorProfile

# relative slack when rounding up, so that 10.000000000000002 becomes 10
_ROUND_SLACK = 1e-9


def ceil_int(x: float, floor: int = 1) -> int:
    """Round up, treating values within relative 1e-9 of an integer as that integer."""
    r = round(x)
    v = r if abs(x - r) <= _ROUND_SLACK * max(1.0, abs(x)) else math.ceil(x)
    return max(floor, int(v))


@dataclass(frozen=True)
class SchedulePreset:
    """Named constants of a method's schedules.

    ``level_rule`` is ``"theorem"`` for L = ceil(a log_theta((eps/c_L)^-1 k0^(-1/a))),
    a = 2/(mu(1+alpha)), or ``"mesh"`` for L = ceil(log_theta(c_L k0 / eps)).
    """

    profile: EstimatorProfile
    c_k: float = 1.0
    c_n: float = 1.0
    k0: int = 1
    theta: float = 2.0
    c_level: float = 1.0
    c_ml_n: float = 1.0
    n_prefactor: float = 1.0
    level_rule: str = "theorem"


PRESETS = {
    "mesh": SchedulePreset(MESH_PROFILE, c_k=2.4, c_n=2.4, k0=5, c_level=8.0, c_ml_n=8.0, level_rule="mesh"),
    "local": SchedulePreset(LOCAL_PROFILE, c_k=1.2, c_n=1.2, k0=100, c_level=3.0, c_ml_n=3.0, n_prefactor=10.0),
    "theorem": SchedulePreset(MESH_PROFILE),
}


@dataclass
class LevelSchedule:
    epsilon: float
    L: int
    theta: float
    k: list[int]
    n: list[int]
    profile: EstimatorProfile
    n_real: list[float] = field(default_factory=list)

    def rows(self):
        return list(zip(range(self.L + 1), self.k, self.n, self.n_real))


def single_level_schedule(epsilon: float, profile: EstimatorProfile, c_k: float = 1.0, c_n: float = 1.0):
    """(k, n) = (ceil((eps/c_k)^(-2/(mu(1+alpha)))), ceil((eps/c_n)^-2))."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    a = 2.0 / (profile.mu * (1 + profile.alpha))
    return ceil_int((epsilon / c_k) ** (-a)), ceil_int((epsilon / c_n) ** -2)


def level_count(epsilon, k0, theta, profile, c_level=1.0, rule="theorem") -> int:
    if rule == "mesh":
        raw = math.log(c_level * k0 / epsilon, theta)
    elif rule == "theorem":
        a = 2.0 / (profile.mu * (1 + profile.alpha))
        raw = a * math.log((epsilon / c_level) ** -1 * k0 ** (-1.0 / a), theta)
    else:
        raise ValueError(f"unknown level rule {rule!r}")
    return ceil_int(raw, floor=0)


def multilevel_schedule(
    epsilon: float,
    k0: int,
    theta: float,
    profile: EstimatorProfile,
    c_level: float = 1.0,
    c_n: float = 1.0,
    n_prefactor: float = 1.0,
    level_rule: str = "theorem",
) -> LevelSchedule:
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if theta <= 1:
        raise ValueError(f"theta must exceed 1, got {theta}")
    if k0 < 1:
        raise ValueError(f"k0 must be >= 1, got {k0}")
    L = level_count(epsilon, k0, theta, profile, c_level, level_rule)
    k = [ceil_int(k0 * theta**l) for l in range(L + 1)]
    half_ma = profile.mu * profile.alpha / 2
    up = (profile.kappa2 - half_ma) / 2
    down = (-profile.kappa2 - half_ma) / 2
    total = sum(ki**up for ki in k[1:])
    if L == 0:
        # empty sum: fall back to the single-level sample size
        n_real = [n_prefactor * (epsilon / c_n) ** -2]
    else:
        n_real = [n_prefactor * (epsilon / c_n) ** -2 * total * kl**down for kl in k]
    return LevelSchedule(epsilon, L, theta, k, [ceil_int(v) for v in n_real], profile, n_real)


def preset_schedule(method: str, mode: str, epsilon: float, k0=None, theta=None, profile=None):
    """Schedule from the named constants of ``method`` ('mesh', 'local' or 'theorem')."""
    p = PRESETS[method]
    profile = profile or p.profile
    if mode == "single":
        return single_level_schedule(epsilon, profile, p.c_k, p.c_n)
    if mode != "ml":
        raise ValueError(f"mode must be 'single' or 'ml', got {mode!r}")
    return multilevel_schedule(
        epsilon, p.k0 if k0 is None else k0, p.theta if theta is None else theta, profile,
        p.c_level, p.c_ml_n, p.n_prefactor, p.level_rule,
    )


def epsilon_for_levels(method: str, levels, k0=None, theta=None, profile=None) -> list[float]:
    """Largest eps giving each requested level count under ``method``'s level rule."""
    p = PRESETS[method]
    profile = profile or p.profile
    k0 = p.k0 if k0 is None else k0
    theta = p.theta if theta is None else theta
    a = 2.0 / (profile.mu * (1 + profile.alpha))
    if p.level_rule == "mesh":
        return [p.c_level * k0 / theta**L for L in levels]
    return [p.c_level * k0 ** (-1.0 / a) * theta ** (-L / a) for L in levels]


def predicted_complexity(schedule, profile: EstimatorProfile) -> float:
    """sum_l (k_l^(1+kappa1) + n_l k_l^kappa2); a (k, n) tuple is a one-level schedule."""
    if isinstance(schedule, LevelSchedule):
        ks, ns = schedule.k, schedule.n
    else:
        ks, ns = [schedule[0]], [schedule[1]]
    return float(sum(k ** (1 + profile.kappa1) + n * k**profile.kappa2 for k, n in zip(ks, ns)))


def single_level_exponent(profile: EstimatorProfile) -> float:
    m = profile.mu * (1 + profile.alpha)
    return 2 * max((profile.kappa1 + 1) / m, 1 + profile.kappa2 / m)


@dataclass(frozen=True)
class ComplexityCase:
    label: str
    exponent: float  # cost ~ eps^-exponent * |log eps|^log_power
    log_power: int
    single_exponent: float
    gain: float  # single_exponent - exponent, clipped at 0
    superior: bool


def complexity_case(profile: EstimatorProfile) -> ComplexityCase:
    """Which branch of the multilevel complexity bound applies, and the gain over one level."""
    m = profile.mu * (1 + profile.alpha)
    k1, k2 = profile.kappa1, profile.kappa2
    ma = profile.mu * profile.alpha
    ratio = (k1 + 1) / m
    if math.isclose(2 * k2, ma):
        if ratio > 1:
            label, expo, logp = "2k2=mu*alpha, (k1+1)/(mu(1+alpha))>1", 2 * ratio, 0
        else:
            label, expo, logp = "2k2=mu*alpha, (k1+1)/(mu(1+alpha))<=1", 2.0, 2
    elif 2 * k2 < ma:
        label, expo, logp = "2k2<mu*alpha", 2 * max(ratio, 1.0), 0
    else:
        label, expo, logp = "2k2>mu*alpha", 2 * max(ratio, 1 + (k2 - ma / 2) / m), 0
    single = single_level_exponent(profile)
    gain = max(0.0, single - expo)
    return ComplexityCase(label, expo, logp, single, gain, m > 1 and gain > 0)


def theoretical_exponent(profile: EstimatorProfile, mode: str) -> float:
    return single_level_exponent(profile) if mode == "single" else complexity_case(profile).exponent


def fit_cost_slope(epsilons, costs) -> float:
    """Slope of log(cost) against log(1/eps)."""
    e = np.asarray(epsilons, float)
    return float(np.polyfit(np.log(1 / e), np.log(np.asarray(costs, float)), 1)[0])
