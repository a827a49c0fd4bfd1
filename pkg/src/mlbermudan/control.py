"""European max-call on independent GBM assets and control variates built from it.

The discounted European value E(x, t, T) = E[exp(-rT) (max_i X_T^i - kappa)^+ | X_t = x]
is a martingale in t along the chain, which is what makes it usable both as an
outer control (evaluated at the stopping time) and as an inner control inside
the mesh recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .model import ModelParams, TimeGrid

# Gauss-Legendre rule per panel, panels of one log-standard-deviation
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_TAIL_SD = 10.0


def _deterministic(x, tau, kappa, params, T):
    grown = x.max(axis=-1) * math.exp((params.r - params.delta) * tau)
    return math.exp(-params.r * T) * np.maximum(grown - kappa, 0.0)


def european_max_call(x, t: float, T: float, kappa: float, params: ModelParams) -> np.ndarray:
    """Vectorised E(x, t, T) for x of shape (..., d) by composite Gauss-Legendre quadrature.

    Uses E = exp(-rT) * int_kappa^inf (1 - prod_i F_i(y)) dy with lognormal
    marginals F_i, integrated in u = log y over the window where the product
    is neither 0 nor 1 to double precision; the part below that window is exact.
    """
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-1]
    x2 = x.reshape(-1, x.shape[-1])
    tau = T - t
    if tau < -1e-12:
        raise ValueError(f"t={t} is after maturity T={T}")
    if tau <= 1e-12 or params.sigma == 0:
        return _deterministic(x2, max(tau, 0.0), kappa, params, T).reshape(shape)
    s = params.sigma * math.sqrt(tau)
    mu = np.log(x2) + params.drift * tau  # log-medians, (N, d)
    lk = math.log(kappa) if kappa > 0 else -np.inf
    top = mu.max(axis=1)
    lo = np.maximum(top - _TAIL_SD * s, lk)
    hi = np.maximum(top + _TAIL_SD * s, lo)
    panels = max(1, int(math.ceil(float((hi - lo).max()) / s)))
    # nodes on [0, 1] for the whole composite rule
    edges = np.arange(panels)[:, None]
    v = ((edges + 0.5 + 0.5 * _GL_X[None, :]) / panels).ravel()
    wv = np.tile(_GL_W / (2 * panels), panels)
    u = lo[:, None] + (hi - lo)[:, None] * v[None, :]  # (N, M)
    y = np.exp(u)
    z = (u[:, :, None] - mu[:, None, :]) / s
    H = np.prod(ndtr(z), axis=2)
    body = ((1.0 - H) * y * wv[None, :]).sum(axis=1) * (hi - lo)
    below = np.exp(lo) - (kappa if kappa > 0 else 0.0)  # 1 - H == 1 between kappa and the window
    return (math.exp(-params.r * T) * (body + below)).reshape(shape)


def european_max_call_quad(x, t: float, T: float, kappa: float, params: ModelParams):
    """Scalar reference by adaptive quadrature; returns (value, absolute error bound)."""
    x = np.asarray(x, dtype=float)
    tau = T - t
    if tau <= 0 or params.sigma == 0:
        return float(_deterministic(x[None, :], max(tau, 0.0), kappa, params, T)[0]), 0.0
    s = params.sigma * math.sqrt(tau)
    mu = np.log(x) + params.drift * tau

    def tail(u):
        return (1.0 - np.prod(ndtr((u - mu) / s))) * math.exp(u)

    a = math.log(kappa) if kappa > 0 else float(mu.min() - 40 * s)
    breaks = sorted(m for m in mu if m > a)
    val, err = integrate.quad(tail, a, float(mu.max() + 40 * s), points=breaks or None,
                              epsabs=0.0, epsrel=1e-12, limit=500)
    if kappa <= 0:
        val += math.exp(a)
    return math.exp(-params.r * T) * val, math.exp(-params.r * T) * err


def black_scholes_call(x: float, t: float, T: float, kappa: float, params: ModelParams) -> float:
    """Single-asset call with dividend yield, discounted to time 0 (not to t)."""
    tau = T - t
    s = params.sigma * math.sqrt(tau)
    fwd = x * math.exp((params.r - params.delta) * tau)
    d1 = (math.log(fwd / kappa) + 0.5 * s * s) / s
    return math.exp(-params.r * T) * (fwd * ndtr(d1) - kappa * ndtr(d1 - s))


def cv_adjust(raw, cv, expectation: float, beta="auto"):
    """raw - beta * (cv - E[cv]); ``beta='auto'`` uses the sample regression coefficient."""
    raw = np.asarray(raw, dtype=float)
    cv = np.asarray(cv, dtype=float)
    if isinstance(beta, str):
        if beta != "auto":
            raise ValueError(f"beta must be a number or 'auto', got {beta!r}")
        var = float(np.var(cv))
        beta = 0.0 if var == 0 else float(np.mean((cv - cv.mean()) * (raw - raw.mean()))) / var
    return raw - beta * (cv - expectation)


@dataclass
class EuropeanControl:
    """E(z, t_j, T) as a function of date index and state, for the inner and outer controls."""

    params: ModelParams
    grid: TimeGrid
    kappa: float

    def __call__(self, j: int, z) -> np.ndarray:
        return european_max_call(z, self.grid.times[j], self.grid.T, self.kappa, self.params)

    def at_stopping(self, paths, tau) -> np.ndarray:
        out = np.empty(len(tau))
        for j in np.unique(tau):
            sel = tau == j
            out[sel] = self(int(j), paths.states[j, sel])
        return out


@dataclass
class OuterControl:
    """Outer control: the European value at the stopping date, whose mean is E(x0, 0, T)."""

    european: EuropeanControl
    beta: float | str = 1.0

    def __post_init__(self):
        x0 = np.array(self.european.params.x0)
        self.expectation = float(self.european(0, x0[None, :])[0])

    def values(self, paths, tau) -> np.ndarray:
        return self.european.at_stopping(paths, tau)

    def adjust(self, paths, tau, raw) -> np.ndarray:
        return cv_adjust(raw, self.values(paths, tau), self.expectation, self.beta)


CV_MODES = ("off", "outer", "outer-beta", "inner")


def make_controls(mode: str, params: ModelParams, grid: TimeGrid, kappa: float):
    """(inner, outer) controls for a CLI ``--cv`` mode.

    ``inner`` (experimental) also enables the outer control with a fitted coefficient.
    """
    if mode not in CV_MODES:
        raise ValueError(f"unknown cv mode {mode!r}; expected one of {CV_MODES}")
    if mode == "off":
        return None, None
    eu = EuropeanControl(params, grid, kappa)
    outer = OuterControl(eu, 1.0 if mode == "outer" else "auto")
    return (eu if mode == "inner" else None), outer
