"""Closed-form oracles: linear-response cumulants and the white-noise limit."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .protocol import thermal_one_probability
from .samples import TPMSamples

_PI2 = math.pi ** 2
_G_SERIES_RADIUS = 1e-4
# g(pi + d) = pi^2/4 + G1 d + G2 d^2 + O(d^3)
_G1 = math.pi / 4
_G2 = -(1.0 / 16 + _PI2 / 48)
# pi = _PI_HI + _PI_LO to about 32 digits
_PI_HI = math.pi
_PI_LO = 1.2246467991473532e-16


@dataclass(frozen=True)
class LRTParams:
    beta: float
    gamma: float
    tau: float
    n_edges: int

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("LRT needs beta > 0")
        if self.n_edges < 1:
            raise ValueError("n_edges must be >= 1")


def _g_scalar(x: float) -> float:
    ax = abs(x)
    d = (ax - _PI_HI) - _PI_LO
    if abs(d) < _G_SERIES_RADIUS:
        return _PI2 / 4 + _G1 * d + _G2 * d * d
    # 1 + cos x = 2 cos^2(x/2) and pi^2 - x^2 = -d (x + pi) avoid cancellation near pi
    c = math.cos(0.5 * ax)
    return 4 * _PI2 * ax * ax * c * c / (d * (ax + math.pi)) ** 2


def g_env(x):
    """Envelope ``g(x) = 2 pi^2 x^2 (1 + cos x) / (pi^2 - x^2)^2``.

    Within 1e-4 of ``x = +-pi`` a second-order expansion replaces the 0/0 form.
    """
    if np.ndim(x) == 0:
        return _g_scalar(float(x))
    return np.vectorize(_g_scalar, otypes=[float])(x)


def gamma_k(omega: float, beta: float, k: int) -> float:
    if k < 1:
        raise ValueError("cumulant order must be >= 1")
    x = beta * omega
    if k % 2:
        return 0.5 * x ** (k - 1)
    # x coth(x/2) -> 2 as x -> 0
    x_coth = 2.0 if x == 0 else x / math.tanh(0.5 * x)
    return 0.5 * x ** (k - 2) * x_coth


def kubo_correlator(s: float, t: float, beta: float) -> complex:
    """Single-site thermal correlator ``<X~(s) X(t)>`` (diagnostic)."""
    num = math.exp(beta - 2 * s) * np.exp(2j * t) + math.exp(-beta + 2 * s) * np.exp(-2j * t)
    return complex(num / (math.exp(beta) + math.exp(-beta)))


def kubo_relaxation(t, beta: float, n_edges: int):
    """``Psi0(t) = beta/(2|E|) [tanh(beta) cos(4t) + beta sech^2(beta)]``."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    sech2 = 1.0 / math.cosh(beta) ** 2
    return beta / (2 * n_edges) * (math.tanh(beta) * np.cos(4 * np.asarray(t)) + beta * sech2)


def lrt_cumulant(k: int, p: LRTParams) -> float:
    """Order-``k`` work cumulant to leading order in the drive strength."""
    beta_part = 0.5 * p.beta ** (1 - k) * math.tanh(p.beta) * gamma_k(4.0, p.beta, k)
    return p.gamma ** 2 / p.n_edges * beta_part * g_env(4 * p.tau)


def lrt_moments(p: LRTParams) -> tuple[float, float]:
    return lrt_cumulant(1, p), lrt_cumulant(2, p)


def lrt_slope(beta: float) -> float:
    """Slope ``2 beta coth(2 beta)`` of the variance against the TUR bound."""
    if not beta > 0:
        raise ValueError("lrt_slope needs beta > 0")
    x = 2 * beta
    return x / math.tanh(x)


def lrt_variance_to_mean(beta: float) -> float:
    return 4.0 / math.tanh(2 * beta)


def wn_moments(n_spin: int, beta: float) -> tuple[float, float]:
    """Mean and variance when ``y`` is uniform and ``x`` thermal."""
    if n_spin < 1 or beta < 0:
        raise ValueError("need n_spin >= 1 and beta >= 0")
    t = math.tanh(beta)
    return n_spin * t, n_spin * (2 - t * t)


def wn_work_pmf(n_spin: int, beta: float) -> dict[int, float]:
    """Exact work distribution of the white-noise model, ``W = 2 (|y| - |x|)``."""
    from scipy.stats import binom

    k = np.arange(n_spin + 1)
    py = binom.pmf(k, n_spin, 0.5)
    px = binom.pmf(k, n_spin, thermal_one_probability(beta))
    conv = np.convolve(py, px[::-1])
    diffs = np.arange(-n_spin, n_spin + 1)
    return {int(2 * d): float(c) for d, c in zip(diffs, conv) if c > 0}


def wn_sampler(n_spin: int, beta: float, shots: int, rng: np.random.Generator) -> TPMSamples:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p1 = thermal_one_probability(beta)
    x = (rng.random((shots, n_spin)) < p1).astype(np.uint8)
    y = rng.integers(0, 2, size=(shots, n_spin), dtype=np.uint8)
    return TPMSamples(x, y)
