"""Work samples, raw estimators, entropy production and the TUR bound."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .bits import energy_of_bits
from .samples import TPMSample, TPMSamples

ESTIMATOR_TAGS = ("raw", "sqt", "ext_sqt", "exact", "lrt", "wn")
TUR_TOL_EXACT = 1e-9


@dataclass(frozen=True)
class WorkStatistics:
    mean: float
    variance: float
    n_samples: int
    estimator_tag: str

    def __post_init__(self):
        if self.estimator_tag not in ESTIMATOR_TAGS:
            raise ValueError(f"unknown estimator tag {self.estimator_tag!r}")
        if self.variance < 0:
            # exact moments can round a hair below zero
            if self.variance > -1e-12:
                object.__setattr__(self, "variance", 0.0)
            else:
                raise ValueError(f"negative variance {self.variance}")

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.n_samples) if self.n_samples > 0 else 0.0


@dataclass(frozen=True)
class TURRecord:
    sigma: float
    bound: float
    variance: float
    satisfied: bool
    slack: float
    degenerate: bool = False

    def as_row(self) -> dict:
        return asdict(self)


def energy_of(bits) -> int | np.ndarray:
    return energy_of_bits(bits)


def work_of(sample: TPMSample) -> int:
    x, y = np.asarray(sample.x), np.asarray(sample.y)
    if x.shape != y.shape:
        raise ValueError("x and y lengths differ")
    return int(energy_of_bits(y) - energy_of_bits(x))


def work_values(samples: TPMSamples) -> np.ndarray:
    return energy_of_bits(samples.y) - energy_of_bits(samples.x)


def raw_estimators(samples: TPMSamples | np.ndarray) -> WorkStatistics:
    """Sample mean and the 1/(N-1) sample variance of the work."""
    w = samples if isinstance(samples, np.ndarray) else work_values(samples)
    w = np.asarray(w, dtype=float)
    if w.size < 2:
        raise ValueError("need at least 2 samples for a variance")
    return WorkStatistics(float(w.mean()), float(w.var(ddof=1)), int(w.size), "raw")


def variance_std_error(works: np.ndarray) -> float:
    """Standard error of the sample variance from the fourth central moment."""
    w = np.asarray(works, dtype=float)
    d = w - w.mean()
    m2, m4 = np.mean(d ** 2), np.mean(d ** 4)
    return math.sqrt(max(m4 - m2 ** 2, 0.0) / len(w))


def entropy_production(mean: float, beta: float) -> float:
    if beta <= 0:
        raise ValueError("entropy production undefined at infinite temperature; "
                         "use TUR in variance form with bound -> 0")
    return beta * mean


def _solve_y_tanh_y(s: float, tol: float = 1e-12) -> float:
    """Root of ``y tanh(y) = s`` for ``s > 0`` by safeguarded Newton on a bracket."""
    lo = math.sqrt(s) * (1.0 - 1e-12)
    hi = max(math.sqrt(s), s) + 1.0
    y = math.sqrt(s) if s < 1 else s
    y = min(max(y, lo), hi)
    for _ in range(200):
        t = math.tanh(y)
        r = y * t - s
        if abs(r) <= tol or hi - lo <= 4 * math.ulp(y):
            return y
        if r > 0:
            hi = y
        else:
            lo = y
        deriv = t + y * (1.0 - t * t)
        step = y - r / deriv if deriv > 0 else 0.5 * (lo + hi)
        y = step if lo < step < hi else 0.5 * (lo + hi)
    return y


def tur_f(sigma: float) -> float:
    """``f(sigma) = 1/sinh^2(u)`` with ``u tanh(u) = sigma/2``."""
    if not sigma > 0:
        raise ValueError(f"tur_f needs sigma > 0, got {sigma}")
    u = _solve_y_tanh_y(0.5 * sigma)
    return 1.0 / math.sinh(u) ** 2


def tur_h(sigma: float) -> float:
    """``h(sigma) = sigma^2 f(sigma)`` with ``h(0) = 0``."""
    if sigma < 0:
        raise ValueError("tur_h needs sigma >= 0")
    if sigma == 0:
        return 0.0
    u = _solve_y_tanh_y(0.5 * sigma)
    return (sigma / math.sinh(u)) ** 2


def tur_bound(mean: float, beta: float) -> float:
    """Variance lower bound ``beta^-2 h(beta * mean)``; zero when ``mean <= 0``."""
    if mean <= 0:
        return 0.0
    return tur_h(entropy_production(mean, beta)) / beta ** 2


def tur_check(stats: WorkStatistics, beta: float, tol_abs: float = TUR_TOL_EXACT) -> TURRecord:
    if beta <= 0:
        raise ValueError("tur_check needs beta > 0")
    sigma = entropy_production(stats.mean, beta)
    bound = tur_bound(stats.mean, beta)
    slack = stats.variance - bound
    return TURRecord(sigma, bound, stats.variance, bool(stats.variance >= bound - tol_abs), slack,
                     degenerate=stats.mean <= 0)
