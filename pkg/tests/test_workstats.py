import math

import numpy as np
import pytest
from scipy.optimize import brentq

from qworkstats.samples import TPMSample, TPMSamples
from qworkstats.workstats import (WorkStatistics, entropy_production, raw_estimators, tur_bound,
                                  tur_check, tur_f, tur_h, variance_std_error, work_of,
                                  _solve_y_tanh_y)


def _f_oracle(sigma):
    u = brentq(lambda y: y * math.tanh(y) - sigma / 2, 0.0, sigma + 2, xtol=1e-15, rtol=1e-15)
    return 1.0 / math.sinh(u) ** 2


@pytest.mark.parametrize("x, y, w", [("0101", "0101", 0), ("00", "11", 4), ("0000", "0011", 4)])
def test_work_of(x, y, w):
    s = TPMSamples.from_pairs([(x, y)])
    assert work_of(s[0]) == w


def test_work_of_length_mismatch():
    with pytest.raises(ValueError):
        work_of(TPMSample(np.zeros(2), np.zeros(3)))


def test_raw_estimators():
    s = raw_estimators(np.array([0.0, 4.0]))
    assert (s.mean, s.variance, s.n_samples, s.estimator_tag) == (2.0, 8.0, 2, "raw")
    z = raw_estimators(np.zeros(5))
    assert (z.mean, z.variance) == (0.0, 0.0)
    with pytest.raises(ValueError):
        raw_estimators(np.array([1.0]))


def test_work_statistics_validation():
    with pytest.raises(ValueError):
        WorkStatistics(0.0, 1.0, 1, "nope")
    with pytest.raises(ValueError):
        WorkStatistics(0.0, -1e-6, 1, "exact")
    assert WorkStatistics(0.0, -1e-14, 1, "exact").variance == 0.0


def test_entropy_production():
    assert entropy_production(0.5, 2.0) == 1.0
    assert entropy_production(0.0, 1.0) == 0.0
    with pytest.raises(ValueError, match="infinite temperature"):
        entropy_production(1.0, 0.0)


def test_f_at_one_matches_root_finding_oracle():
    assert tur_f(1.0) == pytest.approx(_f_oracle(1.0), rel=1e-12)
    assert tur_f(1.0) == pytest.approx(1.38210, abs=1e-5)
    assert tur_h(1.0) == pytest.approx(tur_f(1.0), rel=1e-15)


@pytest.mark.parametrize("sigma", [1e-3, 0.01, 0.3, 2.0, 7.5, 20.0, 50.0])
def test_f_vs_oracle(sigma):
    assert tur_f(sigma) == pytest.approx(_f_oracle(sigma), rel=1e-9)


def test_inversion_residual():
    for s in np.geomspace(5e-4, 25, 300):
        y = _solve_y_tanh_y(float(s))
        assert abs(y * math.tanh(y) - s) <= 1e-12


def test_f_strictly_decreasing():
    f = np.array([tur_f(s) for s in np.linspace(1e-3, 50, 1000)])
    assert np.all(np.diff(f) < 0)
    assert tur_f(2.0) < tur_f(1.0)


def test_small_sigma_limits():
    for s in (1e-4, 1e-6, 1e-8):
        assert tur_f(s) * s == pytest.approx(2.0, rel=1e-3)
        assert tur_h(s) / s == pytest.approx(2.0, rel=1e-3)
    assert tur_h(0.0) == 0.0
    with pytest.raises(ValueError):
        tur_f(0.0)


def test_tur_bound_and_check():
    assert tur_bound(0.0, 1.0) == 0.0
    assert tur_bound(-0.3, 1.0) == 0.0
    assert tur_bound(0.5, 2.0) == pytest.approx(tur_h(1.0) / 4)
    rec = tur_check(WorkStatistics(0.0, 0.0, 10, "raw"), 1.0)
    assert rec.satisfied and rec.bound == 0.0 and rec.degenerate
    rec = tur_check(WorkStatistics(0.5, 0.01, 0, "exact"), 2.0)
    assert not rec.satisfied and rec.slack < 0
    assert set(rec.as_row()) >= {"sigma", "bound", "variance", "satisfied", "slack"}


def test_variance_std_error():
    w = np.random.default_rng(3).normal(size=200000)
    # Gaussian: SE of the variance is sqrt(2 / n)
    assert variance_std_error(w) == pytest.approx(math.sqrt(2 / len(w)), rel=0.02)
    assert variance_std_error(np.full(10, 4.0)) == 0.0
