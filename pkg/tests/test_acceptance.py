"""The thirteen acceptance criteria, each at its stated tolerance.

A pass/fail line per criterion is printed in the terminal summary.
"""
import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from conftest import full_basis_samples
from qworkstats.analytic import (LRTParams, g_env, lrt_cumulant, lrt_slope, lrt_variance_to_mean,
                                 wn_moments, wn_sampler, wn_work_pmf)
from qworkstats.cli import main as cli_main
from qworkstats.expm import expm_multiply_lanczos
from qworkstats.lattice import cycle_graph, heavy_hex_layout, path_graph
from qworkstats.oracle import (conditional_moments, continuum_evolution, dense_expm,
                               exact_tpm_distribution, exact_trotter_unitary, moments_at_beta)
from qworkstats.protocol import DriveParams
from qworkstats.sim import NoiseSpec, make_rng, parity_filter, run_tpm
from qworkstats.sqt import ext_sqt_estimate, sqt_from_samples
from qworkstats.workstats import raw_estimators, tur_bound

criterion = pytest.mark.criterion


@criterion(1, "circuit cost identity (layout 15, n_T=29)")
def test_c01_circuit_cost(capsys, record_property):
    import json
    import time

    t0 = time.perf_counter()
    assert cli_main(["cost", "--layout", "15", "--n-trotter", "29"]) == 0
    elapsed = time.perf_counter() - t0
    report = json.loads(capsys.readouterr().out)
    record_property("detail", f"depth={report['total_depth']} ops={report['total_ops']} "
                              f"t={elapsed:.2f}s")
    assert report["total_depth"] == 120
    assert report["total_ops"] == 8466
    assert elapsed < 1.0


@criterion(2, "LRT envelope peak of g(4 tau)")
def test_c02_envelope_peak(record_property):
    res = minimize_scalar(lambda t: -g_env(4 * t), bracket=(0.5, 1.0, 1.5), method="golden",
                          tol=1e-10)
    record_property("detail", f"argmax={res.x:.6f}")
    assert abs(res.x - 1.07383) < 1e-3


@criterion(3, "LRT cumulants vs exact oracle, n=8, gamma=0.1, n_T=64")
def test_c03_lrt_vs_oracle(record_property):
    g = heavy_hex_layout(size_hint=8)
    worst = 0.0
    for tau in (0.5, 1.0, 2.0):
        cond = conditional_moments(exact_trotter_unitary(g, DriveParams(1.0, tau, 0.1, 64)))
        for beta in (10.0, 1.0, 0.1):
            mean, var = moments_at_beta(cond, beta)
            lp = LRTParams(beta, 0.1, tau, g.n_edges)
            k1, k2 = lrt_cumulant(1, lp), lrt_cumulant(2, lp)
            worst = max(worst, abs(mean - k1) / k1, abs(var - k2) / k2)
    record_property("detail", f"max rel err={worst:.2e}")
    assert worst < 0.05


@criterion(4, "dominant and satellite peaks of the mean work in tau, n=8")
def test_c04_satellite_peak(record_property):
    g = heavy_hex_layout(size_hint=8)
    taus = np.round(np.arange(0.1, 4.0001, 0.05), 4)
    beta = 1.0
    means = np.array([moments_at_beta(conditional_moments(
        exact_trotter_unitary(g, DriveParams(beta, t, 1.0, 10))), beta)[0] for t in taus])
    peaks = [i for i in range(1, len(taus) - 1) if means[i] > means[i - 1] and means[i] > means[i + 1]]
    dominant = int(np.argmax(means))
    satellite = [i for i in peaks if 2.8 <= taus[i] <= 3.3]
    record_property("detail", f"peaks at tau={[float(taus[i]) for i in peaks]}")
    assert 0.9 <= taus[dominant] <= 1.2
    assert dominant in peaks
    assert satellite and means[satellite[0]] < means[dominant]


def _tur_grid_graphs():
    return [path_graph(2), cycle_graph(3)] + [heavy_hex_layout(size_hint=n) for n in (4, 5, 6, 7, 8, 9, 10)]


@criterion(5, "TUR inequality on the exact oracle over the (n, beta, tau, gamma) grid")
def test_c05_tur_grid(record_property):
    betas = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)
    taus = (0.1, 0.5, 1.0, 2.0, 3.0, 4.0)
    gammas = (0.5, 1.0, 2.0, 4.0)
    violations, checked, min_mean = 0, 0, math.inf
    for g in _tur_grid_graphs():
        for tau in taus:
            for gamma in gammas:
                cond = conditional_moments(exact_trotter_unitary(g, DriveParams(1.0, tau, gamma, 10)))
                for beta in betas:
                    mean, var = moments_at_beta(cond, beta)
                    min_mean = min(min_mean, mean)
                    checked += 1
                    if var < tur_bound(mean, beta) - 1e-9:
                        violations += 1
    record_property("detail", f"{checked} points, {violations} violations, min mean={min_mean:.2e}")
    assert violations == 0
    assert min_mean >= -1e-10


@criterion(6, "LRT parametric TUR slope and variance/mean ratio")
def test_c06_high_temperature_slope(record_property):
    taus = np.linspace(0.1, 4.0, 40)
    slopes = {}
    for beta in (0.1, 10.0):
        bounds, variances = [], []
        for tau in taus:
            lp = LRTParams(beta, 0.01, float(tau), 9)
            k1, k2 = lrt_cumulant(1, lp), lrt_cumulant(2, lp)
            if k1 <= 0:
                continue
            bounds.append(tur_bound(k1, beta))
            variances.append(k2)
            assert abs(k2 / k1 - lrt_variance_to_mean(beta)) < 1e-6
            assert abs(k2 / k1 - 4 / math.tanh(2 * beta)) < 1e-6
        b, v = np.array(bounds), np.array(variances)
        slopes[beta] = float(b @ v / (b @ b))
    record_property("detail", f"slope(0.1)={slopes[0.1]:.5f} slope(10)={slopes[10.0]:.4f}")
    assert abs(slopes[0.1] - 1.0133) < 1e-3
    assert abs(slopes[10.0] - 20.00) < 1e-2
    assert abs(lrt_slope(0.1) - 1.0133) < 1e-3


def _pmf_moments(pmf):
    w = np.array(list(pmf)), np.array(list(pmf.values()))
    mean = float(w[1] @ w[0])
    mu2 = float(w[1] @ (w[0] - mean) ** 2)
    mu4 = float(w[1] @ (w[0] - mean) ** 4)
    return mean, mu2, mu4


@criterion(7, "white-noise sampler moments at 1e5 shots")
def test_c07_white_noise(record_property):
    n, shots = 10, 100_000
    worst = 0.0
    for k, beta in enumerate((0.0, 1.0, 20.0)):
        mean, var = wn_moments(n, beta)
        _, mu2, mu4 = _pmf_moments(wn_work_pmf(n, beta))
        assert abs(mu2 - var) < 1e-9
        stats = raw_estimators(wn_sampler(n, beta, shots, make_rng(7, k)))
        se_mean = math.sqrt(var / shots)
        se_var = math.sqrt((mu4 - var ** 2) / shots)
        z = max(abs(stats.mean - mean) / se_mean, abs(stats.variance - var) / se_var)
        worst = max(worst, z)
    record_property("detail", f"max |z|={worst:.2f}")
    assert worst < 4


@criterion(8, "SQT on the full basis equals exact Trotter moments, n=6")
def test_c08_sqt_full_basis(record_property):
    g = heavy_hex_layout(size_hint=6)
    worst = 0.0
    for beta, tau, gamma in ((1.0, 1.0, 1.0), (10.0, 0.7, 2.0), (0.1, 2.5, 0.5)):
        p = DriveParams(beta, tau, gamma, 10)
        est = sqt_from_samples(g, full_basis_samples(6), p)
        mean, var = exact_tpm_distribution(g, p).moments()
        worst = max(worst, abs(est.mean - mean), abs(est.variance - var))
    record_property("detail", f"max abs diff={worst:.1e}")
    assert worst < 1e-8


@criterion(9, "Krylov exponential action vs dense eigendecomposition")
def test_c09_krylov(record_property):
    import scipy.sparse as sp

    rng = np.random.default_rng(2024)
    worst = 0.0
    for trial in range(20):
        a = sp.random(200, 200, density=0.02, random_state=trial, data_rvs=lambda k: np.ones(k))
        a = ((a + a.T) > 0).astype(float) / 9.0
        theta = rng.uniform(-2.0, 2.0)
        v = rng.normal(size=200) + 1j * rng.normal(size=200)
        v /= np.linalg.norm(v)
        ref = dense_expm(a.toarray(), theta) @ v
        worst = max(worst, float(np.linalg.norm(expm_multiply_lanczos(a.tocsr(), v, theta) - ref)))
    record_property("detail", f"max L2 err={worst:.1e}")
    assert worst < 1e-8


@criterion(10, "second-order Trotter convergence, n=4")
def test_c10_trotter_convergence(record_property):
    g = heavy_hex_layout(size_hint=4)
    p = DriveParams(1.0, 1.0, 1.0, 2)
    ref = continuum_evolution(g, p)
    steps = np.array([2, 4, 8, 16, 32])
    errs = np.array([np.linalg.norm(exact_trotter_unitary(g, p.replace(n_trotter=int(k))) - ref, 2)
                     for k in steps])
    order = -np.polyfit(np.log(steps), np.log(errs), 1)[0]
    record_property("detail", f"errors={', '.join(f'{e:.1e}' for e in errs)} order={order:.3f}")
    assert np.all(np.diff(errs) < 0)
    assert abs(order - 2.0) <= 0.3


@criterion(11, "parity conservation, 1e4 noiseless shots at n=10")
def test_c11_parity(record_property, hh10):
    s = run_tpm(hh10, DriveParams(1.0, 1.0, 1.0, 10), 10_000, rng=make_rng(11, 0))
    _, eff = parity_filter(s)
    record_property("detail", f"efficiency={eff}")
    assert eff == 1.0


@criterion(12, "sampling consistency, 20000 shots vs oracle at n=10")
def test_c12_sampling_consistency(record_property, hh10):
    p = DriveParams(10.0, 1.0, 1.0, 10)
    dist = exact_tpm_distribution(hh10, p)
    mean, var = dist.moments()
    mu4 = dist.central_moment(4)
    shots = 20_000
    stats = raw_estimators(run_tpm(hh10, p, shots, rng=make_rng(12, 0)))
    z_mean = abs(stats.mean - mean) / math.sqrt(var / shots)
    z_var = abs(stats.variance - var) / math.sqrt((mu4 - var ** 2) / shots)
    record_property("detail", f"z_mean={z_mean:.2f} z_var={z_var:.2f}")
    assert z_mean < 3 and z_var < 3


@criterion(13, "Ext-SQT closer to the oracle than raw under p2=0.02, n=10")
def test_c13_ext_sqt_under_noise(record_property, hh10):
    p = DriveParams(1.0, 1.0, 1.0, 10)
    ref, _ = exact_tpm_distribution(hh10, p).moments()
    wins = 0
    for seed in range(5):
        s = run_tpm(hh10, p, 2000, NoiseSpec(0.02, 0.0), rng=make_rng(seed, 13))
        kept, _ = parity_filter(s)
        raw = raw_estimators(kept).mean
        ext = ext_sqt_estimate(hh10, kept, p).mean
        wins += abs(ext - ref) < abs(raw - ref)
    record_property("detail", f"ext_sqt closer on {wins}/5 seeds")
    assert wins >= 4
