"""Sample-based post-processing of two-point trajectories.

The dynamics are projected onto the span of a set ``S`` of bitstrings: the
diagonal energies and the interaction restricted to ``S`` generate a
projected Trotter evolution ``T``, and the work distribution is recomputed as
``p[m, n] = |T[m, n]|^2 exp(-beta E_n) / Z_S``. Ext-SQT first prunes ``S`` to
its high Gibbs-weight part and then adds every bitstring reachable by one
interaction term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .bits import bits_to_int, energy_of_int
from .expm import expm_multiply_lanczos, expm_multiply_taylor
from .lattice import Graph
from .protocol import DriveParams, trotter_weights
from .samples import TPMSamples
from .workstats import WorkStatistics

DEFAULT_DELTA = 1e-3
DEFAULT_MAX_DIM = 32000
STREAM_THRESHOLD = 8192
EXPM_TOL = 1e-10


class SubspaceTooLarge(RuntimeError):
    pass


@dataclass
class Subspace:
    """Ordered set of distinct bitstrings stored as integer keys (bit q = qubit q)."""

    basis: list[int]
    n_bits: int
    index_of: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.basis:
            raise ValueError("subspace must contain at least one bitstring")
        self.index_of = {z: i for i, z in enumerate(self.basis)}
        if len(self.index_of) != len(self.basis):
            raise ValueError("subspace basis has duplicates")

    @classmethod
    def from_keys(cls, keys, n_bits: int) -> "Subspace":
        return cls(list(dict.fromkeys(keys)), n_bits)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __contains__(self, key: int) -> bool:
        return key in self.index_of

    def energies(self) -> np.ndarray:
        return np.array([energy_of_int(z, self.n_bits) for z in self.basis], dtype=float)


@dataclass
class ProjectedOperators:
    e_diag: np.ndarray
    v_sparse: sp.csr_matrix


@dataclass(frozen=True)
class SQTEstimate:
    stats: WorkStatistics
    subspace_dim: int
    gibbs_mass_captured: float
    total_probability: float

    @property
    def mean(self) -> float:
        return self.stats.mean

    @property
    def variance(self) -> float:
        return self.stats.variance


def build_subspace(samples: TPMSamples) -> Subspace:
    """Union of all x and y bitstrings, first-seen order (x_1, y_1, x_2, ...)."""
    if len(samples) == 0:
        raise ValueError("no samples")
    xk = bits_to_int(samples.x)
    yk = bits_to_int(samples.y)
    keys = [k for pair in zip(xk, yk) for k in pair]
    return Subspace.from_keys(keys, samples.n_qubits)


def _edge_masks(g: Graph) -> list[int]:
    return [(1 << p) | (1 << r) for p, r in g.edges]


def project_operators(g: Graph, s: Subspace) -> ProjectedOperators:
    """Energies on ``S`` and the interaction matrix ``<z_m|V|z_n>`` (entries 0 or 1/|E|)."""
    if s.n_bits != g.n_vertices:
        raise ValueError(f"bitstring length {s.n_bits} does not match graph size {g.n_vertices}")
    m = s.dim
    masks = _edge_masks(g)
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    if s.n_bits <= 62:
        keys = np.array(s.basis, dtype=np.int64)
        order = np.argsort(keys)
        sorted_keys = keys[order]
        ar = np.arange(m)
        for mask in masks:
            nb = keys ^ np.int64(mask)
            pos = np.minimum(np.searchsorted(sorted_keys, nb), m - 1)
            found = sorted_keys[pos] == nb
            rows.append(ar[found])
            cols.append(order[pos[found]])
    else:
        r_list, c_list = [], []
        for i, z in enumerate(s.basis):
            for mask in masks:
                j = s.index_of.get(z ^ mask)
                if j is not None:
                    r_list.append(i)
                    c_list.append(j)
        rows.append(np.array(r_list, dtype=np.int64))
        cols.append(np.array(c_list, dtype=np.int64))
    r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    data = np.full(r.size, 1.0 / g.n_edges)
    v = sp.csr_matrix((data, (r, c)), shape=(m, m))
    return ProjectedOperators(s.energies(), v)


def _evolve_block(ops: ProjectedOperators, p: DriveParams, block: np.ndarray, method: str,
                  tol: float) -> np.ndarray:
    dt = p.dt
    weights = trotter_weights(p)
    half = np.exp(-0.5j * dt * ops.e_diag)[:, None]
    step_tol = tol / p.n_trotter
    out = half * block
    for ell, w in enumerate(weights):
        theta = dt * float(w)
        if method == "taylor":
            out = expm_multiply_taylor(ops.v_sparse, out, theta, step_tol)
        elif method == "lanczos":
            out = np.column_stack([expm_multiply_lanczos(ops.v_sparse, out[:, j], theta, step_tol)
                                   for j in range(out.shape[1])])
        else:
            raise ValueError(f"unknown exponential-action method {method!r}")
        out = (half * half if ell < p.n_trotter - 1 else half) * out
    return out


def evolve_subspace(ops: ProjectedOperators, p: DriveParams, columns=None, method: str = "taylor",
                    tol: float = EXPM_TOL) -> np.ndarray:
    """Columns of the projected Trotter evolution ``T`` (all columns by default)."""
    m = ops.e_diag.size
    if m < 1:
        raise ValueError("empty subspace")
    cols = np.arange(m) if columns is None else np.asarray(columns)
    block = np.zeros((m, cols.size), dtype=complex)
    block[cols, np.arange(cols.size)] = 1.0
    return _evolve_block(ops, p, block, method, tol)


def _log_partition_single(beta: float) -> float:
    # log(e^beta + e^-beta)
    return abs(beta) + math.log1p(math.exp(-2 * abs(beta)))


def gibbs_mass(s: Subspace, beta: float) -> float:
    """Probability of ``S`` under the full product Gibbs distribution."""
    logp = -beta * s.energies() - s.n_bits * _log_partition_single(beta)
    return float(np.exp(logp).sum())


def _batch_columns(m: int) -> int:
    return max(1, min(m, (1 << 24) // (16 * max(m, 1)), 512))


def sqt_estimate(g: Graph, s: Subspace, p: DriveParams, *, n_samples: int = 0,
                 tag: str = "sqt", method: str = "taylor", tol: float = EXPM_TOL,
                 ops: ProjectedOperators | None = None) -> SQTEstimate:
    """Work moments from the projected dynamics on ``S``.

    Columns of ``T`` are evolved in fixed-size batches and reduced into the
    estimator sums in column order, so ``T`` is never stored whole.
    """
    if ops is None:
        ops = project_operators(g, s)
    e = ops.e_diag
    m = e.size
    logw = -p.beta * e
    logz = float(np.logaddexp.reduce(logw))
    w = np.exp(logw - logz)
    s0 = s1 = s2 = 0.0
    batch = _batch_columns(m) if m > STREAM_THRESHOLD else min(m, 512)
    e2 = e * e
    for start in range(0, m, batch):
        cols = np.arange(start, min(m, start + batch))
        live = cols[w[cols] > 0]
        if live.size == 0:
            continue
        t = evolve_subspace(ops, p, live, method, tol)
        prob = np.abs(t) ** 2
        a0 = prob.sum(axis=0)
        a1 = e @ prob
        a2 = e2 @ prob
        en = e[live]
        wn = w[live]
        s0 += float(wn @ a0)
        s1 += float(wn @ (a1 - en * a0))
        s2 += float(wn @ (a2 - 2 * en * a1 + en * en * a0))
    mean = s1
    var = s2 - 2 * mean * s1 + mean * mean * s0
    stats = WorkStatistics(mean, max(var, 0.0) if var > -1e-12 else var, n_samples, tag)
    return SQTEstimate(stats, m, gibbs_mass(s, p.beta), s0)


def prune(s: Subspace, beta: float, delta: float = DEFAULT_DELTA) -> Subspace:
    """Smallest Gibbs-weight-ordered prefix of ``S`` holding at least ``1 - delta`` of its mass."""
    if not 0 <= delta < 1:
        raise ValueError("delta must be in [0, 1)")
    logw = -beta * s.energies()
    order = np.argsort(-logw, kind="stable")
    if delta == 0:
        return Subspace([s.basis[i] for i in order], s.n_bits)
    w = np.exp(logw[order] - logw.max())
    cum = np.cumsum(w) / w.sum()
    k = int(np.searchsorted(cum, 1.0 - delta, side="left"))
    k = min(k, len(order) - 1)
    return Subspace([s.basis[i] for i in order[: k + 1]], s.n_bits)


def neighbors(key: int, g: Graph) -> list[int]:
    """Bitstrings coupled to ``key`` by one ``X_p X_r`` term."""
    return [key ^ mask for mask in _edge_masks(g)]


def extend(c: Subspace, g: Graph) -> Subspace:
    """``C`` followed by every one-edge double flip of its elements, deduplicated."""
    masks = _edge_masks(g)
    keys = list(c.basis)
    for z in c.basis:
        keys.extend(z ^ mask for mask in masks)
    return Subspace.from_keys(keys, c.n_bits)


def _check_dim(dim: int, max_dim: int) -> None:
    if dim > max_dim:
        raise SubspaceTooLarge(f"subspace dimension {dim} exceeds the cap of {max_dim}")


def sqt_from_samples(g: Graph, samples: TPMSamples, p: DriveParams,
                     max_dim: int = DEFAULT_MAX_DIM, **kw) -> SQTEstimate:
    s = build_subspace(samples)
    _check_dim(s.dim, max_dim)
    return sqt_estimate(g, s, p, n_samples=len(samples), tag="sqt", **kw)


def ext_sqt_estimate(g: Graph, samples: TPMSamples, p: DriveParams, delta: float = DEFAULT_DELTA,
                     max_dim: int = DEFAULT_MAX_DIM, **kw) -> SQTEstimate:
    """build_subspace -> prune -> extend -> sqt_estimate."""
    s = build_subspace(samples)
    c = prune(s, p.beta, delta)
    s_ext = extend(c, g)
    _check_dim(s_ext.dim, max_dim)
    return sqt_estimate(g, s_ext, p, n_samples=len(samples), tag="ext_sqt", **kw)
