"""Dense brute-force references for small systems.

Operators are assembled from Kronecker products (qubit 0 is the least
significant tensor factor, matching statevector indices) and exponentiated
by full eigendecomposition, independently of the gate-level simulator.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bits import basis_energies
from .lattice import Graph
from .protocol import DriveParams, trotter_weights

MAX_DENSE_QUBITS = 12
MAX_TABLE_QUBITS = 10

_I2 = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


class OracleSizeError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, delta: float, steps: int):
        super().__init__(f"{message} (delta={delta:.3e} at {steps} steps)")
        self.delta = delta
        self.steps = steps


def _check(n: int, cap: int) -> None:
    if n > cap:
        raise OracleSizeError(f"{n} qubits exceeds the dense oracle cap of {cap}")


def _embed(n: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1))
    for q in reversed(range(n)):
        out = np.kron(out, ops.get(q, _I2))
    return out


def dense_h0(n: int) -> np.ndarray:
    return -sum(_embed(n, {q: _Z}) for q in range(n))


def dense_v(g: Graph) -> np.ndarray:
    n = g.n_vertices
    return sum(_embed(n, {p: _X, r: _X}) for p, r in g.edges) / g.n_edges


def dense_hamiltonian(g: Graph, lambda_val: float) -> np.ndarray:
    """``H = -sum Z_q + (lambda/|E|) sum X_p X_r`` as an explicit matrix."""
    _check(g.n_vertices, MAX_DENSE_QUBITS)
    return dense_h0(g.n_vertices) + lambda_val * dense_v(g)


def parity_operator(n: int) -> np.ndarray:
    return _embed(n, {q: _Z for q in range(n)})


def dense_expm(h: np.ndarray, theta: float) -> np.ndarray:
    """``exp(-i theta h)`` for Hermitian ``h`` by eigendecomposition."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(h, h.conj().T, atol=1e-12):
        raise ValueError("dense_expm needs a Hermitian matrix")
    w, q = np.linalg.eigh(h)
    return (q * np.exp(-1j * theta * w)) @ q.conj().T


def _trotter_product(g: Graph, tau: float, gamma: float, n_steps: int) -> np.ndarray:
    n = g.n_vertices
    dt = tau / n_steps
    w_all = trotter_weights(DriveParams(0.0, tau, gamma, n_steps))
    half = np.exp(-0.5j * dt * np.diag(dense_h0(n)))
    lam, q = np.linalg.eigh(dense_v(g))
    qh = q.conj().T
    u = np.diag(half).astype(complex)
    for ell, w in enumerate(w_all):
        step = (q * np.exp(-1j * dt * w * lam)) @ qh
        u = step @ u
        # the closing half step merges with the next opening one
        u = (half * half if ell < n_steps - 1 else half)[:, None] * u
    return u


def exact_trotter_unitary(g: Graph, p: DriveParams) -> np.ndarray:
    """Dense second-order Trotter product in the same order as the gate program."""
    _check(g.n_vertices, MAX_DENSE_QUBITS)
    return _trotter_product(g, p.tau, p.gamma, p.n_trotter)


def continuum_evolution(g: Graph, p: DriveParams, refinement: int = 4096, tol: float = 1e-9,
                        max_refinement: int = 1 << 16) -> np.ndarray:
    """Reference for the time-ordered exponential.

    Second-order stepping with ``refinement`` steps; the refinement is doubled
    until a further doubling changes the operator (spectral norm) by less
    than ``tol``, and the coarser of the last pair is returned.
    """
    _check(g.n_vertices, MAX_DENSE_QUBITS)
    steps = refinement
    u = _trotter_product(g, p.tau, p.gamma, steps)
    while True:
        finer = _trotter_product(g, p.tau, p.gamma, 2 * steps)
        delta = float(np.linalg.norm(finer - u, 2))
        if delta < tol:
            return u
        if 2 * steps > max_refinement:
            raise ConvergenceError("continuum evolution did not converge", delta, 2 * steps)
        steps, u = 2 * steps, finer


def thermal_probabilities(n: int, beta: float) -> np.ndarray:
    logw = -beta * basis_energies(n)
    w = np.exp(logw - logw.max())
    return w / w.sum()


@dataclass
class TPMDistribution:
    """Joint table ``prob[y, x] = |<y|U|x>|^2 p_th(x)``."""

    prob: np.ndarray
    energies: np.ndarray

    @property
    def n_qubits(self) -> int:
        return self.energies.size.bit_length() - 1

    def work_matrix(self) -> np.ndarray:
        return self.energies[:, None] - self.energies[None, :]

    def moments(self) -> tuple[float, float]:
        w = self.work_matrix()
        mean = float((self.prob * w).sum())
        var = float((self.prob * (w - mean) ** 2).sum())
        return mean, var

    def work_pmf(self) -> dict[int, float]:
        w = np.rint(self.work_matrix()).astype(np.int64)
        values = np.unique(w)
        return {int(v): float(self.prob[w == v].sum()) for v in values}

    def central_moment(self, k: int) -> float:
        mean, _ = self.moments()
        return float((self.prob * (self.work_matrix() - mean) ** k).sum())


def exact_tpm_distribution(g: Graph, p: DriveParams, use_continuum: bool = False,
                           unitary: np.ndarray | None = None) -> TPMDistribution:
    n = g.n_vertices
    _check(n, MAX_TABLE_QUBITS)
    if unitary is None:
        unitary = continuum_evolution(g, p) if use_continuum else exact_trotter_unitary(g, p)
    trans = np.abs(unitary) ** 2
    return TPMDistribution(trans * thermal_probabilities(n, p.beta)[None, :], basis_energies(n))


def conditional_moments(unitary: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-input ``E[W|x]`` and ``E[W^2|x]`` from a dense evolution operator."""
    n = unitary.shape[0].bit_length() - 1
    e = basis_energies(n)
    trans = np.abs(unitary) ** 2
    e1 = e @ trans
    e2 = (e ** 2) @ trans
    return e1 - e, e2 - 2 * e * e1 + e ** 2


def moments_at_beta(cond: tuple[np.ndarray, np.ndarray], beta: float) -> tuple[float, float]:
    c1, c2 = cond
    n = c1.size.bit_length() - 1
    pth = thermal_probabilities(n, beta)
    mean = float(pth @ c1)
    var = float(pth @ ((c2 - 2 * mean * c1) + mean ** 2))
    return mean, var


def dump_matrix(matrix: np.ndarray, path: str | Path) -> None:
    """Row-major little-endian complex128 pairs, no header."""
    np.ascontiguousarray(matrix, dtype="<c16").tofile(path)


def load_matrix(path: str | Path) -> np.ndarray:
    data = np.fromfile(path, dtype="<c16")
    dim = int(round(np.sqrt(data.size)))
    if dim * dim != data.size:
        raise ValueError(f"{path}: {data.size} entries is not a square matrix")
    return data.reshape(dim, dim)
