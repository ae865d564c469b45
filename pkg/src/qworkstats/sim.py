"""Statevector execution of gate programs and two-point trajectory sampling.

Trajectories follow the classical-prep route: ``x`` is drawn from the product
Gibbs distribution on the host, ``|x>`` is evolved by the Trotter body, and
``y`` is drawn from the Born distribution. Noise is a quantum-trajectory
unraveling of two-qubit depolarizing after each RXX plus readout flips on y.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bits import basis_energies, bits_to_index, energy_of_bits, index_to_bits
from .lattice import EdgeColoring, Graph
from .protocol import DriveParams, GateProgram, build_program, thermal_one_probability
from .samples import TPMSamples

DEFAULT_MAX_QUBITS = 25
_BATCH_BYTES = 1 << 25


class ResourceLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    p2: float = 0.0
    p_read: float = 0.0

    def __post_init__(self):
        for name in ("p2", "p_read"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    @property
    def active(self) -> bool:
        return self.p2 > 0 or self.p_read > 0


def make_rng(seed: int, task: int = 0) -> np.random.Generator:
    """Counter-based stream for ``(seed, task)``; distinct tasks are independent."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(task)])))


def check_size(n: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> None:
    if n > max_qubits:
        raise ResourceLimitError(f"{n} qubits exceeds the statevector limit of {max_qubits}")


@lru_cache(maxsize=8)
def _indices(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


@lru_cache(maxsize=64)
def _bit_signs(n: int, q: int) -> np.ndarray:
    # +1 where qubit q is 1, -1 where it is 0
    return 2.0 * ((_indices(n) >> q) & 1) - 1.0


def basis_state(bits) -> np.ndarray:
    bits = np.asarray(bits)
    n = bits.shape[-1]
    psi = np.zeros(1 << n, dtype=complex)
    psi[int(bits_to_index(bits))] = 1.0
    return psi


def basis_states(bits: np.ndarray) -> np.ndarray:
    """Columns ``|x_k>`` for each row of a ``(k, n)`` bit array."""
    bits = np.atleast_2d(bits)
    k, n = bits.shape
    psi = np.zeros((1 << n, k), dtype=complex)
    psi[bits_to_index(bits), np.arange(k)] = 1.0
    return psi


def _apply_ry(psi: np.ndarray, q: int, theta: float) -> np.ndarray:
    n = psi.shape[0].bit_length() - 1
    view = psi.reshape((1 << (n - q - 1), 2, 1 << q) + psi.shape[1:])
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    a0 = view[:, 0].copy()
    a1 = view[:, 1]
    view[:, 0] = c * a0 - s * a1
    view[:, 1] = s * a0 + c * a1
    return psi


def _apply_rxx(psi: np.ndarray, p: int, r: int, phi: float) -> np.ndarray:
    n = psi.shape[0].bit_length() - 1
    flipped = psi[_indices(n) ^ ((1 << p) | (1 << r))]
    return np.cos(phi / 2) * psi - 1j * np.sin(phi / 2) * flipped


def _apply_pauli_column(psi: np.ndarray, col: int, q: int, pauli: int) -> None:
    # 1=X, 2=Y (as XZ up to a global phase), 3=Z
    n = psi.shape[0].bit_length() - 1
    v = psi[:, col]
    if pauli in (2, 3):
        v = -_bit_signs(n, q) * v
    if pauli in (1, 2):
        v = v[_indices(n) ^ (1 << q)]
    psi[:, col] = v


def apply_program(state: np.ndarray, program: GateProgram, noise: NoiseSpec | None = None,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Apply the unitary instructions of ``program`` to one state or a batch of columns.

    ``state`` has shape ``(2**n,)`` or ``(2**n, k)``; with ``noise.p2 > 0``
    every column gets its own Pauli realization after each RXX.
    MEASURE_ALL is not executed here; pass ``program.body()``.
    """
    psi = np.array(state, dtype=complex)
    n = program.n_qubits
    if psi.shape[0] != 1 << n:
        raise ValueError(f"state dimension {psi.shape[0]} does not match {n} qubits")
    squeeze = psi.ndim == 1
    if squeeze:
        psi = psi[:, None]
    n_cols = psi.shape[1]
    p2 = noise.p2 if noise is not None else 0.0
    if p2 > 0 and rng is None:
        raise ValueError("noisy execution needs an rng")

    rz_acc: dict[int, float] = {}

    def flush_rz():
        nonlocal psi
        if not rz_acc:
            return
        arg = np.zeros(1 << n)
        for q, a in rz_acc.items():
            arg += 0.5 * a * _bit_signs(n, q)
        psi *= np.exp(1j * arg)[:, None]
        rz_acc.clear()

    for ins in program:
        if ins.op == "RZ":
            q = ins.qubits[0]
            rz_acc[q] = rz_acc.get(q, 0.0) + ins.angle
            continue
        flush_rz()
        if ins.op == "RY":
            psi = _apply_ry(psi, ins.qubits[0], ins.angle)
        elif ins.op == "RXX":
            p, r = ins.qubits
            psi = _apply_rxx(psi, p, r, ins.angle)
            if p2 > 0:
                hit = np.flatnonzero(rng.random(n_cols) < p2)
                paulis = rng.integers(1, 16, size=hit.size)
                for col, pk in zip(hit, paulis):
                    pa, pb = divmod(int(pk), 4)
                    if pa:
                        _apply_pauli_column(psi, col, p, pa)
                    if pb:
                        _apply_pauli_column(psi, col, r, pb)
        elif ins.op == "MEASURE_ALL":
            raise ValueError("apply_program runs unitary instructions only; use program.body()")
        else:
            raise ValueError(f"unknown op {ins.op!r}")
    flush_rz()
    return psi[:, 0] if squeeze else psi


def sample_initial(beta: float, n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Bits i.i.d. with P(1) = e^-beta / (e^beta + e^-beta)."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    p1 = thermal_one_probability(beta)
    shape = (n,) if size is None else (size, n)
    return (rng.random(shape) < p1).astype(np.uint8)


def _draw_indices(probs: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs)
    u = rng.random(count) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), probs.size - 1)


def sample_final(state: np.ndarray, rng: np.random.Generator, noise: NoiseSpec | None = None,
                 shots: int | None = None) -> np.ndarray:
    """Draw ``y`` from ``|<y|state>|^2``, with independent readout flips if requested."""
    n = state.shape[0].bit_length() - 1
    probs = np.abs(state) ** 2
    idx = _draw_indices(probs, 1 if shots is None else shots, rng)
    y = index_to_bits(idx, n)
    if noise is not None and noise.p_read > 0:
        y ^= (rng.random(y.shape) < noise.p_read).astype(np.uint8)
    return y[0] if shots is None else y


def _batch_size(n: int) -> int:
    return max(1, _BATCH_BYTES // (16 << n))


def run_tpm(g: Graph, p: DriveParams, shots: int, noise: NoiseSpec | None = None, seed: int = 0,
            *, rng: np.random.Generator | None = None, coloring: EdgeColoring | None = None,
            max_qubits: int = DEFAULT_MAX_QUBITS) -> TPMSamples:
    """Sample ``shots`` two-point trajectories.

    Without gate noise, one evolution is shared by all shots with the same
    initial bitstring; with gate noise each shot is its own trajectory.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = g.n_vertices
    check_size(n, max_qubits)
    if rng is None:
        rng = make_rng(seed)
    body = build_program(g, p, coloring).body()
    x = sample_initial(p.beta, n, rng, size=shots)
    y = np.empty_like(x)
    batch = _batch_size(n)
    gate_noise = noise is not None and noise.p2 > 0

    if not gate_noise:
        uniq, inverse = np.unique(x, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).ravel()
        for start in range(0, len(uniq), batch):
            block = uniq[start:start + batch]
            psi = apply_program(basis_states(block), body)
            probs = np.abs(psi) ** 2
            for j in range(block.shape[0]):
                where = np.flatnonzero(inverse == start + j)
                y[where] = index_to_bits(_draw_indices(probs[:, j], where.size, rng), n)
    else:
        for start in range(0, shots, batch):
            block = x[start:start + batch]
            psi = apply_program(basis_states(block), body, noise, rng)
            probs = np.abs(psi) ** 2
            for j in range(block.shape[0]):
                y[start + j] = index_to_bits(_draw_indices(probs[:, j], 1, rng), n)[0]

    if noise is not None and noise.p_read > 0:
        y ^= (rng.random(y.shape) < noise.p_read).astype(np.uint8)
    return TPMSamples(x, y)


def parity_filter(samples: TPMSamples) -> tuple[TPMSamples, float]:
    """Keep trajectories whose x and y popcounts have equal parity."""
    keep = (samples.x.sum(axis=1) - samples.y.sum(axis=1)) % 2 == 0
    eff = float(keep.mean()) if len(samples) else 0.0
    return samples[keep], eff


def exact_conditional_moments(g: Graph, p: DriveParams, x, *, coloring: EdgeColoring | None = None,
                              max_qubits: int = DEFAULT_MAX_QUBITS):
    """``(E[W|x], E[W^2|x])`` from the evolved state ``U|x>``; vectorised over rows of ``x``."""
    x = np.asarray(x, dtype=np.uint8)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    n = x.shape[1]
    if n != g.n_vertices:
        raise ValueError("bitstring length does not match the graph")
    check_size(n, max_qubits)
    body = build_program(g, p, coloring).body()
    energies = basis_energies(n)
    ex = energy_of_bits(x).astype(float)
    m1 = np.empty(len(x))
    m2 = np.empty(len(x))
    batch = _batch_size(n)
    for start in range(0, len(x), batch):
        psi = apply_program(basis_states(x[start:start + batch]), body)
        probs = np.abs(psi) ** 2
        e1 = energies @ probs
        e2 = (energies ** 2) @ probs
        exb = ex[start:start + batch]
        m1[start:start + batch] = e1 - exb
        m2[start:start + batch] = e2 - 2 * exb * e1 + exb ** 2
    if single:
        return float(m1[0]), float(m2[0])
    return m1, m2


def exhaustive_moments(g: Graph, p: DriveParams, *, coloring: EdgeColoring | None = None,
                       max_qubits: int = 16) -> tuple[float, float]:
    """Gibbs-weighted average of the conditional moments over all ``2**n`` inputs."""
    n = g.n_vertices
    check_size(n, max_qubits)
    xs = index_to_bits(np.arange(1 << n), n)
    m1, m2 = exact_conditional_moments(g, p, xs, coloring=coloring, max_qubits=max_qubits)
    logw = -p.beta * basis_energies(n)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    mean = float(w @ m1)
    return mean, float(w @ m2) - mean ** 2
