"""Action of ``exp(-i theta A)`` on vectors for real symmetric (sparse) ``A``."""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal


class ExpmConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual estimate {residual:.3e})")
        self.residual = residual


def _norm_bound(a) -> float:
    """Upper bound on the spectral norm: max absolute row sum."""
    if sp.issparse(a):
        return float(abs(a).sum(axis=1).max()) if a.shape[0] else 0.0
    return float(np.abs(a).sum(axis=1).max()) if a.shape[0] else 0.0


def expm_multiply_lanczos(a, v: np.ndarray, theta: float, tol: float = 1e-10,
                          max_krylov: int = 60) -> np.ndarray:
    """``exp(-i theta A) v`` by adaptive Lanczos with substepping.

    Each substep grows the Krylov space until the a-posteriori estimate
    ``beta_m |[exp(-i h T_m)]_{m,0}| ||v||`` falls below its share of ``tol``.
    """
    v = np.asarray(v, dtype=complex)
    dim = v.shape[0]
    nv = np.linalg.norm(v)
    if nv == 0 or theta == 0:
        return v.copy()
    anorm = _norm_bound(a)
    # keep |h| ||A|| moderate so a modest Krylov space suffices
    n_sub = max(1, math.ceil(abs(theta) * anorm / 8.0))
    h = theta / n_sub
    w = v.copy()
    for _ in range(n_sub):
        w = _lanczos_step(a, w, h, tol / n_sub, min(max_krylov, dim))
    return w


def _lanczos_step(a, v: np.ndarray, h: float, tol: float, max_krylov: int) -> np.ndarray:
    nv = np.linalg.norm(v)
    if nv == 0:
        return v
    dim = v.shape[0]
    basis = np.zeros((max_krylov + 1, dim), dtype=complex)
    alpha = np.zeros(max_krylov)
    beta = np.zeros(max_krylov)
    basis[0] = v / nv
    err = np.inf
    for j in range(max_krylov):
        w = a @ basis[j]
        alpha[j] = np.vdot(basis[j], w).real
        w = w - alpha[j] * basis[j] - (beta[j - 1] * basis[j - 1] if j else 0)
        # full reorthogonalization keeps the small basis orthonormal
        w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        m = j + 1
        if m == 1:
            evals, evecs = np.array([alpha[0]]), np.ones((1, 1))
        else:
            evals, evecs = eigh_tridiagonal(alpha[:m], beta[: m - 1])
        coeff = evecs @ (np.exp(-1j * h * evals) * evecs[0])
        breakdown = beta[j] <= 1e-14 * max(1.0, abs(alpha[j]))
        err = 0.0 if breakdown else beta[j] * abs(coeff[-1]) * nv
        if err <= tol or m == dim or breakdown:
            return nv * (basis[:m].T @ coeff)
        basis[j + 1] = w / beta[j]
    raise ExpmConvergenceError("Lanczos exponential action did not converge", err)


def expm_multiply_taylor(a, b: np.ndarray, theta: float, tol: float = 1e-10,
                         max_terms: int = 60) -> np.ndarray:
    """``exp(-i theta A) B`` for a block of columns by scaled truncated Taylor series.

    With ``x = |theta| ||A|| / s <= 1`` per substep, the tail after ``k``
    terms is bounded by ``x^(k+1)/(k+1)! * e^x``; terms are added until the
    bound drops below ``tol / s`` (relative to each column norm).
    """
    b = np.asarray(b, dtype=complex)
    if theta == 0:
        return b.copy()
    anorm = _norm_bound(a)
    if anorm == 0:
        return b.copy()
    n_sub = max(1, math.ceil(abs(theta) * anorm))
    h = theta / n_sub
    x = abs(h) * anorm
    local_tol = tol / n_sub
    n_terms = None
    bound = math.exp(x)
    for k in range(1, max_terms + 1):
        bound *= x / k
        if bound * x / (k + 1) <= local_tol:
            n_terms = k
            break
    if n_terms is None:
        raise ExpmConvergenceError("Taylor series truncation failed", bound)
    out = b
    for _ in range(n_sub):
        term = out
        acc = out.copy()
        for k in range(1, n_terms + 1):
            term = (-1j * h / k) * (a @ term)
            acc += term
        out = acc
    return out
