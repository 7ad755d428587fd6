"""Generalized symmetric eigensolver for the secular system ``H c = E S c``.

``S`` is factored as ``L L^T``; the standard problem ``L^-1 H L^-T`` is
diagonalized by cyclic Jacobi rotations and the eigenvectors are mapped back.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .matrix import MatrixPair

log = logging.getLogger(__name__)


class EigenError(ArithmeticError):
    pass


@dataclass
class Spectrum:
    energies: np.ndarray     # (D,) ascending
    vectors: np.ndarray      # (D, D), column j pairs with energies[j]
    sweeps: int = 0

    def __len__(self):
        return self.energies.size


def _round_robin(n: int):
    """Pairings of 0..n-1 (padded to even) such that every pair meets once."""
    m = n + (n % 2)
    idx = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(idx[k], idx[m - 1 - k]) for k in range(m // 2)]
        rounds.append([(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n])
        idx = [idx[0], idx[-1]] + idx[1:-1]
    return rounds


def jacobi_eigh(A: np.ndarray, tol: float = 1e-14, max_sweeps: int | None = None):
    """Eigen-decomposition of a real symmetric matrix by Jacobi sweeps.

    Pivots are visited in round-robin order; the rotations of one round act
    on disjoint index pairs, commute, and are applied together as a single
    orthogonal matrix. Converged when the off-diagonal Frobenius norm drops
    below ``tol * ||A||_F``. Returns (eigenvalues, eigenvectors, sweeps) unsorted.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    if max_sweeps is None:
        max_sweeps = 100 * n
    scale = np.linalg.norm(A)
    if n == 1 or scale == 0.0:
        return np.diag(A).copy(), V, 0
    thresh = tol * scale
    rounds = [tuple(np.array(r).T) for r in _round_robin(n)]
    for sweep in range(1, max_sweeps + 1):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2) * 2.0)
        if off < thresh:
            return np.diag(A).copy(), V, sweep - 1
        for p, q in rounds:
            apq = A[p, q]
            live = apq != 0.0
            if not live.any():
                continue
            theta = (A[q, q] - A[p, p]) / (2.0 * np.where(live, apq, 1.0))
            t = np.copysign(1.0, theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(live, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            J = np.eye(n)
            J[p, p] = c
            J[q, q] = c
            J[p, q] = s
            J[q, p] = -s
            A = J.T @ A @ J
            A[p, q] = 0.0
            A[q, p] = 0.0
            V = V @ J
    off = np.sqrt(np.sum(np.tril(A, -1) ** 2) * 2.0)
    if off < thresh:
        return np.diag(A).copy(), V, max_sweeps
    raise EigenError(f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal {off:.3e})")


def _cholesky(S: np.ndarray) -> np.ndarray:
    """(L, S') with S' = L L^T: S itself, or S plus a 1e-12 * trace / D
    diagonal jitter when the first factorization fails."""
    try:
        return np.linalg.cholesky(S), S
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-12 * np.trace(S) / S.shape[0]
    log.warning("overlap matrix not positive definite; retrying with diagonal jitter %.3e", jitter)
    S = S + jitter * np.eye(S.shape[0])
    try:
        return np.linalg.cholesky(S), S
    except np.linalg.LinAlgError:
        raise EigenError("overlap matrix is not positive definite") from None


def solve(pair: MatrixPair) -> Spectrum:
    """All eigenpairs of ``H c = E S c``, ascending, S-normalized.

    Each vector's largest-magnitude component is made positive.
    """
    H = 0.5 * (pair.H + pair.H.T)
    S = 0.5 * (pair.S + pair.S.T)
    L, S = _cholesky(S)
    X = solve_triangular(L, H, lower=True)
    A = solve_triangular(L, X.T, lower=True).T
    A = 0.5 * (A + A.T)
    vals, Y, sweeps = jacobi_eigh(A)
    C = solve_triangular(L.T, Y, lower=False)
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    C = C[:, order]
    norms = np.sqrt(np.einsum("ij,ik,kj->j", C, S, C))
    C = C / norms
    lead = C[np.argmax(np.abs(C), axis=0), np.arange(C.shape[1])]
    C = C * np.where(lead < 0, -1.0, 1.0)
    return Spectrum(vals, C, sweeps)


def ground_state(spec: Spectrum):
    if len(spec) == 0:
        raise EigenError("empty spectrum")
    j = int(np.argmin(spec.energies))
    return float(spec.energies[j]), spec.vectors[:, j].copy()
