"""Closed-form matrix elements of the state equation in a Gaussian basis.

The state function is expanded on ``D`` Gaussians

    psi_d(x) = prod_i exp(-lambda_d (x_i - eta_di)^2)

and the secular system needs the overlap ``S``, the kinetic part ``T`` and the
potential part ``V`` of the Hamiltonian, ``H = T + V``. The potential part is
built from three families of Gaussian-product integrals weighted by the
feature density ``p(x) = prod_i N(mu_i, sigma_i^2)``:

    Lambda_mn    = int psi_m psi_n p(x) dx
    Omega_mnp    = int psi_m psi_n phi_p p(x) dx
    Phi_mnpq     = int psi_m psi_n phi_p phi_q p(x) dx

All products over the ``N`` input dimensions are formed as ``exp(sum(log))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DatasetStats
from .network import NetworkParams, PotentialConstants, kernel_matrix, gaussian_density

# S must have smallest/largest eigenvalue ratio above this
S_CONDITION_FLOOR = 1e-14


class MatrixError(ValueError):
    pass


@dataclass
class StateBasis:
    """Exponents ``lam`` (D,) and centers ``eta`` (D, N), one row per basis function."""

    lam: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        self.lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        self.eta = np.atleast_2d(np.asarray(self.eta, dtype=float))
        if self.lam.size < 1:
            raise MatrixError("basis needs at least one function")
        if self.eta.shape[0] != self.lam.size:
            raise MatrixError(f"eta has {self.eta.shape[0]} rows, expected {self.lam.size}")
        if np.any(self.lam <= 0):
            raise MatrixError("basis exponents must be positive")
        if not (np.all(np.isfinite(self.lam)) and np.all(np.isfinite(self.eta))):
            raise MatrixError("non-finite basis parameter")

    @property
    def size(self) -> int:
        return self.lam.size

    @property
    def n_inputs(self) -> int:
        return self.eta.shape[1]

    def evaluate(self, x) -> np.ndarray:
        """All basis functions at points ``x`` (n, N) -> (n, D)."""
        x = np.atleast_2d(x)
        r2 = ((x[:, None, :] - self.eta[None, :, :]) ** 2).sum(axis=-1)
        return np.exp(-self.lam[None, :] * r2)

    def to_dict(self) -> dict:
        return {"lambda": self.lam.tolist(), "eta": self.eta.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "StateBasis":
        return cls(np.array(d["lambda"], dtype=float), np.array(d["eta"], dtype=float))


@dataclass
class MatrixPair:
    H: np.ndarray
    S: np.ndarray
    T: np.ndarray
    V: np.ndarray


@dataclass
class EnergyBreakdown:
    T: float
    V: float

    @property
    def E(self) -> float:
        return self.T + self.V


def _pair_terms(basis: StateBasis):
    lm = basis.lam[:, None]
    ln = basis.lam[None, :]
    em = basis.eta[:, None, :]
    en = basis.eta[None, :, :]
    return lm, ln, em, en


def _log_overlap(basis: StateBasis) -> np.ndarray:
    lm, ln, em, en = _pair_terms(basis)
    lsum = lm + ln
    red = lm * ln / lsum
    N = basis.n_inputs
    return 0.5 * N * np.log(np.pi / lsum) - red * ((em - en) ** 2).sum(axis=-1)


def overlap_matrix(basis: StateBasis) -> np.ndarray:
    return np.exp(_log_overlap(basis))


def overlap(m: int, n: int, basis: StateBasis) -> float:
    s = basis.lam[m] + basis.lam[n]
    if s == 0:
        raise MatrixError("lambda_m + lambda_n = 0")
    red = basis.lam[m] * basis.lam[n] / s
    d2 = np.sum((basis.eta[m] - basis.eta[n]) ** 2)
    return float((np.pi / s) ** (basis.n_inputs / 2) * np.exp(-red * d2))


def lambda_matrix(basis: StateBasis, stats: DatasetStats) -> np.ndarray:
    """Lambda_mn for all pairs, shape (D, D)."""
    lm, ln, em, en = _pair_terms(basis)
    lm, ln = lm[..., None], ln[..., None]
    s2 = stats.sigma ** 2
    mu = stats.mu
    A = 2 * s2 * (ln + lm) + 1
    num = 2 * s2 * (en - em) ** 2 * lm * ln + (en - mu) ** 2 * ln + (em - mu) ** 2 * lm
    return np.exp(np.sum(-0.5 * np.log(A) - num / A, axis=-1))


def omega_tensor(basis: StateBasis, net: NetworkParams, stats: DatasetStats) -> np.ndarray:
    """Omega_mnp, shape (D, D, P)."""
    lm, ln, em, en = _pair_terms(basis)
    # axes: m, n, p, i
    lm = lm[:, :, None, None]
    ln = ln[:, :, None, None]
    em = em[:, :, None, :]
    en = en[:, :, None, :]
    xp = net.xi[None, None, :, None]
    wp = net.omega[None, None, :, :]
    s2 = stats.sigma ** 2
    mu = stats.mu
    B = 2 * s2 * (xp + ln + lm) + 1
    t1 = 2 * (2 * s2 * (en * ln + em * lm) + mu) * xp * wp
    t2 = -((2 * s2 * (ln + lm) + 1) * xp * wp ** 2 + (2 * s2 * (en ** 2 * ln + em ** 2 * lm) + mu ** 2) * xp)
    t3 = -(2 * s2 * (en - em) ** 2 * ln * lm + (en - mu) ** 2 * ln + (em - mu) ** 2 * lm)
    return np.exp(np.sum(-0.5 * np.log(B) + (t1 + t2 + t3) / B, axis=-1))


def phi_tensor(basis: StateBasis, net: NetworkParams, stats: DatasetStats) -> np.ndarray:
    """Phi_mnpq, shape (D, D, P, P).

    The tensor is symmetric under m<->n and p<->q, so only entries with
    m <= n and p <= q are evaluated and the rest are copied.
    """
    D, P = basis.size, net.n_kernels
    im, in_ = np.triu_indices(D)
    ip, iq = np.triu_indices(P)
    # axes: pair (m, n), pair (p, q), i
    lm = basis.lam[im][:, None, None]
    ln = basis.lam[in_][:, None, None]
    em = basis.eta[im][:, None, :]
    en = basis.eta[in_][:, None, :]
    xp = net.xi[ip][None, :, None]
    xq = net.xi[iq][None, :, None]
    wp = net.omega[ip][None, :, :]
    wq = net.omega[iq][None, :, :]
    s2 = stats.sigma ** 2
    mu = stats.mu
    C = 2 * s2 * (xq + xp + ln + lm) + 1
    lin = 2 * s2 * (en * ln + em * lm) + mu
    sq = 2 * s2 * (en ** 2 * ln + em ** 2 * lm) + mu ** 2
    a1 = 2 * (2 * s2 * (xp * wp + en * ln + em * lm) + mu) * xq * wq \
        - 2 * s2 * (en - em) ** 2 * ln * lm
    a2 = -((2 * s2 * (xp + ln + lm) + 1) * xq * wq ** 2
           + (2 * s2 * (xp * wp ** 2 + en ** 2 * ln + em ** 2 * lm) + mu ** 2) * xq)
    a3 = -((2 * s2 * (ln + lm) + 1) * xp * wp ** 2 - 2 * lin * xp * wp)
    a4 = -(sq * xp + (en - mu) ** 2 * ln + (em - mu) ** 2 * lm)
    vals = np.exp(np.sum(-0.5 * np.log(C) + (a1 + a2 + a3 + a4) / C, axis=-1))
    out = np.empty((D, D, P, P))
    for m, n, row in zip(im, in_, vals):
        out[m, n, ip, iq] = row
        out[m, n, iq, ip] = row
        out[n, m] = out[m, n]
    return out


def lambda_mn(m, n, basis, stats) -> float:
    return float(lambda_matrix(_sub(basis, m, n), stats)[0, 1])


def omega_mnp(m, n, p, basis, net, stats) -> float:
    return float(omega_tensor(_sub(basis, m, n), _subnet(net, p), stats)[0, 1, 0])


def phi_mnpq(m, n, p, q, basis, net, stats) -> float:
    return float(phi_tensor(_sub(basis, m, n), _subnet(net, p, q), stats)[0, 1, 0, 1])


def _sub(basis: StateBasis, m: int, n: int) -> StateBasis:
    idx = [m, n]
    return StateBasis(basis.lam[idx], basis.eta[idx])


def _subnet(net: NetworkParams, *p: int) -> NetworkParams:
    idx = list(p)
    if len(idx) == 1:
        idx = idx * 2
    w = np.hstack([net.w[:, :1], net.w[:, 1:][:, idx]])
    return NetworkParams(w, net.xi[idx], net.omega[idx])


def kinetic_prefactor(stats: DatasetStats) -> float:
    """1 / ((2 pi)^(N/2) |Sigma|^(1/2)) for uncorrelated features."""
    N = stats.n_features
    return float(np.exp(-0.5 * N * np.log(2 * np.pi) - np.sum(np.log(stats.sigma))))


def kinetic_matrix(basis: StateBasis, stats: DatasetStats) -> np.ndarray:
    """Matrix of -eps * sum_i sigma_i^2 d^2/dx_i^2 in the basis."""
    lm, ln, em, en = _pair_terms(basis)
    red = lm * ln / (lm + ln)
    S = overlap_matrix(basis)
    d2 = (em - en) ** 2
    bracket = np.sum(stats.sigma ** 2 * (2 * red[..., None] * d2 - 1), axis=-1)
    return -2.0 * kinetic_prefactor(stats) * red * S * bracket


def potential_matrix(basis: StateBasis, net: NetworkParams, stats: DatasetStats,
                     pot: PotentialConstants) -> np.ndarray:
    Lam = lambda_matrix(basis, stats)
    Om = omega_tensor(basis, net, stats)
    Ph = phi_tensor(basis, net, stats)
    w0 = net.bias
    w = net.weights
    a, b, g = pot.alpha, pot.beta, pot.gamma
    ow = np.einsum("mnp,kp->mnk", Om, w)
    pw = np.einsum("mnpq,kp,kq->mnk", Ph, w, w)
    V = Lam * (g.sum() + np.sum(b * w0) + np.sum(a * w0 ** 2))
    V = V + ow @ b + 2 * ow @ (a * w0) + pw @ a
    return V


def hamiltonian(m: int, n: int, basis, net, stats, pot) -> float:
    sub = _sub(basis, m, n)
    return float(kinetic_matrix(sub, stats)[0, 1] + potential_matrix(sub, net, stats, pot)[0, 1])


def _mirror(A: np.ndarray) -> np.ndarray:
    U = np.triu(A)
    return U + np.triu(A, 1).T


def assemble(basis: StateBasis, net: NetworkParams, stats: DatasetStats,
             pot: PotentialConstants) -> MatrixPair:
    if basis.n_inputs != net.n_inputs or basis.n_inputs != stats.n_features:
        raise MatrixError("basis, network and stats disagree on the number of inputs")
    S = _mirror(overlap_matrix(basis))
    T = _mirror(kinetic_matrix(basis, stats))
    V = _mirror(potential_matrix(basis, net, stats, pot))
    H = T + V
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(S))):
        raise MatrixError("non-finite matrix element")
    ev = np.linalg.eigvalsh(S)
    if ev[0] <= S_CONDITION_FLOOR * ev[-1]:
        raise MatrixError(
            f"overlap matrix not positive definite (eigenvalue range {ev[0]:.3e}..{ev[-1]:.3e}); "
            "near-duplicate basis functions")
    return MatrixPair(H, S, T, V)


def energy_breakdown(c, pair: MatrixPair) -> EnergyBreakdown:
    c = np.asarray(c, dtype=float)
    norm = c @ pair.S @ c
    if not norm > 0:
        raise MatrixError("c.S.c must be positive")
    return EnergyBreakdown(float(c @ pair.T @ c / norm), float(c @ pair.V @ c / norm))


def force(x, net: NetworkParams, stats: DatasetStats, pot: PotentialConstants) -> np.ndarray:
    """Force field -grad V at one point (N,) or a batch (n, N)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    phi = kernel_matrix(x, net)                               # (n, P)
    px = gaussian_density(x, stats)                           # (n,)
    u = (x - stats.mu) / stats.sigma ** 2                     # (n, N)
    g = 2 * net.xi[None, :, None] * (x[:, None, :] - net.omega[None, :, :])  # (n, P, N)
    w0 = net.bias
    w = net.weights
    a, b, c = pot.alpha, pot.beta, pot.gamma
    const = np.sum(a * w0 ** 2 + b * w0 + c)
    F = u * const
    lin = (2 * a * w0 + b) @ w                                # (P,)
    F = F + np.einsum("p,np,npi->ni", lin, phi, g + u[:, None, :])
    quad = np.einsum("k,kp,kq->pq", a, w, w)                  # (P, P)
    wphi = phi[:, :, None] * phi[:, None, :] * quad           # (n, P, Q)
    gsum = g[:, :, None, :] + g[:, None, :, :] + u[:, None, None, :]
    F = F + np.einsum("npq,npqi->ni", wphi, gsum)
    F = px[:, None] * F
    return F[0] if single else F
