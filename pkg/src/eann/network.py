"""RBF network, residual scale and the quadratic potential constants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DatasetStats, RawDataset

# exp() arguments below this are flushed to zero
EXP_FLOOR = -700.0


class NetworkError(ValueError):
    pass


def safe_exp(arg):
    arg = np.asarray(arg, dtype=float)
    return np.where(arg < EXP_FLOOR, 0.0, np.exp(np.maximum(arg, EXP_FLOOR)))


@dataclass
class NetworkParams:
    """Weights ``w`` (C, P+1) with the bias in column 0, kernel exponents
    ``xi`` (P,) and kernel centers ``omega`` (P, N)."""

    w: np.ndarray
    xi: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.w = np.atleast_2d(np.asarray(self.w, dtype=float))
        self.xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        self.omega = np.atleast_2d(np.asarray(self.omega, dtype=float))
        P = self.xi.size
        if P < 1:
            raise NetworkError("network needs at least one kernel")
        if self.omega.shape[0] != P or self.w.shape[1] != P + 1:
            raise NetworkError(
                f"inconsistent shapes: w {self.w.shape}, xi {self.xi.shape}, "
                f"omega {self.omega.shape}")
        if np.any(self.xi < 0):
            raise NetworkError("kernel exponents must be non-negative")
        for a in (self.w, self.xi, self.omega):
            if not np.all(np.isfinite(a)):
                raise NetworkError("non-finite network parameter")

    @property
    def n_kernels(self) -> int:
        return self.xi.size

    @property
    def n_inputs(self) -> int:
        return self.omega.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.w.shape[0]

    @property
    def bias(self) -> np.ndarray:
        return self.w[:, 0]

    @property
    def weights(self) -> np.ndarray:
        return self.w[:, 1:]

    def to_dict(self) -> dict:
        return {"w": self.w.tolist(), "xi": self.xi.tolist(), "omega": self.omega.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkParams":
        return cls(np.array(d["w"], dtype=float), np.array(d["xi"], dtype=float),
                   np.array(d["omega"], dtype=float))


@dataclass
class PotentialConstants:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    chi: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "chi"):
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("alpha", "beta", "gamma", "chi")}

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialConstants":
        return cls(d["alpha"], d["beta"], d["gamma"], d["chi"])


def eval_basis(p: int, x, params: NetworkParams) -> float:
    """Kernel ``p`` at a single point: exp(-xi_p * |x - omega_p|^2)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NetworkError("non-finite input")
    r2 = np.sum((x - params.omega[p]) ** 2)
    return float(safe_exp(-params.xi[p] * r2))


def kernel_matrix(x, params: NetworkParams) -> np.ndarray:
    """All kernels at all points, shape (n_points, P)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != params.n_inputs:
        raise NetworkError(f"input has {x.shape[1]} features, network expects {params.n_inputs}")
    r2 = ((x[:, None, :] - params.omega[None, :, :]) ** 2).sum(axis=-1)
    return safe_exp(-params.xi[None, :] * r2)


def eval_network(x, params: NetworkParams) -> np.ndarray:
    """Network output.

    A single point (shape (N,)) gives a (C,) vector; a batch (n, N) gives (n, C).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    phi = kernel_matrix(x, params)
    y = phi @ params.weights.T + params.bias[None, :]
    return y[0] if single else y


def compute_chi(params: NetworkParams, d: RawDataset) -> np.ndarray:
    """Root-mean-square residual per output over the records of ``d``."""
    y = eval_network(d.x, params)
    chi = np.sqrt(np.mean((y - d.t) ** 2, axis=0))
    if np.any(chi <= 0):
        raise NetworkError("zero residual scale: network fits the data exactly, gamma diverges")
    return chi


def potential_constants(rho, theta, chi):
    """Coefficients of the per-output quadratic ``alpha*y^2 + beta*y + gamma``."""
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    chi = np.asarray(chi, dtype=float)
    if np.any(theta <= 0) or np.any(chi <= 0):
        raise NetworkError("theta and chi must be positive")
    th2 = theta ** 2
    alpha = 1.0 / (2.0 * th2)
    beta = -rho / th2
    gamma = (rho ** 2 + chi ** 2) / (2.0 * th2) - (np.log(chi / theta) + 0.5)
    return alpha, beta, gamma


def invert_constants(alpha, beta):
    """Recover (rho, theta) from (alpha, beta)."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return -beta / (2.0 * alpha), np.sqrt(1.0 / (2.0 * alpha))


def make_potential(params: NetworkParams, d: RawDataset, stats: DatasetStats) -> PotentialConstants:
    chi = compute_chi(params, d)
    alpha, beta, gamma = potential_constants(stats.rho, stats.theta, chi)
    return PotentialConstants(alpha, beta, gamma, chi)


def gaussian_density(x, stats: DatasetStats) -> np.ndarray:
    """Product of independent feature normals at points ``x`` (n, N)."""
    x = np.atleast_2d(x)
    z = (x - stats.mu) / stats.sigma
    logp = -0.5 * np.sum(z ** 2, axis=1) - np.sum(np.log(np.sqrt(2 * np.pi) * stats.sigma))
    return np.exp(logp)


def potential(x, params: NetworkParams, stats: DatasetStats, pot: PotentialConstants) -> np.ndarray:
    """Potential V(x) = p(x) * sum_k (alpha_k y_k^2 + beta_k y_k + gamma_k)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = eval_network(x, params)
    q = pot.alpha * y ** 2 + pot.beta * y + pot.gamma
    return gaussian_density(x, stats) * q.sum(axis=1)


def error_percent(params: NetworkParams, d: RawDataset, t_range: float = 2.0) -> np.ndarray:
    """Squared-error percentage per output, relative to the target range."""
    if d.n_records == 0:
        raise NetworkError("empty dataset")
    y = eval_network(d.x, params)
    return 100.0 / (d.n_records * t_range ** 2) * np.sum((y - d.t) ** 2, axis=0)
