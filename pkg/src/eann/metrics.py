"""Observables of a solved state function and information diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .data import DatasetStats
from .matrix import StateBasis, overlap_matrix
from .network import NetworkParams, eval_network, gaussian_density


class MetricsError(ValueError):
    pass


@dataclass
class InfoReport:
    h0: float
    W: float
    self_organization: float
    emergence: float
    complexity: float
    anomaly: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def info_report(v_exp: float, n_inputs: int, width: float = 2.0) -> InfoReport:
    """Work, self-organization, emergence and complexity from <V>.

    The reference entropy is that of the uniform density on the normalization
    box, ``N ln(width)``. Potentials outside ``[0, h0)`` are flagged in
    ``anomaly`` rather than raised.
    """
    h0 = n_inputs * np.log(width)
    emergence = v_exp / h0
    so = 1.0 - emergence
    anomaly = None
    if v_exp > h0:
        anomaly = f"<V>={v_exp:.6g} exceeds the entropy bound h0={h0:.6g}"
    elif v_exp < 0:
        anomaly = f"negative <V>={v_exp:.6g}"
    return InfoReport(float(h0), float(h0 - v_exp), float(so), float(emergence),
                      float(emergence * so), anomaly)


def _normalized(basis: StateBasis, c):
    c = np.asarray(c, dtype=float)
    S = overlap_matrix(basis)
    norm = c @ S @ c
    if not norm > 0:
        raise MetricsError("state function has zero norm")
    return c / np.sqrt(norm), S


def expected_output(net: NetworkParams, basis: StateBasis, c) -> np.ndarray:
    """<y_k> over |Psi|^2, closed form, one value per output."""
    c, _ = _normalized(basis, c)
    N = basis.n_inputs
    lam = basis.lam
    ld = lam[:, None, None]
    ll = lam[None, :, None]
    xi = net.xi[None, None, :]
    denom = xi + ll + ld                                               # (d, l, p)
    ed = basis.eta[:, None, None, :]
    el = basis.eta[None, :, None, :]
    om = net.omega[None, None, :, :]
    num = (xi[..., None] * (ll[..., None] * (om - el) ** 2 + ld[..., None] * (om - ed) ** 2)
           + ld[..., None] * ll[..., None] * (el - ed) ** 2)
    log_int = 0.5 * N * np.log(np.pi / denom) - np.sum(num, axis=-1) / denom
    I = np.exp(log_int)                                                # (d, l, p)
    cc = np.outer(c, c)
    return net.bias + np.einsum("dl,dlp,kp->k", cc, I, net.weights)


def expected_position(basis: StateBasis, c, i: int) -> float:
    c, _ = _normalized(basis, c)
    lam = basis.lam
    ld = lam[:, None]
    ll = lam[None, :]
    N = basis.n_inputs
    eta = basis.eta
    lin = ld * eta[:, None, i] + ll * eta[None, :, i]
    red = ld * ll / (ld + ll)
    d2 = ((eta[None, :, :] - eta[:, None, :]) ** 2).sum(axis=-1)
    term = lin * np.pi ** (N / 2) / (ld + ll) ** ((N + 2) / 2) * np.exp(-red * d2)
    return float(c @ term @ c)


def _pair_hermite(basis: StateBasis, i: int, order: int = 16):
    """Gauss-Hermite nodes for the 1-D factor of every basis pair along x_i.

    Returns (x, w) of shape (D, D, order); sum(w * f(x)) integrates
    f(x) psi_d psi_l along x_i divided by the same integral with f = 1.
    """
    u, wu = np.polynomial.hermite.hermgauss(order)
    lam = basis.lam
    A = lam[:, None] + lam[None, :]
    cen = (lam[:, None] * basis.eta[:, None, i] + lam[None, :] * basis.eta[None, :, i]) / A
    x = cen[..., None] + u / np.sqrt(A)[..., None]
    w = np.broadcast_to(wu / wu.sum(), x.shape)
    return x, w


def second_moment(basis: StateBasis, c, i: int) -> float:
    """<x_i^2>: the pair integrals factor, so only the x_i factor needs quadrature."""
    c, S = _normalized(basis, c)
    x, w = _pair_hermite(basis, i)
    ratio = np.sum(w * x ** 2, axis=-1)
    return float(c @ (S * ratio) @ c)


def variance_position(basis: StateBasis, c, i: int) -> float:
    var = second_moment(basis, c, i) - expected_position(basis, c, i) ** 2
    if var < -1e-10:
        raise MetricsError(f"negative variance {var:.3e} along x_{i + 1}")
    return max(var, 0.0)


def uncertainty_check(basis: StateBasis, c, sigma_x: float) -> dict:
    """Position/momentum spreads for a one-input state function.

    Momentum is ``(sigma_x / i) d/dx``; for a real state the mean momentum is
    zero and ``<p^2> = -sigma_x^2 int Psi Psi'' / int Psi^2``.
    """
    if basis.n_inputs != 1:
        raise MetricsError("uncertainty check is defined for one input only")
    c, S = _normalized(basis, c)
    x, w = _pair_hermite(basis, 0)
    lam_n = basis.lam[None, :, None]
    eta_n = basis.eta[None, :, 0, None]
    dd = np.sum(w * (4 * lam_n ** 2 * (x - eta_n) ** 2 - 2 * lam_n), axis=-1)
    curv = c @ (S * dd) @ c
    p2 = -sigma_x ** 2 * curv
    if p2 < 0:
        raise MetricsError(f"negative <p^2> = {p2:.3e}")
    dx = np.sqrt(variance_position(basis, c, 0))
    dp = np.sqrt(p2)
    bound = sigma_x / 2.0
    product = dx * dp
    return {"dx": float(dx), "dp": float(dp), "product": float(product),
            "bound": float(bound), "margin": float(product - bound),
            "passed": bool(product >= bound - 1e-9)}


def state_density(x, basis: StateBasis, c) -> np.ndarray:
    """|Psi(x)|^2 normalized to unit integral."""
    c, _ = _normalized(basis, c)
    return (basis.evaluate(x) @ c) ** 2


@dataclass
class ChiTable:
    x: np.ndarray
    chi: np.ndarray
    masked: np.ndarray
    iterations: int
    converged: bool

    @property
    def masked_fraction(self) -> float:
        return float(np.mean(self.masked))

    def rows(self):
        for xi, ch, m in zip(self.x, self.chi, self.masked):
            yield [*np.atleast_1d(xi).tolist(), float(ch) if not m else float("nan"), int(m)]


def refine_chi(basis: StateBasis, c, net: NetworkParams, stats: DatasetStats, chi0: float,
               x_grid, iterations: int = 50, tol: float = 1e-6,
               density_floor: float = 1e-300) -> ChiTable:
    """Pointwise fixed-point iteration for a position-dependent residual scale.

    Single output only. The state function is held fixed. A point is masked
    (and frozen) once its radicand or ``theta^2 - chi^2`` turns non-positive,
    or when ``|Psi|^4`` falls below ``density_floor``.
    """
    if net.n_outputs != 1:
        raise MetricsError("refine_chi handles a single output")
    x = np.atleast_2d(np.asarray(x_grid, dtype=float))
    if x.shape[1] != basis.n_inputs and x.shape[0] == basis.n_inputs:
        x = x.T
    psi4 = state_density(x, basis, c) ** 2
    px = gaussian_density(x, stats)
    y = eval_network(x, net)[:, 0]
    rho, theta = stats.rho[0], stats.theta[0]
    th2 = theta ** 2
    chi = np.full(x.shape[0], float(chi0))
    masked = psi4 < density_floor
    converged = False
    done = 0
    for it in range(1, iterations + 1):
        done = it
        gap = th2 - chi ** 2
        masked |= gap <= 0
        live = ~masked
        safe_gap = np.where(live, gap, 1.0)
        safe_psi4 = np.where(live, psi4, 1.0)
        with np.errstate(over="ignore"):
            rad = th2 - 2 * np.pi * theta ** 4 * px ** 2 / safe_psi4 * np.exp((y - rho) ** 2 / safe_gap)
        bad = live & ~(rad > 0)
        masked |= bad
        live = ~masked
        new = np.where(live, np.sqrt(np.where(live, rad, 0.0)), chi)
        delta = np.max(np.abs(new - chi)[live]) if live.any() else 0.0
        chi = new
        if not live.any():
            break
        if delta < tol:
            converged = True
            break
    if masked.all():
        raise MetricsError("every grid point masked: theta > chi assumption fails everywhere")
    return ChiTable(x[:, 0] if x.shape[1] == 1 else x, chi, masked, done, converged)
