"""Brute-force numerical integration used to check the closed forms.

Every quantity here is obtained by evaluating the integrand pointwise on a
tensor-product grid; nothing reuses the Gaussian-product algebra of
:mod:`eann.matrix`. Integrals are taken one basis pair ``(m, n)`` at a time on
a uniform grid fitted to that pair. The trapezoid rule converges spectrally
for smooth, rapidly decaying integrands, so a spacing of a fraction of the
narrowest Gaussian width and a box of several widest widths reaches machine
precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import matrix as mx
from .data import DatasetStats
from .network import NetworkParams, PotentialConstants, kernel_matrix, potential, gaussian_density
from .matrix import StateBasis


class OracleError(ValueError):
    pass


@dataclass
class QuadratureSpec:
    """Grid settings.

    ``nodes`` is the minimum node count per dimension; it is raised when the
    spacing would exceed ``step`` times the narrowest Gaussian standard
    deviation. The box spans the factor centers plus ``half_width`` widest
    standard deviations on each side.
    """

    nodes: int = 48
    half_width: float = 8.0
    step: float = 0.7
    t_nodes: int = 97
    t_half_width: float = 12.0
    max_points: int = 6_000_000
    max_dim: int = 3

    def __post_init__(self):
        if self.nodes < 8:
            raise OracleError("need at least 8 nodes per dimension")
        if self.half_width < 6:
            raise OracleError("box half-width must be at least 6 standard deviations")


def _axis(lo: float, hi: float, n: int):
    x = np.linspace(lo, hi, n)
    h = (hi - lo) / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return x, w


def _grid(axes):
    pts = np.stack(np.meshgrid(*[a[0] for a in axes], indexing="ij"), axis=-1)
    pts = pts.reshape(-1, len(axes))
    wts = axes[0][1]
    for a in axes[1:]:
        wts = np.multiply.outer(wts, a[1])
    return pts, wts.reshape(-1)


def _box(centers, a_wide, a_narrow, spec: QuadratureSpec):
    """Axes for one grid. ``centers`` (k, N); exponents per dimension (N,)."""
    centers = np.atleast_2d(centers)
    N = centers.shape[1]
    if N > spec.max_dim:
        raise OracleError(f"quadrature limited to N <= {spec.max_dim}, got {N}")
    sd_wide = 1.0 / np.sqrt(2.0 * np.asarray(a_wide) * np.ones(N))
    sd_narrow = 1.0 / np.sqrt(2.0 * np.asarray(a_narrow) * np.ones(N))
    axes = []
    total = 1
    for i in range(N):
        lo = centers[:, i].min() - spec.half_width * sd_wide[i]
        hi = centers[:, i].max() + spec.half_width * sd_wide[i]
        n = max(spec.nodes, int(math.ceil((hi - lo) / (spec.step * sd_narrow[i]))) + 1)
        total *= n
        axes.append(_axis(lo, hi, n))
    if total > spec.max_points:
        raise OracleError(f"grid of {total} points exceeds the cost guard {spec.max_points}")
    return axes


def _psi(basis: StateBasis, d: int, x):
    return np.exp(-basis.lam[d] * np.sum((x - basis.eta[d]) ** 2, axis=1))


def _psi_dd(basis: StateBasis, d: int, x, i: int):
    """Second derivative of psi_d along x_i."""
    lam = basis.lam[d]
    u = x[:, i] - basis.eta[d, i]
    return (4 * lam ** 2 * u ** 2 - 2 * lam) * _psi(basis, d, x)


def _pair_grid(basis, m, n, spec, stats=None, net=None):
    lam = basis.lam[m] + basis.lam[n]
    centers = [basis.eta[m], basis.eta[n]]
    a_wide = np.full(basis.n_inputs, lam)
    a_narrow = a_wide.copy()
    if stats is not None:
        a_wide = a_wide + 1.0 / (2.0 * stats.sigma ** 2)
        a_narrow = a_wide.copy()
        centers.append(stats.mu)
    if net is not None:
        a_narrow = a_narrow + 2.0 * net.xi.max()
        centers.extend(net.omega)
    return _grid(_box(np.array(centers), a_wide, a_narrow, spec))


def numeric_overlap(m, n, basis: StateBasis, spec: QuadratureSpec | None = None) -> float:
    spec = spec or QuadratureSpec()
    x, w = _pair_grid(basis, m, n, spec)
    return float(np.sum(w * _psi(basis, m, x) * _psi(basis, n, x)))


def numeric_lambda(m, n, basis, stats, spec=None) -> float:
    spec = spec or QuadratureSpec()
    x, w = _pair_grid(basis, m, n, spec, stats)
    f = _psi(basis, m, x) * _psi(basis, n, x) * gaussian_density(x, stats)
    return float(np.sum(w * f))


def numeric_omega(m, n, p, basis, net, stats, spec=None) -> float:
    spec = spec or QuadratureSpec()
    x, w = _pair_grid(basis, m, n, spec, stats, net)
    f = _psi(basis, m, x) * _psi(basis, n, x) * gaussian_density(x, stats)
    return float(np.sum(w * f * kernel_matrix(x, net)[:, p]))


def numeric_phi(m, n, p, q, basis, net, stats, spec=None) -> float:
    spec = spec or QuadratureSpec()
    x, w = _pair_grid(basis, m, n, spec, stats, net)
    f = _psi(basis, m, x) * _psi(basis, n, x) * gaussian_density(x, stats)
    k = kernel_matrix(x, net)
    return float(np.sum(w * f * k[:, p] * k[:, q]))


def numeric_kinetic(m, n, basis, stats, spec=None) -> float:
    spec = spec or QuadratureSpec()
    x, w = _pair_grid(basis, m, n, spec)
    lap = sum(stats.sigma[i] ** 2 * _psi_dd(basis, n, x, i) for i in range(basis.n_inputs))
    eps = 1.0 / ((2 * np.pi) ** (basis.n_inputs / 2) * np.prod(stats.sigma))
    return float(-eps * np.sum(w * _psi(basis, m, x) * lap))


def numeric_potential_element(m, n, basis, net, stats, pot, spec=None) -> float:
    spec = spec or QuadratureSpec()
    x, w = _pair_grid(basis, m, n, spec, stats, net)
    f = _psi(basis, m, x) * _psi(basis, n, x) * potential(x, net, stats, pot)
    return float(np.sum(w * f))


def numeric_H(m, n, basis, net, stats, pot, spec=None) -> float:
    """Quadrature of int psi_m H psi_n dx with H = -eps sigma^2 grad^2 + V(x)."""
    return (numeric_kinetic(m, n, basis, stats, spec)
            + numeric_potential_element(m, n, basis, net, stats, pot, spec))


def mutual_information_density(x, net: NetworkParams, stats: DatasetStats,
                               pot: PotentialConstants, spec: QuadratureSpec | None = None):
    """sum_k int p(t_k|x) p(x) ln(p(t_k|x) / p(t_k)) dt_k at points ``x``.

    The t-integral runs over y_k(x) +- t_half_width * chi_k, which holds all
    but a negligible fraction of the conditional mass.
    """
    from .network import eval_network

    spec = spec or QuadratureSpec()
    x = np.atleast_2d(x)
    y = eval_network(x, net)                                   # (n, C)
    px = gaussian_density(x, stats)
    u = np.linspace(-spec.t_half_width, spec.t_half_width, spec.t_nodes)
    h = u[1] - u[0]
    wt = np.full(u.size, h)
    wt[0] = wt[-1] = h / 2
    total = np.zeros(x.shape[0])
    for k in range(y.shape[1]):
        chi = pot.chi[k]
        rho, theta = stats.rho[k], stats.theta[k]
        t = y[:, k:k + 1] + chi * u[None, :]
        log_cond = -0.5 * np.log(2 * np.pi * chi ** 2) - (t - y[:, k:k + 1]) ** 2 / (2 * chi ** 2)
        log_marg = -0.5 * np.log(2 * np.pi * theta ** 2) - (t - rho) ** 2 / (2 * theta ** 2)
        integrand = np.exp(log_cond) * (log_cond - log_marg)
        total += chi * integrand @ wt
    return px * total


def numeric_potential_expectation(basis, c, net, stats, pot, spec=None) -> float:
    """<V> = int |Psi|^2 V dx / int |Psi|^2 dx with V built from the
    mutual-information integrand rather than the quadratic closed form."""
    spec = spec or QuadratureSpec(max_dim=2)
    if basis.n_inputs > 2:
        raise OracleError("mutual-information path limited to N <= 2")
    c = np.asarray(c, dtype=float)
    num = 0.0
    den = 0.0
    D = basis.size
    for m in range(D):
        for n in range(m, D):
            mult = 1.0 if m == n else 2.0
            x, w = _pair_grid(basis, m, n, spec, stats, net)
            pp = _psi(basis, m, x) * _psi(basis, n, x)
            num += mult * c[m] * c[n] * np.sum(w * pp * mutual_information_density(x, net, stats, pot, spec))
            den += mult * c[m] * c[n] * numeric_overlap(m, n, basis, spec)
    return float(num / den)


def numeric_expectation(func, basis, c, spec=None, net=None) -> float:
    """int f |Psi|^2 dx / int |Psi|^2 dx, pointwise in ``f``."""
    spec = spec or QuadratureSpec()
    c = np.asarray(c, dtype=float)
    num = den = 0.0
    D = basis.size
    for m in range(D):
        for n in range(m, D):
            mult = 1.0 if m == n else 2.0
            x, w = _pair_grid(basis, m, n, spec, net=net)
            pp = w * _psi(basis, m, x) * _psi(basis, n, x)
            num += mult * c[m] * c[n] * np.sum(pp * func(x))
            den += mult * c[m] * c[n] * np.sum(pp)
    return float(num / den)


def secular_roots(H, S, scan_points: int = 20001) -> np.ndarray:
    """Roots of det(H - E S) = 0 by sign-change scanning and bisection."""
    H = np.asarray(H, dtype=float)
    S = np.asarray(S, dtype=float)
    D = H.shape[0]
    diag = np.diag(H) / np.diag(S)
    bound = np.abs(np.linalg.solve(S, H)).sum(axis=1).max() + np.abs(diag).max() + 1.0
    grid = np.linspace(-bound, bound, scan_points)

    def f(E):
        return np.linalg.det(H - E * S)

    vals = np.array([f(E) for E in grid])
    roots = []
    for j in range(grid.size - 1):
        a, b = grid[j], grid[j + 1]
        fa, fb = vals[j], vals[j + 1]
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb > 0 or fb == 0.0:
            # a root sitting on the next grid point is picked up there
            continue
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = f(mid)
            if fa * fm <= 0:
                b = mid
            else:
                a, fa = mid, fm
            if b - a < 1e-15 * max(1.0, abs(mid)):
                break
        roots.append(0.5 * (a + b))
    roots = np.array(sorted(roots))
    if roots.size != D:
        raise OracleError(f"found {roots.size} roots, expected {D}")
    return roots


# --------------------------------------------------------------- validation

@dataclass
class FormulaResult:
    name: str
    tolerance: float
    max_rel_error: float = 0.0
    count: int = 0
    worst_draw: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance

    def update(self, closed, numeric, scale, draw):
        err = abs(closed - numeric) / scale if scale > 0 else abs(closed - numeric)
        self.count += 1
        if err > self.max_rel_error or not np.isfinite(err):
            self.max_rel_error = float(err) if np.isfinite(err) else float("inf")
            self.worst_draw = draw


def random_instance(rng: np.random.Generator, N: int, D: int = 2, P: int = 2, C: int = 1):
    """Random parameters inside the standard search ranges.

    Exponents are kept away from zero (basis exponents >= 0.1) so every
    Gaussian stays integrable on a finite grid.
    """
    basis = StateBasis(rng.uniform(0.1, 4.0, D), rng.uniform(-1, 1, (D, N)))
    net = NetworkParams(rng.uniform(-4, 4, (C, P + 1)), rng.uniform(0.0, 4.0, P),
                        rng.uniform(-1, 1, (P, N)))
    theta = rng.uniform(0.2, 0.4, C)
    stats = DatasetStats(rng.uniform(-0.1, 0.1, N), rng.uniform(0.2, 0.5, N),
                         rng.uniform(-0.1, 0.1, C), theta)
    chi = rng.uniform(0.05, 1.0, C) * theta
    from .network import potential_constants
    a, b, g = potential_constants(stats.rho, stats.theta, chi)
    pot = PotentialConstants(a, b, g, chi)
    c = rng.uniform(-1, 1, D)
    return basis, net, stats, pot, c


def _draw_record(basis, net, stats, pot, c):
    return {"lambda": basis.lam.tolist(), "eta": basis.eta.tolist(), **net.to_dict(),
            "mu": stats.mu.tolist(), "sigma": stats.sigma.tolist(),
            "rho": stats.rho.tolist(), "theta": stats.theta.tolist(),
            "chi": pot.chi.tolist(), "c": c.tolist()}


DEFAULT_FORMS = {
    "overlap": mx.overlap_matrix,
    "lambda": mx.lambda_matrix,
    "omega": mx.omega_tensor,
    "phi": mx.phi_tensor,
    "kinetic": mx.kinetic_matrix,
    "potential": mx.potential_matrix,
}


def validate(seed: int = 0, draws: int = 100, tol: float = 1e-8, mi_tol: float = 1e-6,
             spec: QuadratureSpec | None = None, forms: dict | None = None) -> dict:
    """Closed form vs quadrature over seeded random draws, N cycling 1..3.

    ``forms`` overrides closed-form functions by name (see ``DEFAULT_FORMS``).
    """
    from . import metrics

    spec = spec or QuadratureSpec()
    f = dict(DEFAULT_FORMS)
    if forms:
        f.update(forms)
    rng = np.random.default_rng(seed)
    names = [("S_mn", tol), ("Lambda_mn", tol), ("Omega_mnp", tol), ("Phi_mnpq", tol),
             ("H_mn", tol), ("<y_k>", tol), ("<x_i>", tol), ("<V>_MI", mi_tol)]
    results = {n: FormulaResult(n, t) for n, t in names}
    for k in range(draws):
        N = 1 + k % 3
        basis, net, stats, pot, c = random_instance(rng, N)
        draw = {"index": k, "N": N, **_draw_record(basis, net, stats, pot, c)}
        S = f["overlap"](basis)
        Lam = f["lambda"](basis, stats)
        Om = f["omega"](basis, net, stats)
        Ph = f["phi"](basis, net, stats)
        T = f["kinetic"](basis, stats)
        V = f["potential"](basis, net, stats, pot)
        D, P = basis.size, net.n_kernels
        for m in range(D):
            for n in range(m, D):
                results["S_mn"].update(S[m, n], numeric_overlap(m, n, basis, spec), abs(S[m, n]), draw)
                results["Lambda_mn"].update(Lam[m, n], numeric_lambda(m, n, basis, stats, spec),
                                            abs(Lam[m, n]), draw)
                for p in range(P):
                    results["Omega_mnp"].update(Om[m, n, p], numeric_omega(m, n, p, basis, net, stats, spec),
                                                abs(Om[m, n, p]), draw)
                    for q in range(P):
                        results["Phi_mnpq"].update(
                            Ph[m, n, p, q], numeric_phi(m, n, p, q, basis, net, stats, spec),
                            abs(Ph[m, n, p, q]), draw)
                tq = numeric_kinetic(m, n, basis, stats, spec)
                vq = numeric_potential_element(m, n, basis, net, stats, pot, spec)
                # relative to the magnitude of the two parts, H can cancel to ~0
                results["H_mn"].update(T[m, n] + V[m, n], tq + vq, abs(tq) + abs(vq), draw)
        cn = c / np.sqrt(c @ S @ c)
        y_closed = metrics.expected_output(net, basis, cn)
        y_num = numeric_expectation(lambda x: net.w[0, 0] + kernel_matrix(x, net) @ net.w[0, 1:],
                                    basis, cn, spec, net)
        results["<y_k>"].update(y_closed[0], y_num, max(abs(y_num), abs(net.w[0, 0]), 1.0), draw)
        for i in range(N):
            xc = metrics.expected_position(basis, cn, i)
            xn = numeric_expectation(lambda x: x[:, i], basis, cn, spec)
            results["<x_i>"].update(xc, xn, max(abs(xn), 1.0), draw)
        if N <= 2:
            v_closed = float(cn @ V @ cn / (cn @ S @ cn))
            v_num = numeric_potential_expectation(basis, cn, net, stats, pot, spec)
            results["<V>_MI"].update(v_closed, v_num, abs(v_num), draw)
    out = {
        "schema_version": 1,
        "seed": seed,
        "draws": draws,
        "passed": all(r.passed for r in results.values()),
        "formulas": {},
    }
    for r in results.values():
        entry = {"max_rel_error": r.max_rel_error, "tolerance": r.tolerance,
                 "count": r.count, "passed": r.passed}
        if not r.passed:
            entry["worst_draw"] = r.worst_draw
        out["formulas"][r.name] = entry
    return out
