import numpy as np
import pytest

from eann import matrix as M
from eann import metrics
from eann import oracle
from eann.data import DatasetStats
from eann.network import NetworkParams
from reference_values import TEST, TRAIN


def test_info_identities():
    h0 = 4 * np.log(2)
    for v in (0.0, 1e-4, 0.3, h0 / 2, 2.0):
        r = metrics.info_report(v, 4)
        assert r.h0 == pytest.approx(h0, rel=1e-15)
        assert r.self_organization + r.emergence == pytest.approx(1.0, rel=1e-15)
        assert r.complexity == pytest.approx(r.self_organization * r.emergence, rel=1e-15)
        assert r.anomaly is None
    zero = metrics.info_report(0.0, 4)
    assert (zero.emergence, zero.complexity, zero.self_organization) == (0.0, 0.0, 1.0)
    half = metrics.info_report(h0 / 2, 4)
    assert half.complexity == pytest.approx(0.25, rel=1e-15)


def test_info_anomalies_flagged():
    assert "exceeds" in metrics.info_report(5.0, 4).anomaly
    assert "negative" in metrics.info_report(-1e-3, 4).anomaly


@pytest.mark.parametrize("part", [TRAIN, TEST], ids=["train", "test"])
def test_published_work_and_complexity(part):
    r = metrics.info_report(part["V"], 4)
    assert abs(r.W - part["W"]) < 1e-6
    assert abs(r.complexity - part["complexity"]) / part["complexity"] < 1e-3


def one_state(lam, eta):
    return M.StateBasis(np.array([lam], dtype=float), np.array([eta], dtype=float))


def test_expected_output_trivial_networks():
    b, net, st, pot, c = oracle.random_instance(np.random.default_rng(0), 2)
    flat = NetworkParams(np.c_[net.bias, np.zeros_like(net.weights)], net.xi, net.omega)
    np.testing.assert_allclose(metrics.expected_output(flat, b, c), net.bias, rtol=1e-15)
    # a single state and a kernel with xi -> 0 gives bias + weight
    basis = one_state(1.3, [0.2, -0.1])
    kern = NetworkParams(np.array([[0.5, 2.0]]), np.array([0.0]), np.array([[0.3, 0.3]]))
    assert metrics.expected_output(kern, basis, [1.0])[0] == pytest.approx(2.5, rel=1e-14)


def test_expected_position_and_variance_single_gaussian():
    for lam, eta in ((0.5, [0.3]), (2.0, [-0.7, 0.1])):
        basis = one_state(lam, eta)
        for i, e in enumerate(eta):
            assert metrics.expected_position(basis, [2.0], i) == pytest.approx(e, rel=1e-13, abs=1e-15)
            assert metrics.variance_position(basis, [2.0], i) == pytest.approx(1 / (4 * lam), rel=1e-12)


def test_moments_match_quadrature():
    rng = np.random.default_rng(4)
    x = np.linspace(-12, 12, 40001)
    for _ in range(10):
        b, net, st, pot, c = oracle.random_instance(rng, 1, D=3, P=2)
        dens = metrics.state_density(x[:, None], b, c)
        mean = np.trapezoid(x * dens, x)
        assert np.trapezoid(dens, x) == pytest.approx(1.0, rel=1e-9)
        assert metrics.expected_position(b, c, 0) == pytest.approx(mean, rel=1e-8, abs=1e-10)
        var = np.trapezoid((x - mean) ** 2 * dens, x)
        assert metrics.variance_position(b, c, 0) == pytest.approx(var, rel=1e-8)


def test_uncertainty_bound_over_random_states():
    rng = np.random.default_rng(5)
    for _ in range(100):
        D = int(rng.integers(1, 5))
        basis = M.StateBasis(rng.uniform(0.1, 4, D), rng.uniform(-1, 1, (D, 1)))
        c = rng.normal(size=D)
        r = metrics.uncertainty_check(basis, c, 0.29)
        assert r["passed"], r


def test_single_gaussian_saturates_bound_and_scales_with_sigma():
    basis = one_state(1.7, [0.1])
    r = metrics.uncertainty_check(basis, [1.0], 0.3)
    assert abs(r["product"] - r["bound"]) < 1e-10
    r2 = metrics.uncertainty_check(basis, [1.0], 0.6)
    assert r2["bound"] == pytest.approx(2 * r["bound"], rel=1e-15)
    assert r2["product"] == pytest.approx(2 * r["product"], rel=1e-12)
    with pytest.raises(metrics.MetricsError):
        metrics.uncertainty_check(one_state(1.0, [0.0, 0.0]), [1.0], 0.3)


def gaussian_case(theta=0.3):
    """|Psi|^2 equal to the feature density and a network that outputs rho."""
    st = DatasetStats([0.05], [0.25], [0.1], [theta])
    basis = one_state(1 / (4 * 0.25 ** 2), [0.05])
    net = NetworkParams(np.array([[0.1, 0.0]]), np.array([1.0]), np.array([[0.0]]))
    return st, basis, net


def test_refine_chi_matches_direct_formula():
    st, basis, net = gaussian_case()
    x = np.linspace(-0.5, 0.5, 11)
    np.testing.assert_allclose(metrics.state_density(x[:, None], basis, [1.0]),
                               [np.exp(-0.5 * ((v - 0.05) / 0.25) ** 2) / (np.sqrt(2 * np.pi) * 0.25)
                                for v in x], rtol=1e-12)
    fixed = np.sqrt(0.3 ** 2 - 2 * np.pi * 0.3 ** 4)
    tab = metrics.refine_chi(basis, [1.0], net, st, 0.1, x)
    assert tab.converged and not tab.masked.any()
    np.testing.assert_allclose(tab.chi, fixed, rtol=1e-12)
    again = metrics.refine_chi(basis, [1.0], net, st, fixed, x)
    assert again.iterations == 1 and again.converged
    assert len(list(tab.rows())) == x.size


def test_refine_chi_all_masked_raises():
    st, basis, net = gaussian_case()
    with pytest.raises(metrics.MetricsError, match="every grid point masked"):
        metrics.refine_chi(basis, [1.0], net, st, 0.5, np.linspace(-0.5, 0.5, 5))
