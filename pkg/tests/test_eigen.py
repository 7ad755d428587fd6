import numpy as np
import pytest

from eann import matrix as M
from eann import oracle
from eann.eigen import EigenError, Spectrum, ground_state, jacobi_eigh, solve, _round_robin


def pair_of(H, S):
    H = np.asarray(H, dtype=float)
    S = np.asarray(S, dtype=float)
    return M.MatrixPair(H, S, H, np.zeros_like(H))


def test_textbook_pair():
    spec = solve(pair_of([[2, 1], [1, 2]], np.eye(2)))
    np.testing.assert_allclose(spec.energies, [1, 3], atol=1e-15)
    # largest-magnitude component positive; ties go to the first index
    np.testing.assert_allclose(spec.vectors[:, 0], np.array([1, -1]) / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(spec.vectors[:, 1], np.array([1, 1]) / np.sqrt(2), atol=1e-15)
    assert ground_state(spec)[0] == pytest.approx(1.0)


def test_single_state():
    spec = solve(pair_of([[3.0]], [[2.0]]))
    assert spec.energies[0] == pytest.approx(1.5, rel=1e-15)
    E, c = ground_state(spec)
    assert c[0] == pytest.approx(1 / np.sqrt(2))
    with pytest.raises(EigenError):
        ground_state(Spectrum(np.array([]), np.zeros((0, 0))))


def test_round_robin_covers_every_pair_once():
    for n in range(1, 14):
        seen = []
        for r in _round_robin(n):
            flat = [i for pq in r for i in pq]
            assert len(flat) == len(set(flat))
            seen += r
        assert sorted(seen) == [(p, q) for p in range(n) for q in range(p + 1, n)]


def test_jacobi_on_random_symmetric():
    rng = np.random.default_rng(0)
    for n in (2, 5, 12, 25):
        X = rng.normal(size=(n, n))
        A = X + X.T
        w, V, sweeps = jacobi_eigh(A)
        np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(A), atol=1e-12 * np.abs(A).max())
        np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-13)
        assert sweeps <= 100 * n


def test_jacobi_cap_raises():
    X = np.random.default_rng(1).normal(size=(6, 6))
    with pytest.raises(EigenError, match="did not converge"):
        jacobi_eigh(X + X.T, max_sweeps=1)


def test_indefinite_overlap_rejected():
    with pytest.raises(EigenError, match="positive definite"):
        solve(pair_of(np.eye(2), [[1, 2], [2, 1]]))


def test_jitter_rescues_semidefinite_overlap(caplog):
    S = np.array([[1.0, 1.0], [1.0, 1.0]])
    with caplog.at_level("WARNING"):
        spec = solve(pair_of(np.eye(2), S))
    assert "jitter" in caplog.text
    assert np.all(np.isfinite(spec.energies))


def residuals(pair, spec):
    H, S = pair.H, pair.S
    res = max(np.abs(H @ spec.vectors[:, j] - spec.energies[j] * S @ spec.vectors[:, j]).max()
              for j in range(len(spec)))
    ortho = np.abs(spec.vectors.T @ S @ spec.vectors - np.eye(len(spec))).max()
    return res / np.abs(H).max(), ortho


def test_residual_and_orthonormality_on_random_pairs():
    rng = np.random.default_rng(2)
    for k in range(30):
        b, net, st, pot, c = oracle.random_instance(rng, 1 + k % 4, D=2 + k % 5, P=3)
        try:
            pair = M.assemble(b, net, st, pot)
        except M.MatrixError:
            continue
        spec = solve(pair)
        res, ortho = residuals(pair, spec)
        assert res <= 1e-10 and ortho <= 1e-10
        assert np.all(np.diff(spec.energies) >= 0)


def test_energies_match_determinant_roots():
    rng = np.random.default_rng(3)
    for k in range(20):
        D = 1 + k % 3
        b, net, st, pot, c = oracle.random_instance(rng, 1 + k % 2, D=D, P=2)
        pair = M.assemble(b, net, st, pot)
        roots = oracle.secular_roots(pair.H, pair.S)
        np.testing.assert_allclose(solve(pair).energies, roots, rtol=1e-9, atol=1e-12)


def test_solve_is_deterministic():
    b, net, st, pot, c = oracle.random_instance(np.random.default_rng(4), 3, D=4, P=3)
    pair = M.assemble(b, net, st, pot)
    a, b2 = solve(pair), solve(pair)
    assert a.energies.tobytes() == b2.energies.tobytes()
    assert a.vectors.tobytes() == b2.vectors.tobytes()


def test_nested_basis_never_raises_ground_energy():
    rng = np.random.default_rng(5)
    for k in range(50):
        N = 1 + k % 3
        b, net, st, pot, c = oracle.random_instance(rng, N, D=3, P=2)
        extra = M.StateBasis(np.r_[b.lam, rng.uniform(0.1, 4)],
                             np.vstack([b.eta, rng.uniform(-1, 1, (1, N))]))
        try:
            e_big = ground_state(solve(M.assemble(extra, net, st, pot)))[0]
        except M.MatrixError:
            continue
        e_small = ground_state(solve(M.assemble(b, net, st, pot)))[0]
        assert e_big <= e_small + 1e-10
