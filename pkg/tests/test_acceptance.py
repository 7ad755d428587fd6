"""Acceptance criteria, one test per criterion, each printing a pass/fail line."""

import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from eann import data as D
from eann import ga, metrics, oracle
from eann import matrix as M
from eann.eigen import ground_state, solve
from eann.network import invert_constants, potential, potential_constants
from reference_values import TEST, TRAIN, pollen_path, reference_solution, table_potential, table_stats


def test_criterion_1_potential_constant_closure(verdict):
    rho, theta = invert_constants(TRAIN["alpha"], TRAIN["beta"])
    _, _, gamma = potential_constants(rho, theta, TRAIN["chi"])
    gap = abs(gamma - TRAIN["gamma"])
    assert verdict("1", gap < 1e-5, f"gamma={gamma:.7e} |gap|={gap:.2e} (tol 1e-5)")


def sig7(x):
    return float(f"{x:.6e}")


@pytest.mark.parametrize("part", [TRAIN, TEST], ids=["train", "test"])
def test_criterion_2_information_identities(part, verdict):
    label = "train" if part is TRAIN else "test"
    r = metrics.info_report(part["V"], 4, 2.0)
    w_gap = abs(r.W - part["W"])
    c_gap = abs(r.complexity - part["complexity"])
    # E is formed the way the code forms it; the published table carries
    # seven significant digits, so the comparison is made at that precision.
    pair = M.MatrixPair(np.array([[part["T"] + part["V"]]]), np.eye(1),
                        np.array([[part["T"]]]), np.array([[part["V"]]]))
    e = M.energy_breakdown([1.0], pair)
    identity = abs(e.E - (e.T + e.V))
    raw_gap = abs(e.E - part["E"])
    ok = w_gap < 1e-6 and c_gap < 1e-8 and identity < 1e-15 and sig7(e.E) == part["E"]
    assert verdict(f"2 ({label})", ok,
                   f"W={r.W:.7f} |gap|={w_gap:.1e}; C={r.complexity:.6e} |gap|={c_gap:.1e}; "
                   f"T+V={e.E:.10e} vs {part['E']:.6e} (raw gap {raw_gap:.1e}, equal at "
                   f"printed precision: {sig7(e.E) == part['E']})")


def test_criterion_3_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    report = oracle.validate(seed=0, draws=100)
    elapsed = time.perf_counter() - t0
    worst = {k: f"{v['max_rel_error']:.1e}" for k, v in report["formulas"].items()}
    ok = report["passed"] and elapsed < 60
    assert verdict("3", ok, f"{elapsed:.1f}s; max rel errors {worst}")


def test_criterion_4_eigensolver(verdict):
    rng = np.random.default_rng(40)
    res_worst = ortho_worst = root_worst = nest_worst = 0.0
    for k in range(60):
        b, net, st, pot, c = oracle.random_instance(rng, 1 + k % 3, D=2 + k % 6, P=3)
        pair = M.assemble(b, net, st, pot)
        spec = solve(pair)
        V, E = spec.vectors, spec.energies
        res = np.abs(pair.H @ V - pair.S @ V * E).max() / np.abs(pair.H).sum(axis=1).max()
        res_worst = max(res_worst, res)
        ortho_worst = max(ortho_worst, np.abs(V.T @ pair.S @ V - np.eye(len(E))).max())
    for k in range(30):
        b, net, st, pot, c = oracle.random_instance(rng, 1 + k % 2, D=1 + k % 3, P=2)
        pair = M.assemble(b, net, st, pot)
        roots = oracle.secular_roots(pair.H, pair.S)
        E = solve(pair).energies
        root_worst = max(root_worst, np.max(np.abs(E - roots) / np.maximum(np.abs(roots), 1e-300)))
    done = 0
    while done < 50:
        b, net, st, pot, c = oracle.random_instance(rng, 1 + done % 3, D=3, P=2)
        extra = M.StateBasis(np.r_[b.lam, rng.uniform(0.1, 4)],
                             np.vstack([b.eta, rng.uniform(-1, 1, (1, b.n_inputs))]))
        try:
            big = ground_state(solve(M.assemble(extra, net, st, pot)))[0]
        except M.MatrixError:
            continue
        small = ground_state(solve(M.assemble(b, net, st, pot)))[0]
        nest_worst = max(nest_worst, big - small)
        done += 1
    ok = res_worst <= 1e-10 and ortho_worst <= 1e-10 and root_worst <= 1e-9 and nest_worst <= 1e-10
    assert verdict("4", ok, f"residual {res_worst:.1e}; S-orthonormality {ortho_worst:.1e}; "
                            f"root gap {root_worst:.1e}; worst nesting rise {nest_worst:.1e}")


def test_criterion_5_uncertainty(verdict):
    rng = np.random.default_rng(50)
    sigma_x = 0.2863
    worst = np.inf
    for _ in range(100):
        D_ = int(rng.integers(1, 6))
        basis = M.StateBasis(rng.uniform(0.1, 4, D_), rng.uniform(-1, 1, (D_, 1)))
        r = metrics.uncertainty_check(basis, rng.normal(size=D_), sigma_x)
        worst = min(worst, r["margin"])
    single = metrics.uncertainty_check(M.StateBasis(np.array([1.3]), np.array([[0.2]])), [1.0], sigma_x)
    sat = abs(single["margin"])
    ok = worst >= -1e-9 and sat <= 1e-10
    assert verdict("5", ok, f"smallest margin {worst:.2e} (tol -1e-9); single Gaussian |margin| {sat:.1e}")


def test_criterion_6_force_consistency(verdict):
    rng = np.random.default_rng(60)
    h = 1e-5
    worst = 0.0
    for k in range(50):
        b, net, st, pot, c = oracle.random_instance(rng, 1 + k % 4, D=2, P=3)
        x = rng.uniform(-1, 1, net.n_inputs)
        F = M.force(x, net, st, pot)
        for i in range(net.n_inputs):
            e = np.zeros(net.n_inputs)
            e[i] = h
            fd = -(potential(x + e, net, st, pot)[0] - potential(x - e, net, st, pot)[0]) / (2 * h)
            worst = max(worst, abs(F[i] - fd) / abs(fd))
    assert verdict("6", worst <= 1e-6, f"max relative error {worst:.1e} (tol 1e-6)")


def test_criterion_7_energies_from_published_parameters(verdict):
    sol = reference_solution()
    lines, ok = [], True
    for label, part in (("train", TRAIN), ("test", TEST)):
        pair = M.assemble(sol.basis, sol.net, table_stats(), table_potential(part))
        e = M.energy_breakdown(sol.c, pair)
        dt = abs(e.T - part["T"]) / part["T"]
        dv = abs(e.V - part["V"]) / part["V"]
        ok &= dt < 0.10 and dv < 0.10
        lines.append(f"{label} T={e.T:.5e} ({dt:.1%}) V={e.V:.5e} ({dv:.1%})")
    assert verdict("7 (T, V)", ok, "; ".join(lines) + " (tol 10%)")


@pytest.mark.skipif(pollen_path() is None, reason="pollen CSV not fetched")
def test_criterion_7_error_percent_on_pollen(verdict):
    from eann.network import error_percent

    sol = reference_solution()
    normed, _ = D.normalize(D.load_csv(pollen_path()))
    train, test = D.split(normed, sol.train_fraction, sol.split_seed)
    er = {k: float(error_percent(sol.net, d)[0]) for k, d in (("train", train), ("test", test))}
    ok = all(0.5 <= v <= 1.5 for v in er.values())
    assert verdict("7 (E_r)", ok, f"E_r train {er['train']:.3f}% test {er['test']:.3f}% (range 0.5-1.5%)")


@pytest.mark.slow
def test_criterion_8_ga_behaviour(surrogate_parts, verdict):
    train, _, stats = surrogate_parts
    layout = ga.Layout(4, 1, 20, 12)
    cfgs = [ga.IslandConfig(population=250, cycles=2000, radius=r, seed=0, exchange_period=100,
                            log_interval=20) for r in ga.sharing_schedule(2)]
    t0 = time.perf_counter()
    res = ga.run_islands(cfgs, layout, train, stats)
    elapsed = time.perf_counter() - t0
    steps, best_e, best_er = ga.global_series(res.history)
    monotone = all(b <= a for a, b in zip(best_e, best_e[1:]))
    ratio = res.best.error / res.initial_best_error
    rho = spearmanr(best_e, best_er)[0]
    ok = monotone and ratio <= 0.5 and rho > 0.5 and elapsed < 600
    assert verdict("8", ok, f"{elapsed:.0f}s; envelope non-increasing: {monotone}; final best-E "
                            f"individual E_r {res.best.error:.3f}% vs initial population min "
                            f"{res.initial_best_error:.3f}% (ratio {ratio:.3f}, need <= 0.5); "
                            f"Spearman {rho:.3f} (need > 0.5)")


def test_criterion_9_gray_code(verdict):
    k = np.arange(2 ** 16)
    back = ga.bits_to_int(ga.gray_decode(ga.gray_encode(ga.int_to_bits(k, 16))))
    round_trip = bool(np.array_equal(back, k))
    r = np.random.default_rng(90).integers(0, 2 ** 20 - 1, 10_000)
    a = ga.gray_encode(ga.int_to_bits(r, 20))
    b = ga.gray_encode(ga.int_to_bits(r + 1, 20))
    adjacent = bool(np.all(np.count_nonzero(a != b, axis=1) == 1))
    assert verdict("9", round_trip and adjacent,
                   f"16-bit round trip: {round_trip}; adjacency on 10^4 integers: {adjacent}")
