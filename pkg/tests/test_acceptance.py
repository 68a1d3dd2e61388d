"""
Acceptance suite. Each test prints one PASS/FAIL line; the lines are also
collected into a summary section at the end of the pytest run.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import sparse

from daccgd import graphs, mixing, objectives as ob, optimizer as op, theory as th
from daccgd.objectives import LibsvmParseError, dump_libsvm, load_libsvm, parse_libsvm

from conftest import ACCEPTANCE, random_quadratic_problem

DATA = Path(__file__).parent / "data"


def record(num, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {title}: {detail}"
    ACCEPTANCE[num] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def kappa100_run():
    """Shared instance for criteria 6, 8 and 9."""
    p = ob.synthetic_least_squares(20, 10, 100.0, seed=0)
    seq = graphs.random_geometric(20, 0.5, seed=7)
    est = mixing.estimate_contraction(seq, 1, 5)
    x0 = np.zeros(10)
    x_star, f_star = ob.minimizer_oracle(p)
    tp = op.plan_parameters(p, est, 1e-6, x0, x_star)
    t0 = time.perf_counter()
    tr = op.run_daccgd(p, seq, tp.algo_params(), x0, tp.N, x_star, f_star)
    elapsed = time.perf_counter() - t0
    return {"p": p, "seq": seq, "tp": tp, "trace": tr, "elapsed": elapsed,
            "x_star": x_star, "f_star": f_star}


def test_c01_mixing_correctness():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    bad = 0
    offedge_nonzero = 0
    for _ in range(500):
        n = int(rng.integers(1, 51))
        p_edge = rng.uniform(0.0, 1.0)
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p_edge]
        es = graphs.EdgeSet(n, pairs)
        w = mixing.metropolis_weights(es)
        bad += not mixing.verify_mixing(w, 1e-12, es).passed
        mask = ~(es.adjacency() | np.eye(n, dtype=bool))
        offedge_nonzero += int(np.count_nonzero(w.W[mask]))
    elapsed = time.perf_counter() - t0
    record(1, "mixing correctness", bad == 0 and offedge_nonzero == 0 and elapsed < 10,
           f"{bad} failing matrices, {offedge_nonzero} off-edge nonzeros, {elapsed:.2f}s")


def test_c02_contraction_property():
    rng = np.random.default_rng(2)
    worst = math.inf
    lam_min = math.inf
    failures = 0
    for i in range(20):
        tau = (1, 2, 4)[i % 3]
        n = int(rng.integers(2, 31))
        seq = graphs.tau_connected(n, tau, seed=int(rng.integers(2 ** 32)),
                                   extra_prob=float(rng.uniform(0, 0.2)))
        lam = mixing.estimate_contraction(seq, tau, 60).lam
        rep = th.check_contraction(seq, lam, n_states=100, rng=rng, windows=60, tol=-1e-10)
        lam_min = min(lam_min, lam)
        worst = min(worst, rep.worst_slack)
        failures += not rep.passed
    record(2, "contraction property", failures == 0 and lam_min > 0,
           f"min lambda {lam_min:.3e}, worst slack {worst:.3e}")


def test_c03_coefficient_bounds():
    reps = [th.check_coefficient_bounds(2.0 * k, 2.0, N=1000) for k in (1.0, 10.0, 1e3, 1e6)]
    record(3, "coefficient bounds", all(r.passed for r in reps),
           f"worst relative slack {min(r.worst_slack for r in reps):.3e}")


def test_c04_inexact_oracle_inequality():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst = math.inf
    failures = 0
    for _ in range(50):
        n, d = int(rng.integers(2, 9)), int(rng.integers(1, 6))
        p = random_quadratic_problem(rng, n, d)
        x_star, _ = ob.minimizer_oracle(p)
        xbar = x_star + rng.standard_normal(d)
        budget = float(rng.uniform(1e-4, 1.0))
        E = rng.standard_normal((n, d))
        E -= E.mean(axis=0)
        X = xbar + E * math.sqrt(budget * rng.uniform(0.1, 1.0) / np.sum(E * E))
        ys = th.sample_ball(xbar, 10 * np.linalg.norm(xbar - x_star), 1000, rng)
        rep = th.check_model_inequality(p, X, ys, delta_prime=budget)
        worst = min(worst, rep.worst_slack)
        failures += not rep.passed
    elapsed = time.perf_counter() - t0
    record(4, "inexact-oracle inequality", failures == 0 and worst >= -1e-9 and elapsed < 60,
           f"worst slack {worst:.3e}, {elapsed:.2f}s")


def test_c05_consensus_maintenance():
    p = ob.synthetic_least_squares(20, 5, 50.0, seed=5, spread=0.3)
    seq = graphs.tau_connected(20, 2, seed=5)
    est = mixing.estimate_contraction(seq, 2, 100)
    tp = op.plan_parameters(p, est, 1e-6, np.zeros(5))
    tr = op.run_daccgd(p, seq, tp.algo_params(), np.zeros(5), tp.N)
    cu = np.array(tr.cons_u[1:])
    frac = float(np.mean(cu <= tp.delta_prime))
    record(5, "consensus maintenance", frac == 1.0,
           f"{100 * frac:.1f}% of {cu.size} iterations within delta'={tp.delta_prime:.3e} (T={tp.T})")


def test_c06_end_to_end(kappa100_run):
    r = kappa100_run
    tr, tp = r["trace"], r["tp"]
    evals = tr.evals_to_gap(1e-6)
    ok = evals is not None and evals <= tp.N and r["elapsed"] < 30
    record(6, "end-to-end convergence", ok,
           f"f_gap <= 1e-6 after {evals} of N={tp.N} gradient steps (T={tp.T}), {r['elapsed']:.2f}s")


def test_c07_sqrt_kappa_scaling():
    seq = graphs.random_geometric(20, 0.5, seed=7)
    est = mixing.estimate_contraction(seq, 1, 5)
    kappas = [10.0, 1e2, 1e3, 1e4]
    evals = []
    for k in kappas:
        p = ob.synthetic_least_squares(20, 10, k, seed=0)
        tp = op.plan_parameters(p, est, 1e-6, np.zeros(10))
        tr = op.run_daccgd(p, seq, tp.algo_params(), np.zeros(10), tp.N)
        evals.append(tr.evals_to_gap(1e-6))
    ok = all(e is not None for e in evals)
    slope = float(np.polyfit(np.log(kappas), np.log(evals), 1)[0]) if ok else float("nan")
    record(7, "sqrt(kappa_g) scaling", ok and abs(slope - 0.5) <= 0.15,
           f"evals {evals}, log-log slope {slope:.3f}")


def test_c08_lemma3_on_run(kappa100_run):
    r = kappa100_run
    rep = th.check_lemma3_bound(r["trace"], r["tp"].delta, r["tp"].mu)
    record(8, "outer-loop bound", rep.passed and rep.worst_slack >= -1e-9,
           f"worst relative slack {rep.worst_slack:.3e} over {rep.n_checked} checks")


def test_c09_baseline_dominance(kappa100_run):
    r = kappa100_run
    p, tp = r["p"], r["tp"]
    gd = op.run_inexact_gd(p, r["seq"], 1.0 / p.constants.L_l, tp.T, 50 * tp.N, np.zeros(10),
                           1e-6, r["x_star"], r["f_star"])
    acc = r["trace"].evals_to_gap(1e-6)
    base = gd.evals_to_gap(1e-6)
    ok = acc is not None and (base is None or acc < base)
    record(9, "baseline dominance", ok, f"DAccGD {acc} vs inexact GD {base} gradient evaluations")


def test_c10_centralized_reduction():
    rng = np.random.default_rng(10)
    p = random_quadratic_problem(rng, 1, 6)
    c = p.constants
    params = op.AlgoParams(2 * c.L_g, c.mu_g / 2, 4, 1e-9, 1e-12)
    x0 = rng.standard_normal(6)
    tr = op.run_daccgd(p, graphs.static(1), params, x0, 200, early_stop=False,
                       record_iterates=True)
    xs, us, ys = op.reference_recursion(p.grad_f, x0, params.L, params.mu, 200)
    err = max(np.abs(np.array(tr.x_bar) - xs).max(), np.abs(np.array(tr.u_bar) - us).max(),
              np.abs(np.array(tr.y_bar)[1:] - ys[1:]).max())
    record(10, "centralized reduction", err <= 1e-9, f"max iterate deviation {err:.3e}")


ERROR_CASES = [
    ("1 5:abc", 1), ("+1 1:1\n-1 3:1 2:1", 2), ("+1 2:1 2:3", 1), ("1 0:1", 1),
    ("1 -2:1", 1), ("1 x:1", 1), ("1 1.5:1", 1), ("1 3", 1), ("1 3:", 1),
    ("3:1 4:1", 1), ("abc 1:1", 1), ("+1 1:1\n\n2 1:1", 3), ("1 1:nan", 1), ("inf 1:1", 1),
]

ROUND_TRIPS = [
    "+1 3:0.5 7:1.0\n",
    "-1\n",
    "+1 1:-2.25 2:1e-10 9:3.0\n-1 4:7.0\n",
    "+1 100:1.0\n",
    "-1 1:1.0 2:1.0 3:1.0\n+1 2:-1.0\n-1\n",
    "+1 5:1e+20 6:-1e-20\n",
    "+1 1:0.1\n+1 1:0.2\n+1 1:0.3\n",
    "-1 2:3.5\n-1 1:2.5\n",
]


def test_c11_parser():
    results = []
    for text, lineno in ERROR_CASES:
        try:
            parse_libsvm(text)
            results.append(False)
        except LibsvmParseError as exc:
            results.append(exc.lineno == lineno)
    for text in ROUND_TRIPS:
        rows, labels = parse_libsvm(text)
        results.append(dump_libsvm(rows, labels) == text)
    rng = np.random.default_rng(11)
    for _ in range(5):
        dense = rng.standard_normal((6, 9)) * (rng.random((6, 9)) < 0.4)
        dense[0, -1] = 2.0
        lab = np.where(rng.random(6) < 0.5, -1.0, 1.0)
        rows, labels = parse_libsvm(dump_libsvm(sparse.csr_matrix(dense), lab))
        results.append(np.array_equal(rows.toarray(), dense) and np.array_equal(labels, lab))
    rows, labels = load_libsvm(DATA / "a9a_sample.txt")
    sample_ok = rows.shape == (100, 123) and set(labels.tolist()) == {-1.0, 1.0}
    record(11, "LIBSVM parser", all(results) and len(results) >= 20 and sample_ok,
           f"{sum(results)}/{len(results)} cases, a9a sample shape {rows.shape}")
