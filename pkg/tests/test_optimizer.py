import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from daccgd import graphs, objectives as ob, optimizer as op
from daccgd.mixing import ContractionEstimate, estimate_contraction
from daccgd.optimizer import AlgoParams, CoefficientState, next_coefficients


def greater_root(A, L, mu):
    # L a^2 - (1 + A mu) a - (1 + A mu) A = 0
    return max(np.roots([L, -(1 + A * mu), -(1 + A * mu) * A]).real)


# ---------------------------------------------------------------- coefficients

def test_first_coefficient():
    c = next_coefficients(CoefficientState(), 4.0, 0.3)
    assert c.alpha == pytest.approx(0.25) and c.A == pytest.approx(0.25) and c.k == 1


def test_coefficient_examples():
    assert next_coefficients(CoefficientState(1.0), 1.0, 1.0).alpha == pytest.approx(1 + math.sqrt(3))
    assert next_coefficients(CoefficientState(1.0), 1.0, 0.0).alpha == pytest.approx((1 + math.sqrt(5)) / 2)


@settings(max_examples=40, deadline=None)
@given(L=st.floats(1e-2, 1e3), ratio=st.floats(1e-6, 1.0))
def test_coefficient_residual_and_roots(L, ratio):
    mu = L * ratio
    c = CoefficientState()
    for _ in range(300):
        prev = c
        c = next_coefficients(c, L, mu)
        if not math.isfinite(c.A) or c.A > 1e150:
            break
        lhs = (prev.A + c.alpha) * (1 + prev.A * mu)
        assert abs(lhs - L * c.alpha ** 2) <= 1e-10 * L * c.alpha ** 2
        assert c.A > prev.A
        if prev.A < 1e6:
            assert c.alpha == pytest.approx(greater_root(prev.A, L, mu), rel=1e-9)


def test_history_matches_log_route():
    from daccgd.theory import log_coefficients
    for L, mu in [(2.0, 2.0), (10.0, 1.0), (1.0, 1e-6)]:
        direct = op.coefficient_history(L, mu, 200)[1:]
        np.testing.assert_allclose(np.log(direct), log_coefficients(L, mu, 200), rtol=1e-10, atol=1e-10)


# ---------------------------------------------------------------- formulas

def test_delta_prime_examples():
    assert op.compute_delta_prime(1.0, 4, 1.0, 1.0, 1.0) == pytest.approx(0.125)
    assert op.compute_delta_prime(2.0, 4, 1.0, 1.0, 1.0) == pytest.approx(0.25)
    assert op.compute_delta_prime(1.0, 32, 1.0, 4.0, 2.0) == pytest.approx(0.125)


def test_delta_examples():
    assert op.compute_delta(1.0, 1, 1.0, 1.0, 1.0, 1.0) == pytest.approx(1.5)
    mu, L = 0.5, 3.0
    expected = 0.5 * (L ** 2 / L + 2 * L ** 2 / mu + L - mu) * 0.2
    assert op.compute_delta(0.2, 1, mu, L, mu, L) == pytest.approx(expected)
    assert op.compute_delta(0.4, 3, 1, 2, 0.5, 4) == pytest.approx(2 * op.compute_delta(0.2, 3, 1, 2, 0.5, 4))


def test_outer_iterations():
    assert op.compute_outer_iterations(1e-3, 2.0, 2.0, 1.5) == math.ceil(2 * math.log(2 * 2 * 1.5 ** 2 / 1e-3))
    base = 2 * math.sqrt(4.0) * math.log(2 * 4 * 9 / 1e-4)
    quad = 2 * math.sqrt(16.0) * math.log(2 * 16 * 9 / 1e-4)
    assert op.compute_outer_iterations(1e-4, 4.0, 1.0, 3.0) == math.ceil(base)
    assert op.compute_outer_iterations(1e-4, 16.0, 1.0, 3.0) == math.ceil(quad)
    assert op.compute_outer_iterations(10.0, 1.0, 1.0, 1.0) == 1
    # alternative form with 2 L_g moved into the denominator
    assert op.compute_outer_iterations(1e-6, 1.0, 1.0, 1.0, form="inverted") == math.ceil(2 * math.log(0.5e6))


def test_D_examples():
    assert op.compute_D(0.0, 2.0, 0.5, 3.0, 4, 1.5, 0.0) == pytest.approx((3.0 / 0.5 * 2 * 1.5) ** 2)
    assert op.compute_D(1.0, 1.0, 1.0, 1.0, 1, 0.0, 0.0) == pytest.approx((3 + 2 * math.sqrt(2)) ** 2)
    args = dict(delta_prime=0.1, L=4.0, mu=0.5, L_l=3.0, n=5, dist0=2.0, grad_norm_star=1.0)
    base = op.compute_D(**args)
    for key in ("delta_prime", "L_l", "n", "dist0", "grad_norm_star"):
        bumped = dict(args, **{key: args[key] * 1.5})
        assert op.compute_D(**bumped) > base


def test_T_examples():
    assert op.compute_T(1, 0.5, 1e-3, 1e-3) == 1
    assert op.compute_T(3, 0.2, 1e-5, 1e-3) == 1
    assert op.compute_T(1, 0.5, math.e ** 2, 1.0) == 2
    assert op.compute_T(1, 0.25, math.e ** 2, 1.0) == 4
    with pytest.raises(ValueError):
        op.compute_T(1, 0.0, 2.0, 1.0)


@pytest.mark.parametrize("seed,spread", [(2, 0.2), (0, 0.0), (5, 0.5)])
def test_D1_D2_dominate_log_term(seed, spread):
    p = ob.synthetic_least_squares(6, 4, 30.0, seed=seed, spread=spread)
    tp = op.plan_parameters(p, ContractionEstimate(1, 0.5), 1e-5, np.zeros(4))
    c = p.constants
    D1, D2 = op.compute_D1_D2(p.n, c.mu_g, c.L_g, c.L_l, tp.dist0, tp.grad_norm_star, form="derived")
    assert math.sqrt(tp.D / tp.delta_prime) <= D1 / math.sqrt(tp.epsilon) + D2
    assert (tp.D1, tp.D2) == op.compute_D1_D2(p.n, c.mu_g, c.L_g, c.L_l, tp.dist0, tp.grad_norm_star)
    assert tp.D1 <= D1 and tp.D2 == D2


def test_nominal_D1_can_fall_short():
    p = ob.synthetic_least_squares(6, 4, 30.0, seed=2, spread=0.2)
    tp = op.plan_parameters(p, ContractionEstimate(1, 0.5), 1e-5, np.zeros(4))
    assert math.sqrt(tp.D / tp.delta_prime) > tp.D1 / math.sqrt(tp.epsilon) + tp.D2


# ---------------------------------------------------------------- runs

def centralized_agd(grad, x0, L, mu, n_iter):
    """Independent reference: each u-step solved as a linear system."""
    d = len(x0)
    x = u = np.array(x0, dtype=float)
    A = 0.0
    xs = [x]
    for _ in range(n_iter):
        alpha = greater_root(A, L, mu)
        A1 = A + alpha
        y = (alpha * u + A * x) / A1
        g = grad(y)
        # stationarity of alpha(<g, z-y> + mu/2|z-y|^2) + (1+A mu)/2 |z-u|^2
        H = (alpha * mu + 1 + A * mu) * np.eye(d)
        u = np.linalg.solve(H, alpha * mu * y + (1 + A * mu) * u - alpha * g)
        x = (alpha * u + A * x) / A1
        A = A1
        xs.append(x)
    return np.array(xs)


def test_single_agent_matches_centralized():
    p = ob.ProblemInstance([ob.QuadraticBlock(np.diag([1.0, 3.0, 10.0]), [1.0, -2.0, 0.5])])
    c = p.constants
    params = AlgoParams(2 * c.L_g, c.mu_g / 2, 3, 1e-9, 1e-12)
    tr = op.run_daccgd(p, graphs.static(1), params, np.ones(3), 40, early_stop=False,
                       record_iterates=True)
    ref = centralized_agd(p.grad_f, np.ones(3), params.L, params.mu, 40)
    np.testing.assert_allclose(np.array(tr.x_bar), ref, atol=1e-12)
    assert tr.comm_rounds[-1] == 120


def test_identical_quadratics_complete_graph():
    c = np.array([1.0, 2.0, 3.0])
    p = ob.isotropic_quadratics([1.0] * 4, np.tile(c, (4, 1)))
    params = op.plan_parameters(p, ContractionEstimate(1, 1.0), 1e-10, np.zeros(3))
    tr = op.run_daccgd(p, graphs.static(4), params.algo_params(), np.zeros(3), params.N)
    assert tr.f_gap[-1] <= 1e-10
    assert len(tr) - 1 <= params.N
    # accelerated iterates are not monotone, but stay below the monotone envelope
    A = np.array(tr.A[1:])
    envelope = tr.u_dist_sq[0] / (2 * A)
    assert np.all(np.array(tr.f_gap[1:]) <= envelope)
    assert np.all(np.diff(envelope) < 0)


def test_three_scalar_quadratics_ring():
    p = ob.scalar_quadratics([1.0, 2.0, 3.0], [0.0, 1.0, 2.0])
    seq = graphs.static(3, "ring")
    est = estimate_contraction(seq, 1, 5)
    tp = op.plan_parameters(p, est, 1e-12, np.zeros(1))
    tr = op.run_daccgd(p, seq, tp.algo_params(), np.zeros(1), 10 * tp.N, record_iterates=True)
    assert tr.x_bar[-1][0] == pytest.approx(8 / 6, abs=1e-5)
    assert tr.f_gap[-1] <= 1e-12


def test_exact_averaging_reduces_to_vector_recursion(rng):
    p = ob.synthetic_least_squares(5, 4, 20.0, seed=5, spread=0.3)
    c = p.constants
    params = AlgoParams(2 * c.L_g, c.mu_g / 2, 1, 1e-9, 1e-9)
    # complete-graph Metropolis weights are exact averaging
    tr = op.run_daccgd(p, graphs.static(5), params, rng.standard_normal(4), 60, early_stop=False,
                       record_iterates=True)
    ref_x, ref_u, ref_y = op.reference_recursion(p.grad_f, tr.x_bar[0], params.L, params.mu, 60)
    np.testing.assert_allclose(tr.x_bar, ref_x, atol=1e-9)
    np.testing.assert_allclose(tr.u_bar, ref_u, atol=1e-9)
    np.testing.assert_allclose(tr.y_bar[1:], ref_y[1:], atol=1e-9)


def test_unscaled_step_form_also_converges():
    p = ob.synthetic_least_squares(6, 3, 10.0, seed=1)
    seq = graphs.static(6)
    tp = op.plan_parameters(p, ContractionEstimate(1, 1.0), 1e-8, np.zeros(3))
    tr = op.run_daccgd(p, seq, tp.algo_params(), np.zeros(3), 10 * tp.N, step_form="unscaled")
    assert tr.f_gap[-1] <= 1e-8
    with pytest.raises(ValueError):
        op.run_daccgd(p, seq, tp.algo_params(), np.zeros(3), 5, step_form="other")


def test_counters_nondecreasing():
    p = ob.synthetic_least_squares(8, 3, 10.0, seed=1)
    seq = graphs.tau_connected(8, 2, seed=3)
    tr = op.run_daccgd(p, seq, AlgoParams(2 * p.constants.L_g, p.constants.mu_g / 2, 7, 1e-6, 1e-6),
                       np.zeros(3), 30)
    assert np.all(np.diff(tr.grad_evals) == 1)
    assert np.all(np.diff(tr.comm_rounds) == 7)
    assert np.all(np.isfinite(tr.f_gap))


def test_gd_single_agent_rate():
    p = ob.ProblemInstance([ob.QuadraticBlock(np.diag([1.0, 2.0, 5.0]), [1.0, 1.0, 1.0])])
    c = p.constants
    tr = op.run_inexact_gd(p, graphs.static(1), 1 / c.L_g, 1, 50, np.zeros(3))
    gaps = np.array(tr.f_gap)
    gaps = gaps[gaps > 1e-13]
    assert np.all(gaps[1:] <= (1 - c.mu_g / c.L_g) * gaps[:-1] * (1 + 1e-9))


def test_gd_zero_step_constant():
    p = ob.synthetic_least_squares(4, 2, 5.0, seed=0)
    x0 = np.array([0.3, -0.7])
    tr = op.run_inexact_gd(p, graphs.static(4, "path"), 0.0, 3, 10, x0)
    assert tr.f_gap == pytest.approx([tr.f_gap[0]] * 11)


def test_gd_exact_averaging_is_projected_gd():
    p = ob.synthetic_least_squares(5, 3, 10.0, seed=2)
    gamma = 1 / p.constants.L_l
    tr = op.run_inexact_gd(p, graphs.static(5), gamma, 1, 25, np.zeros(3))
    x = np.zeros(3)
    for k in range(25):
        x = x - gamma * p.grad_f(x)
    assert tr.f_gap[-1] == pytest.approx(p.f(x) - tr.f_star, rel=1e-9, abs=1e-14)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reported():
    p = ob.synthetic_least_squares(3, 2, 10.0, seed=0)
    with pytest.raises(op.DivergenceError, match="iteration"):
        op.run_inexact_gd(p, graphs.static(3), 1e6, 1, 5000, np.ones(2))
