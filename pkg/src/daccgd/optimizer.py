"""
Decentralized accelerated gradient descent with a gossip consensus subroutine.

The outer loop is an accelerated scheme for a ``(delta, L, mu)``-inexact model
of ``f``. After each gradient step the agents run ``T`` gossip rounds, which
act as an inexact projection onto the consensus subspace.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .consensus import ConsensusCounter, as_stream, consensus, consensus_error
from .mixing import ContractionEstimate
from .objectives import ProblemInstance, consensual, minimizer_oracle, stacked_gradient

__all__ = [
    "CoefficientState",
    "AlgoParams",
    "PlannedParameters",
    "RunTrace",
    "DivergenceError",
    "next_coefficients",
    "coefficient_history",
    "compute_delta_prime",
    "compute_delta",
    "compute_outer_iterations",
    "compute_D",
    "compute_D1_D2",
    "compute_T",
    "plan_parameters",
    "run_daccgd",
    "run_inexact_gd",
    "reference_recursion",
]

log = logging.getLogger(__name__)


class DivergenceError(ArithmeticError):
    def __init__(self, iteration: int):
        super().__init__(f"divergence: non-finite iterate at iteration {iteration}")
        self.iteration = iteration


# ---------------------------------------------------------------------------
# coefficients

@dataclass(frozen=True)
class CoefficientState:
    A: float = 0.0
    alpha: float = 0.0
    k: int = 0


def next_coefficients(c: CoefficientState, L: float, mu: float) -> CoefficientState:
    """Greater root ``alpha`` of ``(A + alpha)(1 + A mu) = L alpha^2``, and ``A + alpha``."""
    if L <= 0 or mu < 0:
        raise ValueError("need L > 0 and mu >= 0")
    a = 1.0 + c.A * mu
    alpha = (a + math.sqrt(a * a + 4.0 * L * c.A * a)) / (2.0 * L)
    return CoefficientState(c.A + alpha, alpha, c.k + 1)


def coefficient_history(L: float, mu: float, N: int) -> np.ndarray:
    """``A^0, ..., A^N`` as an array."""
    out = np.empty(N + 1)
    c = CoefficientState()
    out[0] = 0.0
    for k in range(1, N + 1):
        c = next_coefficients(c, L, mu)
        out[k] = c.A
    return out


# ---------------------------------------------------------------------------
# parameter formulas

def compute_delta_prime(eps, n, mu_g, L_g, L_l) -> float:
    """Consensus accuracy ``delta' = (n eps / 32) mu_g^{3/2} / (L_g^{1/2} L_l^2)``."""
    return n * eps / 32.0 * mu_g ** 1.5 / (math.sqrt(L_g) * L_l ** 2)


def compute_delta(delta_prime, n, mu_g, L_g, mu_l, L_l) -> float:
    """Additive oracle error induced by consensus accuracy ``delta_prime``."""
    return (L_l ** 2 / L_g + 2.0 * L_l ** 2 / mu_g + L_l - mu_l) * delta_prime / (2.0 * n)


def compute_outer_iterations(eps, L_g, mu_g, dist0, form: str = "standard") -> int:
    """Number of outer iterations (gradient computations per node).

    ``form="standard"`` uses ``2 sqrt(L_g/mu_g) log(2 L_g dist0^2 / eps)``;
    ``form="inverted"`` uses ``2 sqrt(L_g/mu_g) log(dist0^2 / (2 eps L_g))``.
    The result is rounded up and at least 1.
    """
    if form == "standard":
        arg = 2.0 * L_g * dist0 ** 2 / eps
    elif form == "inverted":
        arg = dist0 ** 2 / (2.0 * eps * L_g)
    else:
        raise ValueError(f"unknown form {form!r}")
    if arg <= 1.0:
        return 1
    return max(1, math.ceil(2.0 * math.sqrt(L_g / mu_g) * math.log(arg)))


def compute_D(delta_prime, L, mu, L_l, n, dist0, grad_norm_star) -> float:
    """Bound ``D`` on ``||V - mean(V)||^2`` before each consensus call."""
    slm = math.sqrt(L * mu)
    root = ((2.0 * L_l / slm + 1.0) * math.sqrt(delta_prime)
            + L_l / mu * math.sqrt(n) * math.sqrt(dist0 ** 2 + 8.0 * delta_prime / slm)
            + 2.0 * grad_norm_star / slm)
    return root * root


def compute_D1_D2(n, mu_g, L_g, L_l, dist0, grad_norm_star, form: str = "nominal") -> tuple[float, float]:
    """Constants with ``sqrt(D / delta') <= D1 / sqrt(eps) + D2``.

    ``form="nominal"`` uses ``4 sqrt(2)`` on the ``||grad F(X*)||`` term; the
    bound itself needs ``8 sqrt(2)`` there (``form="derived"``), so only the
    derived pair is guaranteed to dominate.
    """
    if form not in ("nominal", "derived"):
        raise ValueError("form must be 'nominal' or 'derived'")
    pre = L_l / (math.sqrt(L_g) * mu_g)
    r = L_g / mu_g
    g = 4 * math.sqrt(2) if form == "nominal" else 8 * math.sqrt(2)
    D1 = pre * (8 * math.sqrt(2) * L_l * dist0 * r ** 0.75
                + g * grad_norm_star / math.sqrt(n) * r ** 0.25)
    D2 = pre * (3 * math.sqrt(mu_g) + 4 * math.sqrt(2 * n) * r ** 0.25)
    return D1, D2


def compute_T(tau, lam, D, delta_prime) -> int:
    """Gossip rounds per outer step, ``ceil(tau / (2 lam) log(D / delta'))``, at least 1."""
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    if delta_prime <= 0:
        raise ValueError("delta_prime must be positive")
    if D <= delta_prime:
        return 1
    return max(1, math.ceil(tau / (2.0 * lam) * math.log(D / delta_prime)))


@dataclass(frozen=True)
class AlgoParams:
    """Outer-loop constants: oracle ``L = 2 L_g``, ``mu = mu_g / 2``, rounds ``T``."""

    L: float
    mu: float
    T: int
    delta_prime: float
    epsilon: float

    def __post_init__(self):
        if not (self.L >= self.mu > 0):
            raise ValueError("need L >= mu > 0")
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if self.delta_prime <= 0 or self.epsilon <= 0:
            raise ValueError("delta_prime and epsilon must be positive")


@dataclass(frozen=True)
class PlannedParameters:
    """Every quantity used to configure a run, for auditing."""

    n: int
    epsilon: float
    mu_l: float
    L_l: float
    mu_g: float
    L_g: float
    L: float
    mu: float
    tau: int
    lam: float
    chi: float
    dist0: float
    grad_norm_star: float
    delta_prime: float
    delta: float
    D: float
    D1: float
    D2: float
    T: int
    T_derived: int
    N: int
    N_alt: int
    N_tot: int

    def algo_params(self) -> AlgoParams:
        return AlgoParams(self.L, self.mu, self.T, self.delta_prime, self.epsilon)

    def as_dict(self) -> dict:
        return asdict(self)


def plan_parameters(p: ProblemInstance, contraction: ContractionEstimate, epsilon: float,
                    x0, x_star=None, dist0: float | None = None,
                    grad_norm_star: float | None = None, T: int | None = None) -> PlannedParameters:
    """Derive ``delta'``, ``D``, ``T`` and ``N`` for a problem and network.

    ``x*`` and ``||grad F(X*)||`` come from :func:`minimizer_oracle` unless
    upper bounds ``dist0`` and ``grad_norm_star`` are supplied. ``T`` overrides
    the derived round count (the derived value is still reported as
    ``T_derived``).
    """
    c = p.constants
    n = p.n
    x0 = np.asarray(x0, dtype=float)
    if dist0 is None or grad_norm_star is None:
        if x_star is None:
            x_star, _ = minimizer_oracle(p)
        if dist0 is None:
            dist0 = float(np.linalg.norm(x0 - x_star))
        if grad_norm_star is None:
            grad_norm_star = float(np.linalg.norm(stacked_gradient(p, consensual(x_star, n))))
    L, mu = 2.0 * c.L_g, c.mu_g / 2.0
    dp = compute_delta_prime(epsilon, n, c.mu_g, c.L_g, c.L_l)
    delta = compute_delta(dp, n, c.mu_g, c.L_g, c.mu_l, c.L_l)
    D = compute_D(dp, L, mu, c.L_l, n, dist0, grad_norm_star)
    D1, D2 = compute_D1_D2(n, c.mu_g, c.L_g, c.L_l, dist0, grad_norm_star)
    T_th = compute_T(contraction.tau, contraction.lam, D, dp)
    N = compute_outer_iterations(epsilon, c.L_g, c.mu_g, dist0)
    N_text = compute_outer_iterations(epsilon, c.L_g, c.mu_g, dist0, form="inverted")
    T_use = T_th if T is None else int(T)
    return PlannedParameters(
        n=n, epsilon=epsilon, mu_l=c.mu_l, L_l=c.L_l, mu_g=c.mu_g, L_g=c.L_g, L=L, mu=mu,
        tau=contraction.tau, lam=contraction.lam, chi=contraction.chi, dist0=dist0,
        grad_norm_star=grad_norm_star, delta_prime=dp, delta=delta, D=D, D1=D1, D2=D2,
        T=T_use, T_derived=T_th, N=N, N_alt=N_text, N_tot=N * T_use)


# ---------------------------------------------------------------------------
# traces

@dataclass
class RunTrace:
    """Per-iteration record of an optimizer run.

    Row ``k`` describes the state after ``k`` outer iterations; row 0 is the
    initial point. ``consensus_err`` is ``||X^k - mean(X^k)||^2``; the
    ``cons_u``, ``cons_v`` and ``cons_y`` columns hold the same quantity for the
    auxiliary sequences (``cons_v`` is measured before gossip).
    """

    f_star: float
    x_star: np.ndarray
    iters: list = field(default_factory=list)
    grad_evals: list = field(default_factory=list)
    comm_rounds: list = field(default_factory=list)
    f_gap: list = field(default_factory=list)
    consensus_err: list = field(default_factory=list)
    cons_u: list = field(default_factory=list)
    cons_v: list = field(default_factory=list)
    cons_y: list = field(default_factory=list)
    A: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    u_dist_sq: list = field(default_factory=list)
    x_bar: list = field(default_factory=list)
    u_bar: list = field(default_factory=list)
    y_bar: list = field(default_factory=list)
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.iters)

    def column(self, name) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)

    def evals_to_gap(self, eps: float) -> int | None:
        """Gradient evaluations per node when ``f_gap <= eps`` first held."""
        for g, evals in zip(self.f_gap, self.grad_evals):
            if g <= eps:
                return evals
        return None

    def rows(self):
        for k in range(len(self)):
            yield (self.iters[k], self.grad_evals[k], self.comm_rounds[k],
                   self.f_gap[k], self.consensus_err[k])


def _check_finite(k, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DivergenceError(k)


def _reference(p, x_star, f_star):
    if x_star is None or f_star is None:
        x_star, f_star = minimizer_oracle(p)
    return np.asarray(x_star, dtype=float), float(f_star)


def run_daccgd(p: ProblemInstance, seq, params: AlgoParams, x0, max_outer: int,
               x_star=None, f_star=None, early_stop: bool = True,
               record_iterates: bool = False, step_form: str = "prox",
               counter: ConsensusCounter | None = None) -> RunTrace:
    """Decentralized accelerated gradient descent.

    Parameters
    ----------
    p : ProblemInstance
    seq : GraphSequence or indexable stream of mixing matrices
        ``seq[k]`` (after stream conversion) is the matrix of global round ``k``.
    params : AlgoParams
    x0 : array_like, shape (d,)
        Common initial point of all agents.
    max_outer : int
        Iteration cap.
    x_star, f_star : optional
        Reference solution; obtained from :func:`minimizer_oracle` if omitted.
    early_stop : bool
        Stop as soon as ``f(mean x) - f* <= params.epsilon``.
    record_iterates : bool
        Keep the averaged iterates ``x_bar``, ``u_bar``, ``y_bar``.
    step_form : {"prox", "unscaled"}
        Denominator of the gradient step. ``"prox"`` uses
        ``1 + A^{k+1} mu`` (the exact minimizer of the prox-type subproblem);
        ``"unscaled"`` uses ``1 + A^k mu + mu`` with weight ``mu`` on ``Y``.

    Raises
    ------
    DivergenceError
        If an iterate becomes non-finite.
    """
    if step_form not in ("prox", "unscaled"):
        raise ValueError(f"unknown step_form {step_form!r}")
    x_star, f_star = _reference(p, x_star, f_star)
    L, mu, T = params.L, params.mu, params.T
    stream = as_stream(seq)
    counter = counter if counter is not None else ConsensusCounter()
    n = p.n
    X = consensual(x0, n)
    U = X.copy()
    coef = CoefficientState()
    trace = RunTrace(f_star=f_star, x_star=x_star, label="daccgd")
    evals = 0

    def record(k, Y=None, V=None):
        xb, ub = X.mean(axis=0), U.mean(axis=0)
        trace.iters.append(k)
        trace.grad_evals.append(evals)
        trace.comm_rounds.append(counter.rounds_total)
        trace.f_gap.append(float(p.f(xb)) - f_star)
        trace.consensus_err.append(consensus_error(X))
        trace.cons_u.append(consensus_error(U))
        trace.cons_v.append(consensus_error(V) if V is not None else 0.0)
        trace.cons_y.append(consensus_error(Y) if Y is not None else 0.0)
        trace.A.append(coef.A)
        trace.alpha.append(coef.alpha)
        trace.u_dist_sq.append(float(np.sum((ub - x_star) ** 2)))
        if record_iterates:
            trace.x_bar.append(xb)
            trace.u_bar.append(ub)
            trace.y_bar.append(Y.mean(axis=0) if Y is not None else xb)

    record(0)
    for k in range(max_outer):
        if early_stop and trace.f_gap[-1] <= params.epsilon:
            break
        A_prev = coef.A
        coef = next_coefficients(coef, L, mu)
        alpha, A_next = coef.alpha, coef.A
        assert A_next > 0
        Y = (alpha * U + A_prev * X) / A_next
        G = stacked_gradient(p, Y)
        evals += 1
        a = 1.0 + A_prev * mu
        if step_form == "prox":
            V = (alpha * mu * Y + a * U - alpha * G) / (a + alpha * mu)
        else:
            V = (mu * Y + a * U - alpha * G) / (a + mu)
        U = consensus(V, T, stream, counter=counter)
        X = (alpha * U + A_prev * X) / A_next
        _check_finite(k + 1, X, U)
        record(k + 1, Y, V)
    trace.meta.update(params=asdict(params), step_form=step_form)
    return trace


def run_inexact_gd(p: ProblemInstance, seq, gamma: float, T: int, max_iter: int,
                   x0=None, epsilon: float | None = None, x_star=None, f_star=None,
                   counter: ConsensusCounter | None = None) -> RunTrace:
    """Gradient descent with inexact projections: ``X <- Consensus(X - gamma grad F(X), T)``."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    x_star, f_star = _reference(p, x_star, f_star)
    stream = as_stream(seq)
    counter = counter if counter is not None else ConsensusCounter()
    X = consensual(np.zeros(p.d) if x0 is None else x0, p.n)
    trace = RunTrace(f_star=f_star, x_star=x_star, label="inexact-gd")
    evals = 0

    def record(k):
        xb = X.mean(axis=0)
        trace.iters.append(k)
        trace.grad_evals.append(evals)
        trace.comm_rounds.append(counter.rounds_total)
        trace.f_gap.append(float(p.f(xb)) - f_star)
        trace.consensus_err.append(consensus_error(X))
        trace.u_dist_sq.append(float(np.sum((xb - x_star) ** 2)))

    record(0)
    for k in range(max_iter):
        if epsilon is not None and trace.f_gap[-1] <= epsilon:
            break
        X = consensus(X - gamma * stacked_gradient(p, X), T, stream, counter=counter)
        evals += 1
        _check_finite(k + 1, X)
        record(k + 1)
    trace.meta.update(gamma=gamma, T=T)
    return trace


def reference_recursion(grad, x0, L: float, mu: float, n_iter: int):
    """Outer loop written directly in ``R^d``.

    ``grad(y)`` returns the (averaged) gradient at ``y``. Each step minimizes
    ``alpha (<g, z - y> + mu/2 ||z - y||^2) + (1 + A mu)/2 ||z - u||^2`` in
    closed form. Returns arrays of ``x``, ``u``, ``y`` iterates (``y[0] = x0``).
    """
    x = u = np.asarray(x0, dtype=float)
    xs, us, ys = [x], [u], [x]
    A = 0.0
    for _ in range(n_iter):
        a = 1.0 + A * mu
        alpha = (a + math.sqrt(a * a + 4.0 * L * A * a)) / (2.0 * L)
        A_next = A + alpha
        y = (alpha * u + A * x) / A_next
        g = grad(y)
        u = (alpha * mu * y + a * u - alpha * g) / (alpha * mu + a)
        x = (alpha * u + A * x) / A_next
        A = A_next
        xs.append(x)
        us.append(u)
        ys.append(y)
    return np.array(xs), np.array(us), np.array(ys)
