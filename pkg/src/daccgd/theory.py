"""
Numerical checks of the inexact-oracle model, coefficient growth, the outer
loop convergence bound and consensus-round sufficiency.

Every checker is side-effect free and returns a :class:`CheckReport`; failed
inequalities are reported, never raised.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .mixing import MatrixStream
from .objectives import ProblemInstance, stacked_gradient
from .optimizer import RunTrace, compute_delta

__all__ = [
    "SLACK_TOL",
    "OracleModelValue",
    "CheckReport",
    "oracle_model",
    "sample_ball",
    "check_model_inequality",
    "log_coefficients",
    "check_coefficient_bounds",
    "check_lemma3_bound",
    "check_lemma4_sufficiency",
    "check_consensus_maintenance",
    "check_contraction",
    "reports_to_csv",
    "reports_to_text",
]

SLACK_TOL = -1e-9


@dataclass(frozen=True)
class OracleModelValue:
    f_model: float
    g_model: np.ndarray
    delta: float
    delta_prime: float


@dataclass
class CheckReport:
    """Outcome of one family of inequalities.

    ``worst_slack`` is the smallest (bound - value) margin seen, in the units
    stated by ``slack_kind`` ("absolute" or "relative").
    """

    name: str
    worst_slack: float
    n_checked: int
    violations: int = 0
    tol: float = SLACK_TOL
    slack_kind: str = "absolute"
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: worst {self.slack_kind} slack {self.worst_slack:.3e} "
                f"over {self.n_checked} checks, {self.violations} violations")


def _report(name, slacks, tol=SLACK_TOL, kind="absolute", **details) -> CheckReport:
    slacks = np.asarray(slacks, dtype=float).ravel()
    if slacks.size == 0:
        return CheckReport(name, math.inf, 0, 0, tol, kind, details)
    bad = int(np.sum(~(slacks >= tol)))
    return CheckReport(name, float(slacks.min()), int(slacks.size), bad, tol, kind, details)


def _merge(name, parts: dict) -> CheckReport:
    kind = {r.slack_kind for r in parts.values()}
    return CheckReport(
        name,
        min(r.worst_slack for r in parts.values()),
        sum(r.n_checked for r in parts.values()),
        sum(r.violations for r in parts.values()),
        min(r.tol for r in parts.values()),
        kind.pop() if len(kind) == 1 else "mixed",
        {k: {"worst_slack": r.worst_slack, "violations": r.violations, "n": r.n_checked}
         for k, r in parts.items()},
    )


# ---------------------------------------------------------------------------
# inexact oracle

def oracle_model(p: ProblemInstance, X) -> OracleModelValue:
    """Model value, gradient and oracle error at the average of ``X``.

    The consensus accuracy is taken as the measured ``||X - mean(X)||^2``.
    """
    X = np.asarray(X, dtype=float)
    c = p.constants
    Xbar = np.broadcast_to(X.mean(axis=0), X.shape)
    diff = Xbar - X
    dev = float(np.sum(diff * diff))
    G = stacked_gradient(p, X)
    f_model = (p.F(X) + float(np.sum(G * diff))
               + 0.5 * (c.mu_l - 2.0 * c.L_l ** 2 / c.mu_g) * dev) / p.n
    delta = compute_delta(dev, p.n, c.mu_g, c.L_g, c.mu_l, c.L_l)
    return OracleModelValue(f_model, G.mean(axis=0), delta, dev)


def sample_ball(center, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points in the Euclidean ball of ``radius`` around ``center``."""
    center = np.asarray(center, dtype=float)
    d = center.size
    dirs = rng.standard_normal((count, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / d)
    return center + dirs * r[:, None]


def check_model_inequality(p: ProblemInstance, X, y_points, delta_prime: float | None = None,
                           tol: float = SLACK_TOL, strict: bool = True) -> CheckReport:
    """Sandwich the model between the ``mu_g/4`` and ``L_g`` quadratic envelopes.

    For every test point ``y`` checks

        mu_g/4 ||y - x||^2 <= f(y) - f_model - <g, y - x> <= L_g ||y - x||^2 + delta

    where ``x`` is the row mean of ``X``. ``delta`` is computed from
    ``delta_prime`` (default: the measured consensus error of ``X``), which
    must not be smaller than the actual consensus error unless ``strict`` is
    off (used for negative controls).
    """
    X = np.asarray(X, dtype=float)
    model = oracle_model(p, X)
    c = p.constants
    dp = model.delta_prime if delta_prime is None else float(delta_prime)
    if strict and dp < model.delta_prime * (1 - 1e-12):
        raise ValueError(f"delta_prime={dp} is below the consensus error {model.delta_prime}")
    delta = compute_delta(dp, p.n, c.mu_g, c.L_g, c.mu_l, c.L_l)
    xbar = X.mean(axis=0)
    Y = np.atleast_2d(np.asarray(y_points, dtype=float))
    step = Y - xbar
    sq = np.sum(step * step, axis=1)
    middle = p.f(Y) - model.f_model - step @ model.g_model
    lower = middle - 0.25 * c.mu_g * sq
    upper = c.L_g * sq + delta - middle
    return _merge("model_inequality", {
        "lower": _report("lower", lower, tol),
        "upper": _report("upper", upper, tol),
    })


# ---------------------------------------------------------------------------
# coefficients

def log_coefficients(L: float, mu: float, N: int) -> np.ndarray:
    """``log A^1, ..., log A^N`` computed through the growth ratio ``alpha / A``.

    Stays finite where ``A^N`` itself would overflow.
    """
    out = np.empty(N)
    a = -math.log(L)  # A^1 = 1/L
    out[0] = a
    for k in range(1, N):
        c = math.exp(-a) + mu  # (1 + A mu) / A
        r = (c + math.sqrt(c * c + 4.0 * L * c)) / (2.0 * L)
        a += math.log1p(r)
        out[k] = a
    return out


def check_coefficient_bounds(L: float, mu: float, N: int = 1000,
                             tol: float = SLACK_TOL) -> CheckReport:
    """Geometric lower bound on ``A^N`` and the ``1 + sqrt(L/mu)`` bound on ``sum A^i / A^k``.

    Slacks are relative: ``A^k / bound - 1`` and ``1 - ratio / bound``.
    """
    logA = log_coefficients(L, mu, N)
    ks = np.arange(1, N + 1)
    log_lower = -math.log(L) + 2.0 * (ks - 1) * math.log1p(0.5 * math.sqrt(mu / L))
    growth = np.expm1(logA - log_lower)
    ratio = np.empty(N)
    ratio[0] = 1.0
    for k in range(1, N):
        ratio[k] = 1.0 + ratio[k - 1] * math.exp(logA[k - 1] - logA[k])
    cap = 1.0 + math.sqrt(L / mu)
    return _merge(f"coefficients(kappa={L / mu:.3g})", {
        "growth": _report("growth", growth, tol, "relative"),
        "sum_ratio": _report("sum_ratio", 1.0 - ratio / cap, tol, "relative"),
    })


# ---------------------------------------------------------------------------
# run-level checks

def check_lemma3_bound(trace: RunTrace, delta: float, mu: float,
                       coeffs=None, tol: float = SLACK_TOL) -> CheckReport:
    """Outer-loop bounds for every traced iteration ``k >= 1``.

        f_gap(k)        <= R^2 / (2 A^k) + 2 (sum_j A^j) delta / A^k
        ||u_k - x*||^2  <= (R^2 + 4 (sum_j A^j) delta) / (1 + A^k mu)

    with ``R = ||u_0 - x*||``. Slacks are relative to the bound values.
    ``coeffs`` overrides the ``A^k`` history stored in the trace.
    """
    A = np.asarray(trace.A if coeffs is None else coeffs, dtype=float)[1:]
    gap = trace.column("f_gap")[1:]
    udist = trace.column("u_dist_sq")[1:]
    R2 = float(trace.u_dist_sq[0])
    S = np.cumsum(A)
    b1 = R2 / (2 * A) + 2 * S * delta / A
    b2 = (R2 + 4 * S * delta) / (1 + A * mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = np.where(b1 > 0, (b1 - gap) / b1, -gap)
        s2 = np.where(b2 > 0, (b2 - udist) / b2, -udist)
    # exact zeros on both sides (start at the optimum) are not violations
    s1 = np.where((b1 == 0) & (gap <= 0), 0.0, s1)
    s2 = np.where((b2 == 0) & (udist <= 0), 0.0, s2)
    return _merge("lemma3_bound", {
        "function_gap": _report("function_gap", s1, tol, "relative"),
        "u_distance": _report("u_distance", s2, tol, "relative"),
    })


def check_lemma4_sufficiency(trace: RunTrace, delta_prime: float, D: float,
                             tol: float = SLACK_TOL) -> CheckReport:
    """Consensus error of ``U`` stays within ``delta_prime`` and that of ``V`` within ``D``.

    Slacks are relative: ``1 - err / bound``.
    """
    cu = trace.column("cons_u")[1:]
    cv = trace.column("cons_v")[1:]
    return _merge("lemma4_sufficiency", {
        "u_within_delta_prime": _report("u", 1.0 - cu / delta_prime, tol, "relative"),
        "v_within_D": _report("v", 1.0 - cv / D, tol, "relative"),
    })


def check_consensus_maintenance(trace: RunTrace, delta_prime: float,
                                tol: float = SLACK_TOL) -> CheckReport:
    """``X``, ``U`` and ``Y`` all stay in the ``delta_prime`` neighbourhood of consensus."""
    parts = {}
    for name in ("consensus_err", "cons_u", "cons_y"):
        col = trace.column(name)[1:]
        parts[name] = _report(name, 1.0 - col / delta_prime, tol, "relative")
    return _merge("consensus_maintenance", parts)


def check_contraction(seq, lam: float, n_states: int = 20, rng=None, windows: int = 50,
                      dim: int = 3, tol: float = -1e-10) -> CheckReport:
    """``||W_tau^k X - mean(X)|| <= (1 - lam) ||X - mean(X)||`` on random states.

    Checks the first ``windows`` products ``W_tau^k``; slacks are absolute.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    stream = MatrixStream(seq)
    tau, n = seq.tau, seq.n
    slacks = []
    for k in range(tau - 1, tau - 1 + windows):
        P = np.eye(n)
        for t in range(k - tau + 1, k + 1):
            P = stream[t] @ P
        X = rng.standard_normal((n_states, n, dim))
        Xbar = X.mean(axis=1, keepdims=True)
        lhs = np.linalg.norm(P @ X - Xbar, axis=(1, 2))
        rhs = (1.0 - lam) * np.linalg.norm(X - Xbar, axis=(1, 2))
        slacks.append(rhs - lhs)
    return _report("contraction", np.concatenate(slacks), tol)


# ---------------------------------------------------------------------------
# serialization

def reports_to_text(reports) -> str:
    return "".join(f"{r}\n" for r in reports)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "worst_slack", "slack_kind", "n_checked", "violations", "passed"])
    for r in reports:
        w.writerow([r.name, repr(r.worst_slack), r.slack_kind, r.n_checked, r.violations,
                    "pass" if r.passed else "fail"])
    return buf.getvalue()
