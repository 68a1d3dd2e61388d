"""
Local objectives, stacked gradients and problem constants.

The global objective is ``f(x) = (1/n) sum_i f_i(x)`` and its distributed
form is ``F(X) = sum_i f_i(x_i)`` where row ``i`` of the ``n x d`` state ``X``
is agent ``i``'s copy of the parameters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy import sparse
from scipy.special import expit

__all__ = [
    "QuadraticBlock",
    "LogisticL2",
    "ProblemInstance",
    "Constants",
    "NotStronglyConvexError",
    "ConvergenceError",
    "LibsvmParseError",
    "stacked_gradient",
    "average_gradient",
    "compute_constants",
    "minimizer_oracle",
    "consensual",
    "scalar_quadratics",
    "isotropic_quadratics",
    "synthetic_least_squares",
    "synthetic_logistic",
    "parse_libsvm",
    "load_libsvm",
    "dump_libsvm",
    "partition_dataset",
]

log = logging.getLogger(__name__)


class NotStronglyConvexError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class LibsvmParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


# ---------------------------------------------------------------------------
# local functions

class QuadraticBlock:
    """``f(x) = 1/2 ||A x - b||^2 + theta/2 ||x||^2``."""

    kind = "quadratic-block"

    def __init__(self, A, b, theta: float = 0.0):
        A = np.atleast_2d(np.asarray(A.toarray() if sparse.issparse(A) else A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        if theta < 0:
            raise ValueError("theta must be nonnegative")
        self.A, self.b, self.theta = A, b, float(theta)
        self.dim = A.shape[1]
        self._gram = A.T @ A
        self._Atb = A.T @ b

    def value(self, x):
        x = np.asarray(x, dtype=float)
        r = x @ self.A.T - self.b
        return 0.5 * np.sum(r * r, axis=-1) + 0.5 * self.theta * np.sum(x * x, axis=-1)

    def gradient(self, x):
        return self._gram @ x - self._Atb + self.theta * x

    def hessian(self):
        return self._gram + self.theta * np.eye(self.dim)

    def curvature(self) -> tuple[float, float]:
        ev = np.linalg.eigvalsh(self.hessian())
        return float(ev[0]), float(ev[-1])


class LogisticL2:
    """``f(x) = (1/m) sum_j log(1 + exp(-b_j <a_j, x>)) + theta/2 ||x||^2``."""

    kind = "logistic-l2"

    def __init__(self, A, labels, theta: float):
        if theta <= 0:
            raise ValueError("logistic loss needs theta > 0")
        labels = np.asarray(labels, dtype=float).reshape(-1)
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("logistic labels must be -1 or +1")
        A = sparse.csr_matrix(A) if sparse.issparse(A) else np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != labels.shape[0]:
            raise ValueError("row/label count mismatch")
        self.A, self.labels, self.theta = A, labels, float(theta)
        self.m, self.dim = A.shape

    def _margins(self, x):
        x = np.asarray(x, dtype=float)
        z = (self.A @ x.T).T if x.ndim > 1 else self.A @ x
        return self.labels * z

    def value(self, x):
        x = np.asarray(x, dtype=float)
        loss = np.logaddexp(0.0, -self._margins(x)).mean(axis=-1)
        return loss + 0.5 * self.theta * np.sum(x * x, axis=-1)

    def gradient(self, x):
        s = expit(-self._margins(x))
        return -(self.A.T @ (self.labels * s)) / self.m + self.theta * x

    def curvature(self) -> tuple[float, float]:
        gram = self.A.T @ self.A
        gram = gram.toarray() if sparse.issparse(gram) else gram
        top = float(np.linalg.eigvalsh(gram)[-1]) if self.m else 0.0
        # sigmoid' <= 1/4
        return self.theta, self.theta + top / (4.0 * self.m)


# ---------------------------------------------------------------------------
# problem instance

@dataclass(frozen=True)
class Constants:
    mu_l: float
    L_l: float
    mu_g: float
    L_g: float

    @property
    def kappa_g(self) -> float:
        return self.L_g / self.mu_g

    @property
    def kappa_l(self) -> float:
        return self.L_l / self.mu_l

    def as_dict(self) -> dict:
        return {"mu_l": self.mu_l, "L_l": self.L_l, "mu_g": self.mu_g, "L_g": self.L_g,
                "kappa_g": self.kappa_g, "kappa_l": self.kappa_l}


@dataclass(eq=False)
class ProblemInstance:
    """The agents' local functions together with their curvature constants."""

    locals: Sequence
    constants: Constants = field(init=False)
    per_agent: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.locals = tuple(self.locals)
        if not self.locals:
            raise ValueError("need at least one agent")
        dims = {fi.dim for fi in self.locals}
        if len(dims) != 1:
            raise ValueError(f"local functions disagree on dimension: {sorted(dims)}")
        self.per_agent = np.array([fi.curvature() for fi in self.locals])
        self.constants = compute_constants(self)

    @property
    def n(self) -> int:
        return len(self.locals)

    @property
    def d(self) -> int:
        return self.locals[0].dim

    def f(self, x):
        """Global objective ``(1/n) sum_i f_i(x)``; ``x`` may be a batch of rows."""
        return sum(fi.value(x) for fi in self.locals) / self.n

    def grad_f(self, x):
        return sum(fi.gradient(x) for fi in self.locals) / self.n

    def F(self, X) -> float:
        X = np.asarray(X, dtype=float)
        return float(sum(fi.value(X[i]) for i, fi in enumerate(self.locals)))

    def is_quadratic(self) -> bool:
        return all(fi.kind == "quadratic-block" for fi in self.locals)


def _check_state(p: ProblemInstance, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != (p.n, p.d):
        raise ValueError(f"state has shape {X.shape}, expected {(p.n, p.d)}")
    return X


def consensual(x, n: int) -> np.ndarray:
    """State with every row equal to ``x``."""
    return np.tile(np.asarray(x, dtype=float).reshape(1, -1), (n, 1))


def stacked_gradient(p: ProblemInstance, X) -> np.ndarray:
    """``grad F(X)``: row ``i`` is ``grad f_i(x_i)``."""
    X = _check_state(p, X)
    return np.vstack([fi.gradient(X[i]) for i, fi in enumerate(p.locals)])


def average_gradient(p: ProblemInstance, X) -> np.ndarray:
    """Column mean of :func:`stacked_gradient`, the inexact-oracle gradient."""
    return stacked_gradient(p, X).mean(axis=0)


def compute_constants(p: ProblemInstance) -> Constants:
    """Local (min/max) and global (mean) strong convexity and smoothness."""
    curv = np.array([fi.curvature() for fi in p.locals])
    mu, L = curv[:, 0], curv[:, 1]
    bad = np.flatnonzero(mu <= 1e-12 * np.maximum(L, 1.0))
    if bad.size:
        raise NotStronglyConvexError(f"agent {int(bad[0])} is not strongly convex "
                                     f"(mu={mu[bad[0]]:.3g})")
    return Constants(float(mu.min()), float(L.max()), float(mu.mean()), float(L.mean()))


def minimizer_oracle(p: ProblemInstance, tol: float = 1e-12,
                     max_iter: int = 200_000) -> tuple[np.ndarray, float]:
    """Reference solution ``(x*, f(x*))`` of the global problem.

    Quadratic problems are solved through their normal equations. Other
    problems run centralized Nesterov acceleration (constant momentum) until
    ``||grad f|| <= tol``.
    """
    if p.is_quadratic():
        H = sum(fi.hessian() for fi in p.locals)
        rhs = sum(fi._Atb for fi in p.locals)
        x = np.linalg.solve(H, rhs)
        return x, float(p.f(x))

    c = p.constants
    L, mu = c.L_g, c.mu_g
    beta = (math.sqrt(L) - math.sqrt(mu)) / (math.sqrt(L) + math.sqrt(mu))
    x = x_prev = np.zeros(p.d)
    best = np.inf
    for it in range(max_iter):
        g_x = p.grad_f(x)
        gnorm = float(np.linalg.norm(g_x))
        best = min(best, gnorm)
        if gnorm <= tol:
            return x, float(p.f(x))
        y = x + beta * (x - x_prev)
        x_prev, x = x, y - p.grad_f(y) / L
    raise ConvergenceError(f"minimizer oracle stalled at gradient norm {best:.3e} "
                           f"after {max_iter} iterations")


# ---------------------------------------------------------------------------
# generators

def isotropic_quadratics(a, centers) -> ProblemInstance:
    """``f_i(x) = a_i/2 ||x - c_i||^2`` for rows ``c_i`` of ``centers``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    centers = np.asarray(centers, dtype=float)
    if centers.ndim == 1:
        centers = centers[:, None]
    d = centers.shape[1]
    return ProblemInstance([QuadraticBlock(math.sqrt(ai) * np.eye(d), math.sqrt(ai) * ci)
                            for ai, ci in zip(a, centers)])


def scalar_quadratics(a, c) -> ProblemInstance:
    """One-dimensional ``f_i(x) = a_i/2 (x - c_i)^2``."""
    return isotropic_quadratics(a, np.asarray(c, dtype=float)[:, None])


def synthetic_least_squares(n: int, d: int, kappa_g: float, seed: int = 0,
                            mu_g: float = 1.0, spread: float = 0.0,
                            heterogeneity: float = 1.0, noise: float = 0.1) -> ProblemInstance:
    """Least-squares agents ``f_i(x) = 1/2 ||A_i x - b_i||^2`` with ``L_g / mu_g = kappa_g``.

    All ``A_i^T A_i`` share one eigenbasis with log-spaced spectra from
    ``mu_i`` to ``L_i``, so the Hessian of ``f`` has extreme eigenvalues exactly
    ``mu_g`` and ``L_g``. ``spread`` is the log-normal scale of the per-agent
    ``mu_i`` and ``L_i`` around their means; raising it makes ``kappa_l`` much
    larger than ``kappa_g``. ``heterogeneity`` controls how far the agents'
    own minimizers are from each other.
    """
    if kappa_g < 1:
        raise ValueError("kappa_g must be >= 1")
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    w = np.exp(spread * rng.standard_normal(n))
    v = np.exp(spread * rng.standard_normal(n))
    mus = mu_g * w / w.mean()
    Ls = kappa_g * mu_g * v / v.mean()
    if np.any(mus > Ls):
        raise ValueError("spread too large for kappa_g: some agent has mu_i > L_i")
    center = rng.standard_normal(d)
    locals_ = []
    for i in range(n):
        spec = np.geomspace(mus[i], Ls[i], d) if d > 1 else np.array([mus[i]])
        A = np.sqrt(spec)[:, None] * Q.T
        z = center + heterogeneity * rng.standard_normal(d)
        b = A @ z + noise * rng.standard_normal(d)
        locals_.append(QuadraticBlock(A, b))
    return ProblemInstance(locals_)


def synthetic_logistic(n: int, d: int, rows_per_agent: int = 50, theta: float = 0.1,
                       seed: int = 0) -> ProblemInstance:
    """Logistic agents on Gaussian features with labels from a random linear model."""
    rng = np.random.default_rng(seed)
    w_true = rng.standard_normal(d)
    locals_ = []
    for _ in range(n):
        A = rng.standard_normal((rows_per_agent, d)) / math.sqrt(d)
        p = expit(A @ w_true * 3.0)
        y = np.where(rng.random(rows_per_agent) < p, 1.0, -1.0)
        locals_.append(LogisticL2(A, y, theta))
    return ProblemInstance(locals_)


# ---------------------------------------------------------------------------
# LIBSVM text format

def _parse_label(tok: str, lineno: int, binary: bool) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise LibsvmParseError(lineno, f"bad label {tok!r}") from None
    if not math.isfinite(v):
        raise LibsvmParseError(lineno, f"non-finite label {tok!r}")
    if not binary:
        return v
    if v == 1.0:
        return 1.0
    if v in (-1.0, 0.0):
        return -1.0
    raise LibsvmParseError(lineno, f"label {tok!r} is not binary (+1/-1 or 1/0)")


def parse_libsvm(stream: TextIO | Iterable[str] | str, n_features: int | None = None,
                 binary: bool = True) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Read LIBSVM sparse text.

    Each non-blank line is ``label idx:val idx:val ...`` with 1-based, strictly
    increasing indices. Text after ``#`` is ignored. With ``binary=True``
    labels are mapped to ``{-1, +1}`` (``0`` becomes ``-1``).

    Returns
    -------
    rows : scipy.sparse.csr_matrix
        ``m x d`` matrix; ``d`` is the largest index seen unless
        ``n_features`` is given.
    labels : ndarray
    """
    if isinstance(stream, str):
        stream = stream.splitlines()
    labels, indptr, indices, data = [], [0], [], []
    max_idx = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if ":" in toks[0]:
            raise LibsvmParseError(lineno, "missing label")
        labels.append(_parse_label(toks[0], lineno, binary))
        prev = 0
        for tok in toks[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise LibsvmParseError(lineno, f"expected idx:val, got {tok!r}")
            try:
                idx = int(idx_s)
            except ValueError:
                raise LibsvmParseError(lineno, f"bad index {idx_s!r}") from None
            try:
                val = float(val_s)
            except ValueError:
                raise LibsvmParseError(lineno, f"bad value {val_s!r}") from None
            if not math.isfinite(val):
                raise LibsvmParseError(lineno, f"non-finite value {val_s!r}")
            if idx < 1:
                raise LibsvmParseError(lineno, f"index {idx} < 1")
            if idx <= prev:
                raise LibsvmParseError(lineno, f"index {idx} not increasing after {prev}")
            prev = idx
            indices.append(idx - 1)
            data.append(val)
        max_idx = max(max_idx, prev)
        indptr.append(len(indices))
    d = max_idx if n_features is None else n_features
    if d < max_idx:
        raise ValueError(f"n_features={d} but index {max_idx} present")
    rows = sparse.csr_matrix((np.array(data, dtype=float), np.array(indices, dtype=np.int64),
                              np.array(indptr, dtype=np.int64)), shape=(len(labels), d))
    return rows, np.array(labels, dtype=float)


def load_libsvm(path, **kwargs):
    with open(path, encoding="utf-8") as fh:
        return parse_libsvm(fh, **kwargs)


def dump_libsvm(rows, labels) -> str:
    """Inverse of :func:`parse_libsvm` for well-formed input (explicit zeros dropped)."""
    rows = sparse.csr_matrix(rows)
    rows.sort_indices()
    out = []
    for i, lab in enumerate(np.asarray(labels, dtype=float)):
        lo, hi = rows.indptr[i], rows.indptr[i + 1]
        lab_s = "+1" if lab == 1.0 else "-1" if lab == -1.0 else repr(float(lab))
        feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in zip(rows.indices[lo:hi], rows.data[lo:hi])
                         if v != 0.0)
        out.append(f"{lab_s} {feats}".rstrip() + "\n")
    return "".join(out)


def partition_dataset(rows, labels, n: int, scheme: str = "contiguous", seed: int = 0,
                      kind: str = "logistic", theta: float = 0.0) -> list:
    """Split rows among ``n`` agents with sizes differing by at most one.

    ``kind="logistic"`` builds :class:`LogisticL2` locals, ``"least-squares"``
    builds :class:`QuadraticBlock` locals with ``labels`` as targets.
    """
    m = rows.shape[0]
    if n < 1 or n > m:
        raise ValueError(f"cannot split {m} rows among {n} agents")
    if scheme == "contiguous":
        order = np.arange(m)
    elif scheme == "shuffled":
        order = np.random.default_rng(seed).permutation(m)
    else:
        raise ValueError(f"unknown partition scheme {scheme!r}")
    labels = np.asarray(labels, dtype=float)
    locals_ = []
    for part in np.array_split(order, n):
        A = rows[part]
        if kind == "logistic":
            locals_.append(LogisticL2(A, labels[part], theta))
        elif kind == "least-squares":
            locals_.append(QuadraticBlock(A, labels[part], theta))
        else:
            raise ValueError(f"unknown local kind {kind!r}")
    return locals_
