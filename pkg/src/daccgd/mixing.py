"""
Gossip mixing matrices and their contraction parameters.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .graphs import EdgeSet, GraphSequence, edge_set_at

__all__ = [
    "MixingMatrix",
    "ContractionEstimate",
    "MixingReport",
    "NotContractingError",
    "metropolis_weights",
    "verify_mixing",
    "deviation_norm",
    "second_singular_value",
    "contraction_factor_static",
    "estimate_contraction",
    "MatrixStream",
    "dump_csv",
]


class NotContractingError(ValueError):
    """Raised when a graph sequence shows no contraction over a window."""


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """Dense gossip matrix ``W`` built for one edge set."""

    W: np.ndarray
    source_edges: EdgeSet | None = None

    @property
    def n(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True)
class ContractionEstimate:
    """Measured ``(tau, lambda)`` pair with ``chi = tau / lambda``."""

    tau: int
    lam: float

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0 + 1e-12:
            raise ValueError(f"lambda={self.lam} outside (0, 1]")

    @property
    def chi(self) -> float:
        return self.tau / self.lam


@dataclass
class MixingReport:
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def failures(self) -> list[str]:
        return [name for name, (ok, _) in self.checks.items() if not ok]

    def __str__(self):
        lines = [f"{name:<16} {'pass' if ok else 'FAIL'}  worst={worst:.3e}"
                 for name, (ok, worst) in self.checks.items()]
        return "\n".join(lines)


def metropolis_weights(es: EdgeSet) -> MixingMatrix:
    """Metropolis weights ``w_ij = 1 / (1 + max(d_i, d_j))`` on edges.

    Diagonal entries absorb the remaining row mass. An empty edge set gives the
    identity.
    """
    n = es.n
    deg = es.degrees()
    W = np.zeros((n, n))
    for i, j in es.edges:
        W[i, j] = W[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    W[np.diag_indices(n)] = 1.0 - W.sum(axis=1)
    return MixingMatrix(W, es)


def verify_mixing(w: MixingMatrix | np.ndarray, tol: float = 1e-12,
                  edges: EdgeSet | None = None) -> MixingReport:
    """Check the gossip-matrix requirements without raising.

    Checks row sums, column sums, nonnegativity and, when an edge set is
    known, that off-edge entries are exactly zero.
    """
    if isinstance(w, MixingMatrix):
        W, edges = w.W, edges if edges is not None else w.source_edges
    else:
        W = np.asarray(w, dtype=float)
    n = W.shape[0]
    ones = np.ones(n)
    rep = MixingReport()
    row = np.abs(W @ ones - 1).max(initial=0.0)
    col = np.abs(ones @ W - 1).max(initial=0.0)
    rep.checks["row_sums"] = (row <= tol, float(row))
    rep.checks["column_sums"] = (col <= tol, float(col))
    neg = max(0.0, -W.min(initial=0.0))
    rep.checks["nonnegative"] = (neg == 0.0, float(neg))
    if edges is not None:
        mask = ~edges.adjacency()
        mask[np.diag_indices(n)] = False
        off = np.abs(W[mask]).max(initial=0.0)
        rep.checks["decentralized"] = (off == 0.0, float(off))
    return rep


def deviation_norm(M: np.ndarray) -> float:
    """Spectral norm of ``M - (1/n) 1 1^T``."""
    n = M.shape[0]
    return float(np.linalg.norm(M - np.full((n, n), 1.0 / n), 2))


def second_singular_value(W: np.ndarray, method: str = "svd", tol: float = 1e-10,
                          max_iter: int = 10_000, seed: int = 0) -> float:
    """Largest singular value of ``W`` on the complement of the consensus direction.

    For doubly stochastic ``W`` this equals the second largest singular value.

    ``method="power"`` runs power iteration on ``M^T M`` with
    ``M = W - (1/n) 1 1^T``; ``method="svd"`` uses a dense SVD.
    """
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    if n == 1:
        return 0.0
    M = W - np.full((n, n), 1.0 / n)
    if method == "svd":
        return float(np.linalg.svd(M, compute_uv=False)[0])
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    sigma2 = 0.0
    for _ in range(max_iter):
        z = M.T @ (M @ v)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        v_new = z / nz
        # Rayleigh quotient on M^T M
        new = float(v_new @ (M.T @ (M @ v_new)))
        if abs(new - sigma2) <= tol * max(1.0, new):
            sigma2 = new
            break
        sigma2, v = new, v_new
    return float(np.sqrt(max(sigma2, 0.0)))


def contraction_factor_static(w: MixingMatrix | np.ndarray) -> float:
    """``lambda = 1 - sigma_2(W)`` for a time-static graph."""
    W = w.W if isinstance(w, MixingMatrix) else np.asarray(w, dtype=float)
    if W.size == 0:
        raise ValueError("empty matrix")
    return 1.0 - second_singular_value(W)


class MatrixStream:
    """Metropolis matrices ``W^k`` of a graph sequence with per-period caching."""

    def __init__(self, seq: GraphSequence, cache_size: int = 64):
        self.seq = seq
        self.n = seq.n
        self._period = seq.period
        self._cache: dict[int, np.ndarray] = {}
        self._cache_size = cache_size

    def __getitem__(self, k: int) -> np.ndarray:
        key = k % self._period if self._period else k
        W = self._cache.get(key)
        if W is None:
            W = metropolis_weights(edge_set_at(self.seq, k)).W
            if self._period or len(self._cache) < self._cache_size:
                self._cache[key] = W
            W.flags.writeable = False
        return W


def estimate_contraction(seq: GraphSequence, tau: int | None = None,
                         horizon: int = 200) -> ContractionEstimate:
    """Measure the contraction factor of ``seq`` over a finite horizon.

    Forms ``W_tau^k = W^k ... W^{k-tau+1}`` for ``k = tau-1, ..., horizon-1``
    and returns ``lambda = 1 - max_k ||W_tau^k - (1/n) 1 1^T||_2``.

    Raises
    ------
    NotContractingError
        If ``lambda <= 0`` over the horizon.
    """
    tau = seq.tau if tau is None else tau
    if tau < 1 or horizon < tau:
        raise ValueError("need tau >= 1 and horizon >= tau")
    if seq.n == 1:
        return ContractionEstimate(tau, 1.0)
    stream = MatrixStream(seq)
    last = horizon - 1
    if seq.period:
        # periodic streams: one window per phase is enough
        last = min(last, tau - 1 + seq.period - 1)
    worst = 0.0
    for k in range(tau - 1, last + 1):
        P = np.eye(seq.n)
        for t in range(k - tau + 1, k + 1):
            P = stream[t] @ P
        worst = max(worst, deviation_norm(P))
    lam = 1.0 - worst
    # rounding in products of averaging matrices can push sigma slightly below 0
    if lam <= 1e-12:
        raise NotContractingError(f"sequence not contracting at window tau={tau} "
                                  f"(sigma_max={worst:.6g})")
    return ContractionEstimate(tau, min(lam, 1.0))


def dump_csv(w: MixingMatrix | np.ndarray) -> str:
    """Matrix as CSV text, one row per line."""
    W = w.W if isinstance(w, MixingMatrix) else np.asarray(w)
    buf = io.StringIO()
    np.savetxt(buf, W, delimiter=",", fmt="%.17g")
    return buf.getvalue()
