"""
Multi-step gossip averaging with communication accounting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import GraphSequence
from .mixing import MatrixStream

__all__ = ["ConsensusCounter", "consensus", "consensus_error", "as_stream"]


@dataclass
class ConsensusCounter:
    """Cumulative number of gossip rounds.

    ``rounds_total`` is also the index of the next mixing matrix to use, so a
    single counter threads the time-varying sequence through a whole run.
    """

    rounds_total: int = 0
    per_call: list = field(default_factory=list)

    def record(self, t_rounds: int):
        self.per_call.append(int(t_rounds))
        self.rounds_total += int(t_rounds)


def as_stream(matrices) -> MatrixStream:
    if isinstance(matrices, GraphSequence):
        return MatrixStream(matrices)
    return matrices


def consensus(X, t_rounds: int, matrices, start: int | None = None,
              counter: ConsensusCounter | None = None) -> np.ndarray:
    """Apply ``t_rounds`` gossip rounds: ``W^{s+T-1} ... W^{s} X``.

    Parameters
    ----------
    X : ndarray, shape (n, d)
        Stacked agent states.
    t_rounds : int
        Number of rounds ``T >= 0``.
    matrices : GraphSequence, MatrixStream or sequence of ndarray
        Anything indexable by the global round number ``k``, returning ``W^k``.
    start : int, optional
        Global index ``s`` of the first round. Defaults to
        ``counter.rounds_total`` (or 0 without a counter).
    counter : ConsensusCounter, optional
        Incremented by ``t_rounds``.

    Returns
    -------
    ndarray
        The mixed state. The input is not modified.
    """
    if t_rounds < 0:
        raise ValueError("t_rounds must be >= 0")
    X = np.array(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    stream = as_stream(matrices)
    if start is None:
        start = counter.rounds_total if counter is not None else 0
    for k in range(start, start + t_rounds):
        W = stream[k]
        if W.shape != (X.shape[0], X.shape[0]):
            raise ValueError(f"mixing matrix {W.shape} does not match {X.shape[0]} agents")
        X = W @ X
    if counter is not None:
        counter.record(t_rounds)
    return X


def consensus_error(X) -> float:
    """Squared Frobenius distance ``||X - mean(X)||^2`` to the consensus subspace."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    D = X - X.mean(axis=0, keepdims=True)
    return float(np.sum(D * D))
