"""
Time-varying communication graphs.

A :class:`GraphSequence` is a random-access stream of undirected edge sets
``E^0, E^1, ...`` over a fixed vertex set ``{0, ..., n-1}``. Every draw is a
pure function of ``(seed, k)`` so that long runs can be replayed from any
step without walking the stream from the start.

Supported kinds
---------------
static
    One fixed edge set (complete, ring, path, star or an explicit list).
random-geometric
    Static graph obtained from points in the unit square.
per-step-connected
    A fresh random connected graph at every step.
tau-connected
    The edges of a connected base graph split into ``tau`` groups that are
    activated cyclically, so any ``tau`` consecutive steps cover the base
    graph. Optional random extra edges may be sprinkled on top.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = [
    "EdgeSet",
    "GraphSequence",
    "GraphGenerationError",
    "KINDS",
    "static",
    "complete_graph",
    "ring_graph",
    "path_graph",
    "star_graph",
    "per_step_connected",
    "tau_connected",
    "random_geometric",
    "edge_set_at",
    "is_connected",
    "is_union_connected",
    "dump_adjacency",
]

KINDS = ("static", "per-step-connected", "tau-connected", "random-geometric")


class GraphGenerationError(RuntimeError):
    """Raised when a requested graph cannot be generated."""


@dataclass(frozen=True)
class EdgeSet:
    """Undirected simple graph on ``n`` vertices.

    Edges are stored as sorted ``(i, j)`` pairs with ``i < j``.
    """

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        norm = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge {(i, j)} out of range for n={self.n}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable) -> "EdgeSet":
        return cls(n, frozenset(tuple(p) for p in pairs))

    def __len__(self):
        return len(self.edges)

    def __contains__(self, pair):
        i, j = pair
        return (min(i, j), max(i, j)) in self.edges

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = True
        return adj

    def union(self, other: "EdgeSet") -> "EdgeSet":
        if other.n != self.n:
            raise ValueError("vertex counts differ")
        return EdgeSet(self.n, self.edges | other.edges)


@dataclass(frozen=True)
class GraphSequence:
    """Deterministic, seedable stream of edge sets.

    Build instances through the factory functions (:func:`static`,
    :func:`tau_connected`, ...) rather than directly.

    Attributes
    ----------
    n : int
        Number of agents.
    kind : str
        One of :data:`KINDS`.
    tau : int
        Connectivity window: every ``tau`` consecutive edge sets have a
        connected union (1 for static and per-step-connected kinds).
    seed : int
        Root seed of the stream.
    base : EdgeSet or None
        The fixed graph for static kinds, the covering base graph for
        ``tau-connected``.
    groups : tuple of EdgeSet
        Cyclic edge groups for ``tau-connected``.
    extra_prob : float
        Probability of each non-base pair being added at a given step
        (``tau-connected`` and ``per-step-connected`` only).
    params : tuple
        Kind-specific parameters kept for bookkeeping, as sorted
        ``(name, value)`` pairs.
    """

    n: int
    kind: str
    tau: int = 1
    seed: int = 0
    base: EdgeSet | None = None
    groups: tuple = ()
    extra_prob: float = 0.0
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if not 0.0 <= self.extra_prob <= 1.0:
            raise ValueError("extra_prob must lie in [0, 1]")

    @property
    def period(self) -> int | None:
        """Period of the stream, or None if it never repeats."""
        if self.kind in ("static", "random-geometric"):
            return 1
        if self.kind == "tau-connected" and self.extra_prob == 0.0:
            return self.tau
        return None

    def edge_set_at(self, k: int) -> EdgeSet:
        return edge_set_at(self, k)

    def describe(self) -> dict:
        out = {"n": self.n, "kind": self.kind, "tau": self.tau, "seed": self.seed}
        if self.extra_prob:
            out["extra_prob"] = self.extra_prob
        out.update(dict(self.params))
        return out


def _rng(seed: int, *key: int) -> np.random.Generator:
    # counter-based: (seed, key...) -> independent stream, random access in k
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


# ---------------------------------------------------------------------------
# deterministic topologies

def complete_graph(n: int) -> EdgeSet:
    return EdgeSet(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))


def ring_graph(n: int) -> EdgeSet:
    if n < 3:
        return path_graph(n)
    return EdgeSet(n, frozenset((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> EdgeSet:
    return EdgeSet(n, frozenset((i, i + 1) for i in range(n - 1)))


def star_graph(n: int) -> EdgeSet:
    return EdgeSet(n, frozenset((0, i) for i in range(1, n)))


_TOPOLOGIES = {
    "complete": complete_graph,
    "ring": ring_graph,
    "path": path_graph,
    "star": star_graph,
}


def _ring_order(n: int) -> list[tuple[int, int]]:
    # ring edges in walk order; the cyclic split of this order into tau groups
    # gives alternating matchings for even n
    if n < 2:
        return []
    if n == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n) for i in range(n)]


def _random_connected(n: int, extra_prob: float, rng: np.random.Generator) -> EdgeSet:
    """Random spanning tree (random attachment) plus Bernoulli extra edges."""
    if n <= 1:
        return EdgeSet(n)
    perm = rng.permutation(n)
    edges = set()
    for pos in range(1, n):
        parent = perm[rng.integers(pos)]
        edges.add((int(parent), int(perm[pos])))
    if extra_prob > 0:
        iu, ju = np.triu_indices(n, k=1)
        keep = rng.random(iu.size) < extra_prob
        edges.update(zip(iu[keep].tolist(), ju[keep].tolist()))
    return EdgeSet.from_pairs(n, edges)


# ---------------------------------------------------------------------------
# factories

def static(n: int, topology: str | Iterable = "complete", seed: int = 0) -> GraphSequence:
    """Time-static sequence repeating one edge set.

    ``topology`` is a name from ``complete``, ``ring``, ``path``, ``star`` or an
    explicit iterable of ``(i, j)`` pairs.
    """
    if isinstance(topology, str):
        try:
            base = _TOPOLOGIES[topology](n)
        except KeyError:
            raise ValueError(f"unknown topology {topology!r}") from None
        params = (("topology", topology),)
    else:
        base = EdgeSet.from_pairs(n, topology)
        params = (("topology", "explicit"),)
    return GraphSequence(n=n, kind="static", tau=1, seed=seed, base=base, params=params)


def per_step_connected(n: int, seed: int = 0, extra_prob: float = 0.1) -> GraphSequence:
    """Every step draws an independent random connected graph."""
    return GraphSequence(n=n, kind="per-step-connected", tau=1, seed=seed, extra_prob=extra_prob)


def tau_connected(n: int, tau: int, seed: int = 0, base: str | EdgeSet = "random",
                  base_extra_prob: float = 0.1, extra_prob: float = 0.0) -> GraphSequence:
    """Cyclic partition of a connected base graph into ``tau`` edge groups.

    Parameters
    ----------
    n : int
        Number of agents.
    tau : int
        Window length. ``E^k`` contains group ``k mod tau``, so the union over
        any ``tau`` consecutive steps is the whole base graph.
    seed : int
        Root seed.
    base : {"random", "ring"} or EdgeSet
        Base graph. ``"ring"`` keeps walk order, so for even ``n`` and
        ``tau=2`` the groups are the two perfect matchings of the ring.
        ``"random"`` draws a random connected graph and shuffles its edges.
    base_extra_prob : float
        Extra edge probability for the random base graph.
    extra_prob : float
        Probability of adding each further pair at each step. Extra edges
        only help connectivity.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if isinstance(base, EdgeSet):
        if base.n != n:
            raise ValueError("base graph has wrong vertex count")
        base_set, order, label = base, base.sorted_edges(), "explicit"
    elif base == "ring":
        order = _ring_order(n)
        base_set, label = EdgeSet.from_pairs(n, order), "ring"
    elif base == "random":
        rng = _rng(seed, 0xBA5E)
        base_set = _random_connected(n, base_extra_prob, rng)
        order = base_set.sorted_edges()
        order = [order[i] for i in rng.permutation(len(order))]
        label = "random"
    else:
        raise ValueError(f"unknown base graph {base!r}")
    if n > 1 and not is_connected(base_set):
        raise GraphGenerationError("base graph is not connected")
    buckets = [[] for _ in range(tau)]
    for idx, e in enumerate(order):
        buckets[idx % tau].append(e)
    groups = tuple(EdgeSet.from_pairs(n, b) for b in buckets)
    return GraphSequence(n=n, kind="tau-connected", tau=tau, seed=seed, base=base_set,
                         groups=groups, extra_prob=extra_prob,
                         params=(("base", label), ("base_extra_prob", base_extra_prob)))


def random_geometric(n: int, radius: float, seed: int = 0, max_retries: int = 100) -> GraphSequence:
    """Static random geometric graph in the unit square.

    Points are drawn uniformly; pairs at Euclidean distance ``<= radius`` are
    joined. Disconnected draws are discarded and redrawn with the next
    sub-seed, at most ``max_retries`` times.

    Raises
    ------
    GraphGenerationError
        If no connected graph was found within the retry budget.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if radius <= 0:
        raise ValueError("radius must be positive")
    for attempt in range(max_retries):
        pts = _rng(seed, 0x6E0, attempt).random((n, 2))
        dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        iu, ju = np.triu_indices(n, k=1)
        keep = dist[iu, ju] <= radius
        es = EdgeSet.from_pairs(n, zip(iu[keep].tolist(), ju[keep].tolist()))
        if is_connected(es):
            return GraphSequence(n=n, kind="random-geometric", tau=1, seed=seed, base=es,
                                 params=(("attempt", attempt), ("radius", float(radius))))
    raise GraphGenerationError(
        f"could not generate connected geometric graph (n={n}, radius={radius}, "
        f"{max_retries} attempts)")


# ---------------------------------------------------------------------------
# queries

def edge_set_at(seq: GraphSequence, k: int) -> EdgeSet:
    """The ``k``-th edge set of ``seq``; a pure function of ``(seq, k)``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if seq.kind in ("static", "random-geometric"):
        return seq.base
    if seq.kind == "per-step-connected":
        return _random_connected(seq.n, seq.extra_prob, _rng(seq.seed, 1, k))
    # tau-connected
    es = seq.groups[k % seq.tau]
    if seq.extra_prob > 0 and seq.n > 1:
        rng = _rng(seq.seed, 2, k)
        iu, ju = np.triu_indices(seq.n, k=1)
        keep = rng.random(iu.size) < seq.extra_prob
        if keep.any():
            es = es.union(EdgeSet.from_pairs(seq.n, zip(iu[keep].tolist(), ju[keep].tolist())))
    return es


def is_connected(es: EdgeSet) -> bool:
    """Breadth-first search connectivity test."""
    if es.n <= 1:
        return True
    nbrs = [[] for _ in range(es.n)]
    for i, j in es.edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in nbrs[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == es.n


def is_union_connected(seq: GraphSequence, k: int, tau: int) -> bool:
    """True iff ``E^k ∪ ... ∪ E^{k+tau-1}`` is connected."""
    if k < 0 or tau < 1:
        raise ValueError("need k >= 0 and tau >= 1")
    union = EdgeSet(seq.n)
    for t in range(k, k + tau):
        union = union.union(edge_set_at(seq, t))
    return is_connected(union)


def dump_adjacency(es: EdgeSet) -> str:
    """Text adjacency list, one ``"i j"`` pair per line."""
    return "".join(f"{i} {j}\n" for i, j in es.sorted_edges())
