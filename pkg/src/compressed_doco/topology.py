"""Communication graphs and gossip (mixing) matrices.

A :class:`GossipMatrix` is a dense symmetric doubly stochastic matrix
supported on a :class:`Graph`, together with its spectral quantities:

* ``sigma2`` -- second largest singular value,
* ``rho = 1 - sigma2`` -- the spectral gap,
* ``beta = ||I - W||_2``.

Example:
    >>> g = build_topology("cycle", 4)
    >>> p = max_degree_weights(g)
    >>> round(p.sigma2, 12), round(p.beta, 12)
    (0.333333333333, 1.333333333333)
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMatrix, InvalidSize

__all__ = [
    "TOPOLOGIES",
    "Graph",
    "GossipMatrix",
    "build_topology",
    "max_degree_weights",
    "lazify",
    "spectral_quantities",
    "gossip_matrix",
]

TOPOLOGIES = ("cycle", "complete", "path", "grid2d")

PSD_TOL = 1e-10
STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    Edges are stored once as ``(i, j)`` with ``i < j``; self-communication is
    implicit in the mixing matrix and never stored.
    """

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidSize(f"graph needs n >= 1, got {self.n}")
        for i, j in self.edges:
            if not (0 <= i < j < self.n):
                raise InvalidSize(f"edge {(i, j)} is not a normalized pair in [0, {self.n})")

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "Graph":
        norm = set()
        for i, j in pairs:
            if i == j:
                continue
            norm.add((min(i, j), max(i, j)))
        return cls(n, frozenset(norm))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def neighbors(self, i: int) -> list[int]:
        """Immediate neighbors of ``i`` (excluding ``i`` itself), ascending."""
        out = [b if a == i else a for a, b in self.edges if i in (a, b)]
        return sorted(out)

    def is_connected(self) -> bool:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == self.n

    def hops_from(self, source: int) -> np.ndarray:
        """Breadth-first hop distance from ``source`` to every node."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        dist = np.full(self.n, -1, dtype=int)
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist


def build_topology(kind: str, n: int) -> Graph:
    """Build one of the named topologies on ``n`` nodes."""
    if n < 2:
        raise InvalidSize(f"topology needs n >= 2, got {n}")
    if kind == "cycle":
        pairs = [(i, (i + 1) % n) for i in range(n)]
    elif kind == "complete":
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif kind == "path":
        pairs = [(i, i + 1) for i in range(n - 1)]
    elif kind == "grid2d":
        side = math.isqrt(n)
        if side * side != n:
            raise InvalidSize(f"grid2d needs a perfect square n, got {n}")
        pairs = []
        for r in range(side):
            for c in range(side):
                k = r * side + c
                if c + 1 < side:
                    pairs.append((k, k + 1))
                if r + 1 < side:
                    pairs.append((k, k + side))
    else:
        raise InvalidSize(f"unknown topology {kind!r}; expected one of {TOPOLOGIES}")
    return Graph.from_pairs(n, pairs)


def spectral_quantities(p: np.ndarray) -> tuple[float, float, float]:
    """Return ``(sigma2, rho, beta)`` of a symmetric matrix.

    Uses a dense symmetric eigensolver; for symmetric ``p`` the singular
    values are the absolute eigenvalues.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {p.shape}")
    if not np.array_equal(p, p.T):
        raise InvalidMatrix("matrix is not symmetric")
    n = p.shape[0]
    lam = np.linalg.eigvalsh(p)
    sv = np.sort(np.abs(lam))[::-1]
    sigma2 = float(sv[1]) if n > 1 else 0.0
    beta = float(np.max(np.abs(1.0 - lam)))
    return sigma2, 1.0 - sigma2, beta


@dataclass(frozen=True)
class GossipMatrix:
    """Symmetric doubly stochastic mixing matrix with cached spectral data."""

    w: np.ndarray = field(repr=False)
    sigma2: float
    rho: float
    beta: float
    psd_enforced: bool = False
    graph: Graph | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @classmethod
    def from_array(cls, w, *, psd_enforced=False, graph=None) -> "GossipMatrix":
        w = np.array(w, dtype=float)
        w.setflags(write=False)
        sigma2, rho, beta = spectral_quantities(w)
        return cls(w, sigma2, rho, beta, psd_enforced, graph)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.w)[0])

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return self.min_eigenvalue() >= -tol

    def check(self) -> None:
        """Raise :class:`InvalidMatrix` if any structural invariant fails."""
        w = self.w
        if not np.array_equal(w, w.T):
            raise InvalidMatrix("gossip matrix is not symmetric")
        if np.max(np.abs(w.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
            raise InvalidMatrix("row sums deviate from 1")
        if np.max(np.abs(w.sum(axis=0) - 1.0)) > STOCHASTIC_TOL:
            raise InvalidMatrix("column sums deviate from 1")
        if self.graph is not None:
            allowed = self.graph.adjacency() + np.eye(self.n)
            if np.any((w > 0) & (allowed == 0)):
                raise InvalidMatrix("matrix has weight off the graph support")
        if self.psd_enforced and not self.is_psd():
            raise InvalidMatrix("PSD-enforced matrix has a negative eigenvalue")


def max_degree_weights(g: Graph) -> GossipMatrix:
    """``W = I - (Deg - A) / (deg_max + 1)`` for a connected graph."""
    if not g.is_connected():
        raise InvalidSize("graph is not connected")
    a = g.adjacency()
    deg = a.sum(axis=1)
    lap = np.diag(deg) - a
    w = np.eye(g.n) - lap / (deg.max() + 1.0)
    return GossipMatrix.from_array(w, graph=g)


def lazify(p: GossipMatrix) -> GossipMatrix:
    """``(I + W) / 2``: maps each eigenvalue ``l`` to ``(1 + l) / 2 >= 0``."""
    w = (np.eye(p.n) + p.w) / 2.0
    return GossipMatrix.from_array(w, psd_enforced=True, graph=p.graph)


def gossip_matrix(kind: str, n: int, *, lazy: bool = True) -> GossipMatrix:
    """Max-degree gossip matrix of a named topology, lazified by default."""
    p = max_degree_weights(build_topology(kind, n))
    return lazify(p) if lazy else p
