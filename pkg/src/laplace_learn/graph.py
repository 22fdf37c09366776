"""Undirected topologies, standard generators and the weighted Laplacian map.

Nodes are 0-based here. Edges are stored once, as ``(min, max)`` pairs in
lexicographic order; that order is also the solver's sweep order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from laplace_learn.errors import InvalidParameterError

GRAPH_KINDS = ("path", "star", "grid", "complete")


@dataclass(frozen=True)
class Topology:
    """Node count plus a canonical undirected edge set."""

    p: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.p < 1:
            raise InvalidParameterError(f"node count must be positive, got {self.p}")
        canon = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise InvalidParameterError(f"self-loop at node {i}")
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise InvalidParameterError(f"edge ({i}, {j}) out of range for p={self.p}")
            e = (min(i, j), max(i, j))
            if e in canon:
                raise InvalidParameterError(f"duplicate edge {e}")
            canon.add(e)
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @classmethod
    def from_pairs(cls, p, pairs):
        return cls(p, tuple(tuple(e) for e in pairs))

    @property
    def m(self) -> int:
        return len(self.edges)

    def index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint arrays ``(I, J)`` aligned with ``edges``."""
        if not self.edges:
            return np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp)
        arr = np.asarray(self.edges, dtype=np.intp)
        return arr[:, 0], arr[:, 1]

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: k for k, e in enumerate(self.edges)}

    def without(self, *drop) -> "Topology":
        gone = {(min(i, j), max(i, j)) for i, j in drop}
        return Topology(self.p, tuple(e for e in self.edges if e not in gone))

    def is_tree(self) -> bool:
        return self.m == self.p - 1 and is_connected(self)


def make_graph(kind: str, p: int) -> Topology:
    """Build one of the canonical topologies ``path``, ``star``, ``grid``, ``complete``.

    Grid node ``(r, c)`` maps to index ``r * sqrt(p) + c``.
    """
    if kind not in GRAPH_KINDS:
        raise InvalidParameterError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")
    if p < 2:
        raise InvalidParameterError(f"need p >= 2, got {p}")
    if kind == "path":
        edges = [(i, i + 1) for i in range(p - 1)]
    elif kind == "star":
        edges = [(0, i) for i in range(1, p)]
    elif kind == "complete":
        edges = list(combinations(range(p), 2))
    else:
        side = math.isqrt(p)
        if side * side != p:
            raise InvalidParameterError(f"grid needs a perfect square p, got {p}")
        edges = []
        for r in range(side):
            for c in range(side):
                k = r * side + c
                if c + 1 < side:
                    edges.append((k, k + 1))
                if r + 1 < side:
                    edges.append((k, k + side))
    return Topology(p, tuple(edges))


def components(t: Topology) -> np.ndarray:
    """Component label per node."""
    if t.m == 0:
        return np.arange(t.p)
    I, J = t.index_arrays()
    adj = coo_matrix((np.ones(t.m), (I, J)), shape=(t.p, t.p))
    _, labels = connected_components(adj, directed=False)
    return labels


def is_connected(t: Topology) -> bool:
    if t.p == 1:
        return True
    return bool(np.all(components(t) == components(t)[0]))


def edge_vector(p: int, e: tuple[int, int]) -> np.ndarray:
    """Incidence vector with +1 at the first endpoint and -1 at the second."""
    g = np.zeros(p)
    g[e[0]] = 1.0
    g[e[1]] = -1.0
    return g


def laplacian_from_weights(t: Topology, w) -> np.ndarray:
    """Dense combinatorial Laplacian ``sum_e w_e g_e g_e^T``."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape[0] != t.m:
        raise InvalidParameterError(f"expected {t.m} weights, got {w.shape[0]}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidParameterError("edge weights must be finite and nonnegative")
    L = np.zeros((t.p, t.p))
    I, J = t.index_arrays()
    L[I, J] = -w
    L[J, I] = -w
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


def weights_from_laplacian(L: np.ndarray, t: Topology | None = None, tol: float = 0.0):
    """Recover ``(topology, weights)`` from a dense Laplacian.

    With ``t`` given, weights are read on its edges (zeros allowed). Otherwise
    the support is every pair with ``-L_ij > tol``.
    """
    L = np.asarray(L, dtype=float)
    p = L.shape[0]
    if t is None:
        iu, ju = np.triu_indices(p, k=1)
        keep = -L[iu, ju] > tol
        t = Topology(p, tuple(zip(iu[keep].tolist(), ju[keep].tolist())))
    I, J = t.index_arrays()
    return t, np.maximum(-L[I, J], 0.0)


def union(a: Topology, b: Topology) -> Topology:
    if a.p != b.p:
        raise InvalidParameterError("topologies have different node counts")
    return Topology(a.p, tuple(set(a.edges) | set(b.edges)))
