"""Combinatorial and metric graphs.

The edge list order fixes both the edge indexing and the orientation: edge
``j = (source, target)`` runs from ``source`` (the point x = 0) to ``target``
(the point x = length).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import _backend
from .errors import (
    Disconnected,
    DuplicateEdge,
    IndexOutOfRange,
    LoopEdge,
    SizeCapExceeded,
    SizeTooSmall,
    ValidationError,
)

ENUMERATION_CAP = 7


@dataclass(frozen=True)
class Graph:
    """Finite, simple, connected graph with a fixed orientation."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple((int(s), int(t)) for s, t in self.edges)
        object.__setattr__(self, "edges", edges)
        _validate(self.vertex_count, edges)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.vertex_count, dtype=np.int64)
        for s, t in self.edges:
            deg[s] += 1
            deg[t] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.vertex_count, self.vertex_count), dtype=np.int64)
        for s, t in self.edges:
            adj[s, t] = adj[t, s] = 1
        return adj

    def neighbors(self, v: int) -> set[int]:
        return {t if s == v else s for s, t in self.edges if v in (s, t)}

    def is_complete(self) -> bool:
        n = self.vertex_count
        return self.edge_count == n * (n - 1) // 2


@dataclass(frozen=True)
class MetricGraph:
    """A graph whose edge ``j`` is identified with the interval [0, lengths[j]]."""

    graph: Graph
    lengths: tuple[float, ...] = field(default=())

    def __post_init__(self):
        lengths = tuple(float(x) for x in self.lengths)
        if not lengths:
            lengths = (1.0,) * self.graph.edge_count
        if len(lengths) != self.graph.edge_count:
            raise ValidationError(
                f"{len(lengths)} lengths given for {self.graph.edge_count} edges")
        if any(not (x > 0 and math.isfinite(x)) for x in lengths):
            raise ValidationError("edge lengths must be positive and finite")
        object.__setattr__(self, "lengths", lengths)

    @property
    def vertex_count(self) -> int:
        return self.graph.vertex_count

    @property
    def edge_count(self) -> int:
        return self.graph.edge_count

    @property
    def edges(self):
        return self.graph.edges

    @property
    def total_length(self) -> float:
        return float(sum(self.lengths))


def _validate(n, edges):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"vertex_count must be a positive integer, got {n!r}")
    seen = set()
    for j, (s, t) in enumerate(edges):
        if not (0 <= s < n and 0 <= t < n):
            raise IndexOutOfRange(f"edge {j} = ({s}, {t}) has an endpoint outside 0..{n - 1}")
        if s == t:
            raise LoopEdge(f"edge {j} = ({s}, {t}) is a loop")
        key = (min(s, t), max(s, t))
        if key in seen:
            raise DuplicateEdge(f"edge {j} = ({s}, {t}) duplicates an earlier edge")
        seen.add(key)
    # union-find connectivity
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for s, t in edges:
        parent[find(s)] = find(t)
    if len({find(v) for v in range(n)}) != 1:
        raise Disconnected(f"graph on {n} vertices with edges {list(edges)} is not connected")


def build_graph(vertex_count: int, edge_list: Sequence[Sequence[int]]) -> Graph:
    return Graph(vertex_count, tuple(tuple(e) for e in edge_list))


def incidence_matrix(graph: Graph) -> np.ndarray:
    """V x E signed incidence matrix: -1 at the source, +1 at the target."""
    inc = np.zeros((graph.vertex_count, graph.edge_count), dtype=np.int64)
    for j, (s, t) in enumerate(graph.edges):
        inc[s, j] = -1
        inc[t, j] = 1
    return inc


def preset_graph(kind: str, n: int) -> Graph:
    """Named graph families.

    Orderings:

    * ``path``: vertices 0..n-1, edges (i, i+1).
    * ``cycle``: edges (i, i+1) for i < n-1, then (n-1, 0).
    * ``complete``: edges (i, j), i < j, lexicographic.
    * ``star``: ``n`` edges (0, i), i = 1..n; vertex 0 is the center.
    * ``flower``: ``n`` triangles sharing vertex 0; petal k uses vertices
      2k+1, 2k+2 with edges (0, 2k+1), (2k+1, 2k+2), (2k+2, 0). Loops are
      not allowed, so each petal is a triangle instead of a loop.
    """
    if kind == "path":
        _require(n, 2, kind)
        return Graph(n, tuple((i, i + 1) for i in range(n - 1)))
    if kind == "cycle":
        _require(n, 3, kind)
        return Graph(n, tuple((i, i + 1) for i in range(n - 1)) + ((n - 1, 0),))
    if kind == "complete":
        _require(n, 3, kind)
        return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))
    if kind == "star":
        _require(n, 2, kind)
        return Graph(n + 1, tuple((0, i) for i in range(1, n + 1)))
    if kind == "flower":
        _require(n, 2, kind)
        edges = []
        for k in range(n):
            a, b = 2 * k + 1, 2 * k + 2
            edges += [(0, a), (a, b), (b, 0)]
        return Graph(2 * n + 1, tuple(edges))
    raise ValidationError(f"unknown graph kind {kind!r}")


def _require(n, least, kind):
    if n < least:
        raise SizeTooSmall(f"{kind} graph needs n >= {least}, got {n}")


def enumerate_connected_graphs(n: int) -> Iterator[Graph]:
    """Every connected simple graph on ``n`` labeled vertices, exactly once.

    Order: increasing bitmask over the lexicographic list of vertex pairs,
    bit k set meaning pair k is an edge.
    """
    if n > ENUMERATION_CAP:
        raise SizeCapExceeded(f"enumeration is capped at n <= {ENUMERATION_CAP}")
    if n < 1:
        raise SizeTooSmall("n must be positive")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for mask in _backend.connected_edge_masks(n).tolist():
        edges = tuple(p for k, p in enumerate(pairs) if (mask >> k) & 1)
        yield Graph(n, edges)


def count_connected_graphs(n: int) -> int:
    if n > ENUMERATION_CAP:
        raise SizeCapExceeded(f"enumeration is capped at n <= {ENUMERATION_CAP}")
    return len(_backend.connected_edge_masks(n))
