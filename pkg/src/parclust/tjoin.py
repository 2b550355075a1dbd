"""Minimum-cost T-joins with nonnegative edge costs.

The classical reduction: shortest paths between all pairs of ``T``, a
minimum perfect matching on ``T`` under those path lengths, and the
symmetric difference of the matched paths.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass
from typing import Collection, Hashable, Iterable, Sequence

from parclust._num import Number
from parclust.errors import InfeasibleInstance, StructuralError
from parclust.matching import min_cost_perfect_matching

Vertex = Hashable


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected multigraph; edges are ``(u, v, cost)`` referenced by index."""

    vertices: tuple[Vertex, ...]
    edges: tuple[tuple[Vertex, Vertex, Number], ...]

    def __post_init__(self) -> None:
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise StructuralError("duplicate vertices")
        for k, (u, v, c) in enumerate(self.edges):
            if u not in vs or v not in vs:
                raise StructuralError(f"edge {k} has an unknown endpoint")
            if c < 0:
                raise StructuralError(f"edge {k} has negative cost {c}")

    @classmethod
    def build(cls, vertices: Iterable[Vertex], edges: Iterable[tuple[Vertex, Vertex, Number]]) -> WeightedGraph:
        return cls(tuple(vertices), tuple(tuple(e) for e in edges))

    def cost(self, edge_set: Iterable[int]) -> Number:
        return sum((self.edges[k][2] for k in edge_set), 0)

    def adjacency(self) -> dict[Vertex, list[tuple[Vertex, int]]]:
        adj: dict[Vertex, list[tuple[Vertex, int]]] = {v: [] for v in self.vertices}
        for k, (u, v, _) in enumerate(self.edges):
            adj[u].append((v, k))
            if u != v:
                adj[v].append((u, k))
        return adj


@dataclass(frozen=True)
class TJoinResult:
    edge_set: frozenset[int]
    total_cost: Number


def degrees(g: WeightedGraph, edge_set: Iterable[int]) -> Counter:
    deg: Counter = Counter()
    for k in edge_set:
        u, v, _ = g.edges[k]
        deg[u] += 1
        deg[v] += 1
    return deg


def is_tjoin(g: WeightedGraph, T: Collection[Vertex], edge_set: Iterable[int]) -> bool:
    """True iff exactly the vertices of ``T`` have odd degree in ``edge_set``."""
    deg = degrees(g, edge_set)
    Ts = set(T)
    return all((deg[v] % 2 == 1) == (v in Ts) for v in g.vertices)


def dijkstra(
    g: WeightedGraph,
    source: Vertex,
    adj: dict[Vertex, list[tuple[Vertex, int]]] | None = None,
) -> tuple[dict[Vertex, Number], dict[Vertex, int]]:
    """Distances from ``source`` and the tree edge used to reach each vertex."""
    if adj is None:
        adj = g.adjacency()
    order = {v: k for k, v in enumerate(g.vertices)}
    dist: dict[Vertex, Number] = {source: 0}
    via: dict[Vertex, int] = {}
    heap = [(0, order[source], source)]
    done: set[Vertex] = set()
    while heap:
        du, _, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, k in adj[u]:
            alt = du + g.edges[k][2]
            if v not in dist or alt < dist[v]:
                dist[v] = alt
                via[v] = k
                heapq.heappush(heap, (alt, order[v], v))
    return dist, via


def _path_edges(g: WeightedGraph, via: dict[Vertex, int], source: Vertex, target: Vertex) -> list[int]:
    path = []
    x = target
    while x != source:
        k = via[x]
        path.append(k)
        u, v, _ = g.edges[k]
        x = u if v == x else v
    return path


def min_cost_tjoin(g: WeightedGraph, T: Collection[Vertex]) -> TJoinResult:
    """Minimum-cost ``T``-join of ``g``.

    The returned edge set may contain cycles; callers that need a forest
    remove them.

    Raises:
        StructuralError: ``|T|`` is odd or ``T`` has a vertex outside ``g``.
        InfeasibleInstance: some component holds an odd number of ``T`` vertices.
    """
    order = {v: k for k, v in enumerate(g.vertices)}
    if any(t not in order for t in T):
        raise StructuralError("T contains a vertex not in the graph")
    ts: Sequence[Vertex] = sorted(set(T), key=order.__getitem__)
    if len(ts) % 2:
        raise StructuralError("T must have even cardinality")
    if not ts:
        return TJoinResult(frozenset(), 0)
    adj = g.adjacency()
    trees = {t: dijkstra(g, t, adj) for t in ts}
    # T vertices in different components never pair up; each component
    # needs an even share of T and is matched on its own.
    groups: list[list[Vertex]] = []
    seen: set[Vertex] = set()
    for a in ts:
        if a not in seen:
            group = [b for b in ts if b in trees[a][0]]
            seen.update(group)
            groups.append(group)
    odd = [group for group in groups if len(group) % 2]
    if odd:
        raise InfeasibleInstance(f"no T-join exists: the component of {odd[0][0]!r} holds an odd number of T vertices")
    parity: Counter = Counter()
    for group in groups:
        w = [[trees[a][0][b] for b in group] for a in group]
        # Symmetrise exactly: float Dijkstra may differ in the last bit by direction.
        for x in range(len(group)):
            for y in range(x + 1, len(group)):
                w[x][y] = w[y][x] = min(w[x][y], w[y][x])
        for x, y in min_cost_perfect_matching(w):
            a, b = group[x], group[y]
            for k in _path_edges(g, trees[a][1], a, b):
                parity[k] += 1
    edge_set = frozenset(k for k, c in parity.items() if c % 2)
    return TJoinResult(edge_set, g.cost(sorted(edge_set)))
