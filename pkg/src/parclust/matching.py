"""Minimum-cost perfect matching on complete weighted graphs.

The weights are turned into exact integers before the blossom search runs,
so rational inputs give provably optimal matchings.  Ties between optimal
matchings go to the lexicographically smallest sorted edge list.  That is
the same as subtracting ``eps ** rank(e)`` from every edge, where ``rank``
is the position of ``(u, v)`` in lexicographic order: of two matchings, the
one holding the lowest-ranked edge of their symmetric difference wins.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import networkx as nx

from parclust._num import Number
from parclust.errors import StructuralError

Matching = list[tuple[int, int]]


def _integer_weights(w: Sequence[Sequence[Number]], n: int) -> dict[tuple[int, int], int]:
    fr: dict[tuple[int, int], Fraction] = {}
    for u in range(n):
        for v in range(u + 1, n):
            x = w[u][v]
            if x != w[v][u]:
                raise StructuralError(f"asymmetric weight at ({u},{v})")
            if isinstance(x, float) and not math.isfinite(x):
                raise StructuralError(f"weight ({u},{v}) is not finite")
            if x < 0:
                raise StructuralError(f"negative weight at ({u},{v})")
            fr[u, v] = Fraction(x)
    lcm = 1
    for x in fr.values():
        lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
    ints = {e: int(x * lcm) for e, x in fr.items()}
    # Dividing by the gcd makes the result invariant under scaling w -> c*w.
    g = 0
    for x in ints.values():
        g = math.gcd(g, x)
    if g > 1:
        ints = {e: x // g for e, x in ints.items()}
    return ints


def min_cost_perfect_matching(w: Sequence[Sequence[Number]]) -> Matching:
    """Return a minimum-weight perfect matching of the complete graph ``K_n``.

    ``w`` is a symmetric ``n x n`` matrix of finite nonnegative weights.
    Output pairs are ``(u, v)`` with ``u < v``, sorted.

    Raises:
        StructuralError: if ``n`` is odd (no perfect matching exists) or the
            weights are malformed.
    """
    n = len(w)
    if n % 2:
        raise StructuralError(f"no perfect matching exists on {n} vertices")
    if n == 0:
        return []
    ints = _integer_weights(w, n)
    if n == 2:
        return [(0, 1)]
    # Edge of rank r earns a bonus 2**(m-1-r); all bonuses together stay
    # below 2**m, so they only decide between equal-weight matchings.
    m = len(ints)
    scale = 1 << m
    big = {e: x * scale - (1 << (m - 1 - rank)) for rank, (e, x) in enumerate(sorted(ints.items()))}
    top = max(big.values()) + 1
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for (u, v), x in big.items():
        g.add_edge(u, v, weight=top - x)
    mate = nx.max_weight_matching(g, maxcardinality=True)
    out = sorted((min(u, v), max(u, v)) for u, v in mate)
    if len(out) != n // 2 or len({x for e in out for x in e}) != n:
        raise AssertionError("blossom search returned a non-perfect matching")
    return out


def matching_cost(w: Sequence[Sequence[Number]], matching: Matching) -> Number:
    return sum((w[u][v] for u, v in matching), 0)


def is_perfect_matching(n: int, matching: Matching) -> bool:
    seen: set[int] = set()
    for u, v in matching:
        if u == v or u in seen or v in seen or not (0 <= u < n and 0 <= v < n):
            return False
        seen.update((u, v))
    return len(seen) == n
