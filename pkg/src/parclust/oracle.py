"""Exhaustive exact solvers for small instances.

These exist to certify the approximation algorithms, never to be fast.
Every entry point refuses instances above its size guard with
:class:`SizeGuardExceeded` rather than silently sampling.

For facility location the search runs over all facility subsets ``S``.
For a fixed ``S`` the best parity-respecting assignment is found by a
dynamic program over the clients whose state is the parity vector of the
cluster sizes.  The DP optimises over exactly the ``|S|^|D|`` assignments
that plain enumeration would visit, but without listing them one by one.
:func:`exact_fl_naive` does the literal listing and is used to cross-check
the DP on tiny inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Collection, Hashable, Sequence

import numpy as np

from parclust._num import Number
from parclust.errors import InfeasibleInstance, SizeGuardExceeded, StructuralError
from parclust.instance import Instance, ParityLabel, Solution
from parclust.kcenter import KCenterInstance
from parclust.matching import Matching
from parclust.tjoin import WeightedGraph, is_tjoin

FL_MAX_FACILITIES = 6
FL_MAX_CLIENTS = 8
KC_MAX_NODES = 10
KC_MAX_K = 4
MATCHING_MAX_N = 10
TJOIN_MAX_EDGES = 16
RADIUS1_MAX_NODES = 12


@dataclass(frozen=True)
class OracleResult:
    optimum_value: Number
    witness: Any  # Solution for FL, (centers, assignment) for k-center
    enumeration_size: int


def _guard(what: str, value: int, bound: int) -> None:
    if value > bound:
        raise SizeGuardExceeded(f"{what} = {value} exceeds the oracle bound {bound}")


def _subsets(n: int):
    """All index subsets of ``range(n)``: by size, then lexicographically."""
    for r in range(n + 1):
        yield from itertools.combinations(range(n), r)


# --------------------------------------------------------------------------
# facility location


def _best_assignment(
    cost: list[list[Number]], labels: Sequence[ParityLabel]
) -> tuple[Number, list[int]] | None:
    """Cheapest assignment of clients (rows) to an open set (columns).

    A column labelled odd needs an odd cluster, even an even one (possibly
    empty).  Returns ``(cost, choice)`` where ``choice`` is lexicographically
    smallest among optimal assignments, or ``None`` if none is feasible.
    """
    n, m = len(cost), len(labels)
    target = 0
    care = 0
    for s, lab in enumerate(labels):
        if lab is not ParityLabel.UNCONSTRAINED:
            care |= 1 << s
            if lab is ParityLabel.ODD:
                target |= 1 << s
    # best[j][state]: min cost of clients j.. given parity state of clients ..j-1
    best: list[dict[int, Number]] = [dict() for _ in range(n + 1)]
    for state in range(1 << m):
        if state & care == target:
            best[n][state] = 0
    for j in range(n - 1, -1, -1):
        nxt = best[j + 1]
        cur = best[j]
        for state in range(1 << m):
            val = None
            for s in range(m):
                t = nxt.get(state ^ (1 << s))
                if t is not None:
                    t = t + cost[j][s]
                    if val is None or t < val:
                        val = t
            if val is not None:
                cur[state] = val
    if 0 not in best[0]:
        return None
    choice = []
    state = 0
    for j in range(n):
        want = best[j][state]
        for s in range(m):
            t = best[j + 1].get(state ^ (1 << s))
            if t is not None and t + cost[j][s] == want:
                choice.append(s)
                state ^= 1 << s
                break
        else:  # pragma: no cover - float rounding in the reconstruction
            raise AssertionError("assignment reconstruction failed")
    return best[0][0], choice


def exact_fl(
    inst: Instance, max_facilities: int = FL_MAX_FACILITIES, max_clients: int = FL_MAX_CLIENTS
) -> OracleResult:
    """Optimal parity-feasible solution by exhaustive search.

    Unconstrained facilities accept any cluster size.  Among optimal
    solutions the witness uses the first facility subset in (size, index)
    order and the lexicographically smallest assignment for it.

    Raises:
        SizeGuardExceeded: the instance is above the guard.
        InfeasibleInstance: no parity-feasible solution exists.
    """
    F = inst.facility_ids
    D = inst.clients
    _guard("|F|", len(F), max_facilities)
    _guard("|D|", len(D), max_clients)
    if not D:
        return OracleResult(0, Solution(frozenset(), {}), 1)
    best: tuple[Number, Solution] | None = None
    examined = 0
    for sub in _subsets(len(F)):
        if not sub:
            continue
        examined += len(sub) ** len(D)
        fac = [F[s] for s in sub]
        opening = sum((inst.f(i) for i in fac), 0)
        if best is not None and opening > best[0]:
            continue
        cost = [[inst.d(i, j) for i in fac] for j in D]
        found = _best_assignment(cost, [inst.parity(i) for i in fac])
        if found is None:
            continue
        val = opening + found[0]
        if best is None or val < best[0]:
            assignment = {j: fac[s] for j, s in zip(D, found[1])}
            best = (val, Solution.from_assignment(assignment, fac))
    if best is None:
        raise InfeasibleInstance("no parity-feasible solution exists")
    return OracleResult(best[0], best[1], examined)


def exact_fl_naive(inst: Instance, max_candidates: int = 200_000) -> OracleResult:
    """Literal enumeration of every open set and every assignment into it."""
    F = inst.facility_ids
    D = inst.clients
    total = sum(len(s) ** len(D) for s in _subsets(len(F)) if s)
    _guard("candidate count", total, max_candidates)
    if not D:
        return OracleResult(0, Solution(frozenset(), {}), 1)
    best = None
    for sub in _subsets(len(F)):
        if not sub:
            continue
        fac = [F[s] for s in sub]
        opening = sum((inst.f(i) for i in fac), 0)
        for choice in itertools.product(range(len(fac)), repeat=len(D)):
            counts = [0] * len(fac)
            for s in choice:
                counts[s] += 1
            if not all(inst.parity(i).accepts(c) for i, c in zip(fac, counts)):
                continue
            val = opening + sum((inst.d(fac[s], j) for s, j in zip(choice, D)), 0)
            if best is None or val < best[0]:
                assignment = {j: fac[s] for j, s in zip(D, choice)}
                best = (val, Solution.from_assignment(assignment, fac))
    if best is None:
        raise InfeasibleInstance("no parity-feasible solution exists")
    return OracleResult(best[0], best[1], total)


def exact_ufl(inst: Instance, max_facilities: int = 12) -> OracleResult:
    """Optimum with parity labels ignored: every client to its nearest open facility."""
    F = inst.facility_ids
    D = inst.clients
    _guard("|F|", len(F), max_facilities)
    if not D:
        return OracleResult(0, Solution(frozenset(), {}), 1)
    best = None
    examined = 0
    for sub in _subsets(len(F)):
        if not sub:
            continue
        examined += 1
        fac = [F[s] for s in sub]
        assignment = {j: min(fac, key=lambda i: inst.d(i, j)) for j in D}
        val = sum((inst.f(i) for i in fac), 0) + sum((inst.d(i, j) for j, i in assignment.items()), 0)
        if best is None or val < best[0]:
            best = (val, Solution.from_assignment(assignment, fac))
    if best is None:
        raise InfeasibleInstance("clients present but no facilities")
    return OracleResult(best[0], best[1], examined)


# --------------------------------------------------------------------------
# k-center


def _feasible_assignment(
    allowed: list[list[int]], labels: Sequence[ParityLabel], centers: Sequence[int]
) -> list[int] | None:
    """Lexicographically smallest parity-feasible assignment or ``None``.

    ``allowed[v]`` lists positions in ``centers`` that node ``v`` may use.
    """
    m = len(centers)
    target = care = 0
    for s, u in enumerate(centers):
        lab = labels[u]
        if lab is not ParityLabel.UNCONSTRAINED:
            care |= 1 << s
            if lab is ParityLabel.ODD:
                target |= 1 << s
    n = len(allowed)
    # good[j]: states at step j from which the remaining nodes can finish
    good: list[set[int]] = [set() for _ in range(n + 1)]
    good[n] = {st for st in range(1 << m) if st & care == target}
    for j in range(n - 1, -1, -1):
        good[j] = {st for st in range(1 << m) if any(st ^ (1 << s) in good[j + 1] for s in allowed[j])}
    if 0 not in good[0]:
        return None
    out = []
    st = 0
    for j in range(n):
        s = next(s for s in allowed[j] if st ^ (1 << s) in good[j + 1])
        out.append(s)
        st ^= 1 << s
    return out


def _kcenter_at(inst: KCenterInstance, tau: Number, max_size: int):
    """First center set (by size, then index order) feasible at radius ``tau``."""
    n = inst.n
    within = inst.dist <= tau
    tried = 0
    for r in range(1, max_size + 1):
        for centers in itertools.combinations(range(n), r):
            tried += 1
            allowed = [[s for s, u in enumerate(centers) if within[v, u]] for v in range(n)]
            if any(not a for a in allowed):
                continue
            got = _feasible_assignment(allowed, inst.parity, centers)
            if got is not None:
                return centers, got, tried
    return None, None, tried


def exact_kcenter(inst: KCenterInstance, max_nodes: int = KC_MAX_NODES, max_k: int = KC_MAX_K) -> OracleResult:
    """Optimal radius ``tau*`` over all center sets of size at most ``k``.

    Nodes may be assigned to any center within the radius (a center need
    not serve itself).  Feasibility is monotone in the radius, so the
    candidate radii are binary searched.

    Raises:
        SizeGuardExceeded: ``|V|`` or ``k`` above the guard.
        InfeasibleInstance: no center set of size at most ``k`` works.
    """
    _guard("|V|", inst.n, max_nodes)
    _guard("k", inst.k, max_k)
    if inst.n == 0:
        return OracleResult(0, ((), {}), 1)
    n = inst.n
    iu = np.triu_indices(n, 1)
    cands = sorted(set([0] + [x.item() if hasattr(x, "item") else x for x in inst.dist[iu]]))
    k = min(inst.k, n)
    examined = 0

    def at(i):
        nonlocal examined
        c, a, t = _kcenter_at(inst, cands[i], k)
        examined += t
        return c, a

    top = at(len(cands) - 1)
    if top[0] is None:
        raise InfeasibleInstance(f"no parity-feasible solution with at most k={inst.k} centers")
    lo, hi, best = -1, len(cands) - 1, top
    while hi - lo > 1:
        mid = (lo + hi) // 2
        got = at(mid)
        if got[0] is not None:
            hi, best = mid, got
        else:
            lo = mid
    centers, choice = best
    ids = tuple(inst.nodes[u] for u in centers)
    assignment = {inst.nodes[v]: ids[s] for v, s in enumerate(choice)}
    return OracleResult(cands[hi], (ids, assignment), examined)


def min_centers_radius1(
    adj: np.ndarray, labels: Sequence[ParityLabel], max_nodes: int = RADIUS1_MAX_NODES
) -> int | None:
    """Fewest centers of a parity-feasible solution where every node is a
    center or adjacent to its center in the unweighted graph ``adj``.
    ``None`` when no such solution exists."""
    n = adj.shape[0]
    _guard("|V|", n, max_nodes)
    for r in range(1, n + 1):
        for centers in itertools.combinations(range(n), r):
            allowed = [[s for s, u in enumerate(centers) if u == v or adj[v, u]] for v in range(n)]
            if any(not a for a in allowed):
                continue
            if _feasible_assignment(allowed, labels, centers) is not None:
                return r
    return None if n else 0


# --------------------------------------------------------------------------
# matching and T-join references


def brute_matching(w: Sequence[Sequence[Number]], max_n: int = MATCHING_MAX_N) -> tuple[Number, Matching]:
    """Minimum-weight perfect matching by listing all ``(n-1)!!`` of them."""
    n = len(w)
    _guard("n", n, max_n)
    if n % 2:
        raise StructuralError(f"no perfect matching exists on {n} vertices")

    best: list = [None, []]

    def rec(free: list[int], acc: Number, pairs: list[tuple[int, int]]) -> None:
        if not free:
            if best[0] is None or acc < best[0]:
                best[0], best[1] = acc, sorted(pairs)
            return
        u = free[0]
        for t in range(1, len(free)):
            v = free[t]
            rec(free[1:t] + free[t + 1 :], acc + w[u][v], pairs + [(u, v)])

    rec(list(range(n)), 0, [])
    return best[0], best[1]


def brute_tjoin(
    g: WeightedGraph, T: Collection[Hashable], max_edges: int = TJOIN_MAX_EDGES
) -> tuple[Number, frozenset[int]]:
    """Cheapest edge subset whose odd-degree vertices are exactly ``T``."""
    m = len(g.edges)
    _guard("|E|", m, max_edges)
    best = None
    for mask in range(1 << m):
        es = [k for k in range(m) if mask >> k & 1]
        if not is_tjoin(g, T, es):
            continue
        c = g.cost(es)
        if best is None or c < best[0]:
            best = (c, frozenset(es))
    if best is None:
        raise InfeasibleInstance("no T-join exists")
    return best
