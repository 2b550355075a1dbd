"""Parity-constrained facility location.

Two pipelines live here:

* :func:`solve_all_even` for instances whose facilities are all
  even-constrained.  Clients are paired by a minimum perfect matching, one
  endpoint of every pair is kept at random, the unconstrained problem is
  solved on the kept clients, and every dropped client follows its partner.
  Every facility then holds twice as many clients as in the reduced
  solution.

* :func:`solve_general` for arbitrary odd/even labels.  The unconstrained
  solution is repaired along a T-join of an auxiliary graph on the
  facilities plus an artificial vertex ``z``.  Reassign edges move one
  client between two facilities, opening edges ``(z, i)`` open a closed odd
  facility and closing edges ``(z, i)`` close an open odd facility and hand
  its clients to a substitute.  The T-join is first simplified so that it
  prescribes a valid sequence of such moves.

:func:`solve_fl` is the entry point that handles unconstrained facilities
and picks a pipeline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Literal, Mapping, Sequence

import numpy as np

from parclust._num import Number, leq
from parclust.errors import InfeasibleInstance, InvariantViolation, StructuralError
from parclust.instance import (
    EMPTY_SOLUTION,
    Instance,
    ParityLabel,
    Solution,
    drop_empty,
    feasibility_precheck,
    parity_violations,
    reduce_unconstrained,
    solution_cost,
)
from parclust.matching import min_cost_perfect_matching
from parclust.tjoin import TJoinResult, WeightedGraph, is_tjoin, min_cost_tjoin
from parclust.ufl import UflResult, solve_ufl

log = logging.getLogger(__name__)

Mode = Literal["auto", "all-even", "general"]


@dataclass(frozen=True)
class SolverConfig:
    baseline: str = "primal-dual"
    trials: int = 16
    seed: int = 0
    mode: Mode = "auto"

    def __post_init__(self) -> None:
        if self.baseline != "primal-dual":
            raise StructuralError(f"unknown baseline {self.baseline!r}")
        if self.mode not in ("auto", "all-even", "general"):
            raise StructuralError(f"unknown mode {self.mode!r}")
        if self.trials < 1:
            raise StructuralError("trials must be positive")


# --------------------------------------------------------------------------
# all-even case


@dataclass(frozen=True)
class MatchingSplit:
    matching: tuple[tuple[str, str], ...]
    chosen: tuple[str, ...]
    remaining: tuple[str, ...]

    @property
    def D_prime(self) -> tuple[str, ...]:
        return self.chosen


def client_matching(inst: Instance) -> tuple[tuple[str, str], ...]:
    """Minimum-cost perfect matching on the clients under the metric."""
    cl = inst.clients
    w = [[inst.d(a, b) for b in cl] for a in cl]
    return tuple((cl[u], cl[v]) for u, v in min_cost_perfect_matching(w))


def split_matching(matching: Sequence[tuple[str, str]], rng: np.random.Generator) -> MatchingSplit:
    coins = rng.integers(0, 2, size=len(matching))
    chosen, remaining = [], []
    for (a, b), coin in zip(matching, coins):
        keep, drop = (a, b) if coin == 0 else (b, a)
        chosen.append(keep)
        remaining.append(drop)
        log.debug("pair (%s, %s): keep %s", a, b, keep)
    return MatchingSplit(tuple(matching), tuple(chosen), tuple(remaining))


def all_even_trial(
    inst: Instance, matching: Sequence[tuple[str, str]], rng: np.random.Generator
) -> tuple[Solution, MatchingSplit, UflResult]:
    split = split_matching(matching, rng)
    kept = sorted(split.chosen, key=inst.index)
    reduced = solve_ufl(inst, kept)
    assignment = dict(reduced.solution.assignment)
    for keep, drop in zip(split.chosen, split.remaining):
        assignment[drop] = assignment[keep]
    sol = Solution(reduced.solution.open_set, assignment)
    return sol, split, reduced


def _check_all_even(inst: Instance) -> None:
    bad = [f.id for f in inst.facilities if f.parity is not ParityLabel.EVEN]
    if bad:
        raise StructuralError(f"all-even solver needs even-constrained facilities only; got {bad}")
    if inst.clients and not inst.facilities:
        raise InfeasibleInstance("clients present but no facilities")
    if len(inst.clients) % 2:
        raise InfeasibleInstance(f"|D|={len(inst.clients)} is odd; every cluster must be even")


def solve_all_even(inst: Instance, seed: int = 0, trials: int = 16) -> Solution:
    """Best of ``trials`` independent randomized rounds (seeded)."""
    _check_all_even(inst)
    if not inst.clients:
        return EMPTY_SOLUTION
    if trials < 1:
        raise StructuralError("trials must be positive")
    matching = client_matching(inst)
    best: Solution | None = None
    best_cost: Number | None = None
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        sol, _, _ = all_even_trial(inst, matching, np.random.default_rng(child))
        cost = solution_cost(inst, sol)
        log.debug("trial %d: cost %s", k, cost)
        if best_cost is None or cost < best_cost:
            best, best_cost = sol, cost
    assert best is not None
    if parity_violations(inst, best):
        raise InvariantViolation("all-even solution violates parity")
    return best


# --------------------------------------------------------------------------
# auxiliary graph


@dataclass(frozen=True)
class AuxEdge:
    kind: Literal["reassign", "opening", "closing"]
    u: str
    v: str
    gamma: Number


@dataclass(frozen=True)
class Substitute:
    facility: str
    initially_open: bool  # False: even facility closed in the initial solution


@dataclass(frozen=True)
class AuxiliaryGraph:
    z: str
    vertices: tuple[str, ...]
    edges: tuple[AuxEdge, ...]
    substitute: Mapping[str, Substitute]
    T: frozenset[str]
    S_inv: frozenset[str]
    initial_open: frozenset[str]
    _pairs: Mapping[frozenset, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pairs = {}
        for k, e in enumerate(self.edges):
            key = frozenset((e.u, e.v))
            if key in pairs:
                raise InvariantViolation(f"parallel auxiliary edges at {sorted(key)}")
            pairs[key] = k
        object.__setattr__(self, "_pairs", MappingProxyType(pairs))

    def edge(self, a: str, b: str) -> int | None:
        return self._pairs.get(frozenset((a, b)))

    def graph(self) -> WeightedGraph:
        return WeightedGraph(self.vertices, tuple((e.u, e.v, e.gamma) for e in self.edges))

    def gamma(self, edge_set) -> Number:
        return sum((self.edges[k].gamma for k in edge_set), 0)

    def kinds(self, edge_set, kind: str) -> list[int]:
        return sorted(k for k in edge_set if self.edges[k].kind == kind)


def _fresh_vertex(taken: set[str]) -> str:
    z = "z"
    while z in taken:
        z = "_" + z
    return z


def build_auxiliary_graph(inst: Instance, initial: UflResult) -> AuxiliaryGraph:
    sol = initial.solution
    counts = sol.counts()
    S_I = sol.open_set
    if any(counts.get(i, 0) == 0 for i in S_I):
        raise InvariantViolation("initial solution has an open facility without clients")
    fac = inst.facility_ids
    odd = {i for i in fac if inst.parity(i) is ParityLabel.ODD}
    even_closed = [i for i in fac if i not in odd and i not in S_I]
    S_inv = frozenset(parity_violations(inst, sol))
    z = _fresh_vertex(set(inst.point_ids))

    edges: list[AuxEdge] = []
    for a in range(len(fac)):
        for b in range(a + 1, len(fac)):
            edges.append(AuxEdge("reassign", fac[a], fac[b], inst.d(fac[a], fac[b])))
    for i in fac:
        if i in odd and i not in S_I:
            edges.append(AuxEdge("opening", z, i, inst.f(i)))

    substitute: dict[str, Substitute] = {}
    if len(S_I) >= 2 or even_closed:
        open_order = sorted(S_I, key=inst.index)
        for i in fac:
            if i not in odd or i not in S_I:
                continue
            n_i = counts[i]
            best, best_cost = None, None
            for k in open_order:
                if k != i:
                    cost = n_i * inst.d(i, k)
                    if best_cost is None or cost < best_cost:
                        best, best_cost = Substitute(k, True), cost
            for k in even_closed:
                cost = n_i * inst.d(i, k) + inst.f(k)
                # strict: an existing open facility wins ties
                if best_cost is None or cost < best_cost:
                    best, best_cost = Substitute(k, False), cost
            if best is None:
                raise InvariantViolation(f"closing edge at {i} would have infinite cost")
            substitute[i] = best
            edges.append(AuxEdge("closing", z, i, best_cost))

    T = set(S_inv)
    if len(S_inv) % 2:
        T.add(z)
    return AuxiliaryGraph(
        z=z,
        vertices=fac + (z,),
        edges=tuple(edges),
        substitute=MappingProxyType(substitute),
        T=frozenset(T),
        S_inv=S_inv,
        initial_open=frozenset(S_I),
    )


# --------------------------------------------------------------------------
# sparsification


def _find_cycle(aux: AuxiliaryGraph, J: set[int]) -> list[int] | None:
    parent = {v: v for v in aux.vertices}

    def root(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    forest: dict[str, list[tuple[str, int]]] = {v: [] for v in aux.vertices}
    for k in sorted(J):
        e = aux.edges[k]
        ru, rv = root(e.u), root(e.v)
        if ru != rv:
            parent[ru] = rv
            forest[e.u].append((e.v, k))
            forest[e.v].append((e.u, k))
            continue
        # path from e.u to e.v inside the forest closes the cycle
        prev: dict[str, tuple[str, int] | None] = {e.u: None}
        stack = [e.u]
        while stack:
            x = stack.pop()
            for y, kk in forest[x]:
                if y not in prev:
                    prev[y] = (x, kk)
                    stack.append(y)
        cycle = [k]
        x = e.v
        while prev[x] is not None:
            x, kk = prev[x]
            cycle.append(kk)
        return cycle
    return None


def _toggle(J: set[int], k: int) -> None:
    if k in J:
        J.remove(k)
    else:
        J.add(k)


def check_sparse(aux: AuxiliaryGraph, J: frozenset[int] | set[int]) -> None:
    """Raise unless ``J`` has the three sparsity properties the correction relies on."""
    fac_nbrs: dict[str, int] = {}
    zs = set()
    for k in J:
        e = aux.edges[k]
        if e.kind == "reassign":
            for x in (e.u, e.v):
                fac_nbrs[x] = fac_nbrs.get(x, 0) + 1
            if e.u not in aux.initial_open and e.v not in aux.initial_open:
                raise InvariantViolation(f"reassign edge {e.u}-{e.v} touches no initially open facility")
        else:
            zs.add(e.v)
    crowded = sorted(x for x, c in fac_nbrs.items() if c > 1)
    if crowded:
        raise InvariantViolation(f"facilities with several facility neighbours in J: {crowded}")
    for k in J:
        e = aux.edges[k]
        if e.kind == "closing" and aux.substitute[e.v].facility in zs:
            raise InvariantViolation(f"closing edge at {e.v} coexists with an edge at its substitute")


def sparsify_tjoin(aux: AuxiliaryGraph, J: TJoinResult) -> TJoinResult:
    """Apply the three local rewrites until none applies.

    (i) two reassign edges ``(i, a), (i, b)`` become ``(a, b)``;
    (ii) a closing edge ``(z, i)`` together with ``(z, phi(i))`` becomes
    ``(i, phi(i))``; (iii) any cycle is deleted.  An added edge that is
    already present cancels with it, which keeps ``J`` a set and preserves
    every degree parity.
    """
    g = aux.graph()
    if not is_tjoin(g, aux.T, J.edge_set):
        raise InvariantViolation("input to sparsify_tjoin is not a T-join")
    cur = set(J.edge_set)
    order = {v: n for n, v in enumerate(aux.vertices)}
    while True:
        nbrs: dict[str, list[tuple[str, int]]] = {}
        for k in cur:
            e = aux.edges[k]
            if e.kind == "reassign":
                nbrs.setdefault(e.u, []).append((e.v, k))
                nbrs.setdefault(e.v, []).append((e.u, k))
        hub = next((i for i in aux.vertices if len(nbrs.get(i, ())) >= 2), None)
        if hub is not None:
            (a, ka), (b, kb) = sorted(nbrs[hub], key=lambda t: order[t[0]])[:2]
            cur -= {ka, kb}
            _toggle(cur, aux.edge(a, b))
            log.debug("shortcut %s-%s-%s", a, hub, b)
            continue
        merged = False
        for k in sorted(cur):
            e = aux.edges[k]
            if e.kind != "closing":
                continue
            kp = aux.edge(aux.z, aux.substitute[e.v].facility)
            if kp is not None and kp in cur:
                cur -= {k, kp}
                _toggle(cur, aux.edge(e.v, aux.substitute[e.v].facility))
                log.debug("merged closing edge at %s with its substitute", e.v)
                merged = True
                break
        if merged:
            continue
        cycle = _find_cycle(aux, cur)
        if cycle is not None:
            cur -= set(cycle)
            log.debug("removed cycle of %d edges", len(cycle))
            continue
        break
    out = TJoinResult(frozenset(cur), aux.gamma(sorted(cur)))
    if not is_tjoin(g, aux.T, out.edge_set):
        raise InvariantViolation("sparsification broke the T-join degree condition")
    if not leq(out.total_cost, J.total_cost):
        raise InvariantViolation(f"sparsification raised the cost: {J.total_cost} -> {out.total_cost}")
    check_sparse(aux, out.edge_set)
    return out


# --------------------------------------------------------------------------
# parity correction


def apply_correction(inst: Instance, initial: UflResult, aux: AuxiliaryGraph, J: TJoinResult) -> Solution:
    """Modify the initial solution as prescribed by the sparsified ``J``.

    Opening edges first, then reassign edges in increasing cost, then
    closing edges.  A reassign edge moves the donor's client that is
    farthest from the donor.
    """
    assign = dict(initial.solution.assignment)
    open_ = set(initial.solution.open_set)
    cur = set(J.edge_set)
    clients_order = {j: n for n, j in enumerate(inst.clients)}

    def members(i: str) -> list[str]:
        return sorted((j for j, x in assign.items() if x == i), key=clients_order.__getitem__)

    for k in aux.kinds(cur, "opening"):
        open_.add(aux.edges[k].v)
        cur.remove(k)

    for k in sorted(aux.kinds(cur, "reassign"), key=lambda k: (aux.edges[k].gamma, k)):
        e = aux.edges[k]
        a, b = e.u, e.v
        za = aux.edge(aux.z, a) in cur
        zb = aux.edge(aux.z, b) in cur
        if za or zb:
            donor, recv = (a, b) if za else (b, a)
            pool = members(donor)
            if not pool:
                raise InvariantViolation(f"donor {donor} has no client")
        else:
            options = []
            for donor, recv in ((a, b), (b, a)):
                pool = members(donor)
                if pool:
                    j = max(pool, key=lambda j: inst.d(donor, j))
                    delta = inst.d(recv, j) - inst.d(donor, j)
                    options.append((delta, inst.index(donor), donor, recv, pool))
            if not options:
                raise InvariantViolation(f"neither {a} nor {b} has a client to move")
            _, _, donor, recv, pool = min(options, key=lambda t: t[:2])
        if recv not in open_:
            raise InvariantViolation(f"receiving facility {recv} is closed")
        j = max(pool, key=lambda j: inst.d(donor, j))
        assign[j] = recv
        cur.remove(k)
        log.debug("moved client %s from %s to %s", j, donor, recv)

    for k in aux.kinds(cur, "closing"):
        i = aux.edges[k].v
        sub = aux.substitute[i]
        moving = members(i)
        if len(moving) % 2:
            raise InvariantViolation(f"closing {i} with an odd number of clients")
        if sub.facility not in open_:
            if sub.initially_open:
                raise InvariantViolation(f"substitute {sub.facility} of {i} was closed")
            open_.add(sub.facility)
        for j in moving:
            assign[j] = sub.facility
        open_.discard(i)
        cur.remove(k)
        log.debug("closed %s, clients to %s", i, sub.facility)

    sol = Solution(frozenset(open_), assign)
    bad = parity_violations(inst, sol)
    if bad:
        raise InvariantViolation(f"corrected solution still violates parity at {sorted(bad)}")
    before = solution_cost(inst, initial.solution)
    after = solution_cost(inst, sol)
    if not leq(after, before + J.total_cost):
        raise InvariantViolation(f"correction cost {after - before} exceeds gamma(J) = {J.total_cost}")
    return drop_empty(sol)


# --------------------------------------------------------------------------
# general pipeline


@dataclass(frozen=True)
class GeneralTrace:
    """Every intermediate object of one run of the general pipeline."""

    initial: UflResult
    solution: Solution
    aux: AuxiliaryGraph | None = None
    tjoin: TJoinResult | None = None
    sparse: TJoinResult | None = None


def _require_binary_labels(inst: Instance) -> None:
    if any(f.parity is ParityLabel.UNCONSTRAINED for f in inst.facilities):
        raise StructuralError("unconstrained facilities present; apply reduce_unconstrained first")


def run_general(inst: Instance) -> GeneralTrace:
    _require_binary_labels(inst)
    check = feasibility_precheck(inst)
    if not check:
        raise InfeasibleInstance(check.reason)
    initial = solve_ufl(inst)
    if not inst.clients:
        return GeneralTrace(initial, EMPTY_SOLUTION)
    if not parity_violations(inst, initial.solution):
        return GeneralTrace(initial, initial.solution)
    aux = build_auxiliary_graph(inst, initial)
    if aux.z in aux.T and not (aux.kinds(range(len(aux.edges)), "opening") or aux.substitute):
        # Precheck-feasible instances always give z an incident edge: with no
        # opening/closing edges either O is empty (so |D| and |S_inv| are
        # even) or F is a single facility whose label matches |D|.
        raise InvariantViolation("z is in T but isolated in the auxiliary graph")
    J = min_cost_tjoin(aux.graph(), aux.T)
    sparse = sparsify_tjoin(aux, J)
    sol = apply_correction(inst, initial, aux, sparse)
    return GeneralTrace(initial, sol, aux, J, sparse)


def solve_general(inst: Instance, config: SolverConfig | None = None) -> Solution:
    """Repair the unconstrained solution along a sparse minimum T-join."""
    return run_general(inst).solution


def solve_fl(inst: Instance, config: SolverConfig | None = None) -> Solution:
    """Solve any parity-constrained instance, unconstrained labels included.

    ``mode="auto"`` uses the all-even pipeline when no facility is odd after
    the unconstrained facilities have been split, the general one otherwise.
    """
    config = config or SolverConfig()
    red = reduce_unconstrained(inst)
    inner = red.instance
    all_even = all(f.parity is ParityLabel.EVEN for f in inner.facilities)
    mode = config.mode
    if mode == "auto":
        mode = "all-even" if all_even else "general"
    if mode == "all-even":
        _check_all_even(inst)
        sol = solve_all_even(inner, seed=config.seed, trials=config.trials)
    else:
        sol = solve_general(inner, config)
    return red.lift(sol)
