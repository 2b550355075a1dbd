"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Each test records its verdict before asserting, so a failing criterion
still prints its measured numbers.
"""

import math
import statistics
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from helpers import footnote2, random_kc, random_weights
from parclust._num import leq
from parclust.errors import InfeasibleInstance
from parclust.fl import all_even_trial, check_sparse, client_matching, run_general, solve_all_even, solve_general
from parclust.generate import GenParams, generate_instance
from parclust.instance import (
    connection_cost,
    opening_cost,
    parity_violations,
    reduce_unconstrained,
    solution_cost,
)
from parclust.kcenter import kcenter_violations, max_assignment_distance, solve_kcenter
from parclust.matching import matching_cost, min_cost_perfect_matching
from parclust.oracle import brute_matching, brute_tjoin, exact_fl, exact_kcenter, exact_ufl
from parclust.tjoin import WeightedGraph, min_cost_tjoin
from parclust.ufl import solve_ufl

GEOMETRIES = ("random-metric", "euclidean")


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def crit1_suite():
    """500 precheck-passing instances, |F| in [1,6], |D| in [0,10], all three labels."""
    rng = np.random.default_rng(1001)
    out = []
    for seed in range(500):
        nf, nd = int(rng.integers(1, 7)), int(rng.integers(0, 11))
        params = GenParams("fl", nf, nd, geometry=GEOMETRIES[seed % 2], parity_mix=(1, 1, 1), feasible_only=True)
        out.append(generate_instance(params, 10_000 + seed))
    return out


def oracle_suite():
    """Odd/even instances small enough for the exact oracle: |F| <= 5, |D| <= 8."""
    rng = np.random.default_rng(2002)
    out = []
    for seed in range(240):
        nf, nd = int(rng.integers(1, 6)), int(rng.integers(0, 9))
        params = GenParams("fl", nf, nd, geometry=GEOMETRIES[seed % 2], parity_mix=(1, 1, 0), feasible_only=True)
        out.append(generate_instance(params, 20_000 + seed))
    return out


SUITE_SECONDS: dict[str, float] = {}


@pytest.fixture(scope="module")
def solved_oracle_suite():
    t0 = time.perf_counter()
    rows = []
    for inst in oracle_suite():
        trace = run_general(inst)
        rows.append((inst, trace, exact_fl(inst)))
    SUITE_SECONDS["oracle"] = time.perf_counter() - t0
    return rows


def test_criterion_01_feasibility_fl():
    t0 = time.perf_counter()
    bad, sparse_failures = [], []
    for inst in crit1_suite():
        red = reduce_unconstrained(inst)
        trace = run_general(red.instance)
        sol = red.lift(trace.solution)
        if parity_violations(inst, sol):
            bad.append(inst.name)
        if trace.sparse is not None:
            try:
                check_sparse(trace.aux, trace.sparse.edge_set)
                assert leq(trace.sparse.total_cost, trace.tjoin.total_cost)
            except Exception as exc:  # recorded for criterion 6
                sparse_failures.append(f"{inst.name}: {exc}")
    elapsed = time.perf_counter() - t0
    test_criterion_01_feasibility_fl.sparse_failures = sparse_failures
    ok = not bad and elapsed < 10
    verdict(1, ok, f"500 instances, {len(bad)} with parity violations, {elapsed:.2f} s (limit 10 s)")
    assert not bad, bad[:5]
    assert elapsed < 10


def test_criterion_02_ratio_general(solved_oracle_suite):
    worst, over = 0.0, []
    for inst, trace, opt in solved_oracle_suite:
        cost = solution_cost(inst, trace.solution)
        if not leq(cost, 11 * opt.optimum_value):
            over.append(inst.name)
        if opt.optimum_value > 0:
            worst = max(worst, float(cost) / float(opt.optimum_value))
        elif cost > 1e-12:
            worst = math.inf
    n = len(solved_oracle_suite)
    total = SUITE_SECONDS["oracle"]
    ok = not over and n >= 200 and total < 120
    verdict(2, ok, f"{n} instances, max ratio {worst:.3f} (bound 11), {len(over)} over, {total:.1f} s (limit 120 s)")
    assert not over and n >= 200 and total < 120


def all_even_suite():
    rng = np.random.default_rng(3003)
    out = []
    for seed in range(220):
        nf, nd = int(rng.integers(1, 6)), 2 * int(rng.integers(0, 5))
        params = GenParams("fl", nf, nd, geometry=GEOMETRIES[seed % 2], parity_mix=(0, 1, 0))
        out.append(generate_instance(params, 30_000 + seed))
    return out


def test_criterion_03_ratio_all_even():
    worst, over = 0.0, []
    suite = all_even_suite()
    for inst in suite:
        opt = exact_fl(inst).optimum_value
        cost = solution_cost(inst, solve_all_even(inst, seed=0, trials=16))
        if not leq(cost, 6 * opt):
            over.append(inst.name)
        if opt > 0:
            worst = max(worst, float(cost) / float(opt))
    # single-trial mean on one fixed instance versus (rho+1) c(sigma_O) + 2 rho f(S_O)
    inst = generate_instance(GenParams("fl", 5, 8, geometry="random-metric", parity_mix=(0, 1, 0)), 4242)
    opt = exact_fl(inst)
    rho = 3
    bound = (rho + 1) * connection_cost(inst, opt.witness) + 2 * rho * opening_cost(inst, opt.witness)
    matching = client_matching(inst)
    costs = [
        float(solution_cost(inst, all_even_trial(inst, matching, np.random.default_rng(s))[0])) for s in range(200)
    ]
    mean = statistics.fmean(costs)
    se = statistics.stdev(costs) / math.sqrt(len(costs))
    mean_ok = mean <= float(bound) + 3 * se
    ok = not over and len(suite) >= 200 and mean_ok
    verdict(
        3,
        ok,
        f"{len(suite)} instances, max best-of-16 ratio {worst:.3f} (bound 6), {len(over)} over; "
        f"single-trial mean {mean:.3f} +- {se:.3f} vs bound {float(bound):.3f}",
    )
    assert not over and len(suite) >= 200 and mean_ok


def test_criterion_04_footnote_gap():
    inst = footnote2()
    ufl = solution_cost(inst, solve_ufl(inst).solution)
    relax = exact_ufl(inst).optimum_value
    opt = exact_fl(inst).optimum_value
    cost = solution_cost(inst, solve_general(inst))
    ok = relax == 0 and ufl == 0 and opt == 1 and cost == 1
    verdict(4, ok, f"relaxation {relax}, baseline {ufl}, oracle {opt}, solve_general {cost} (expected 0, 0, 1, 1)")
    assert ok


def _random_graph(rng):
    n = int(rng.integers(1, 9))
    m = int(rng.integers(0, 17))
    edges = []
    for _ in range(m):
        u, v = int(rng.integers(0, n)), int(rng.integers(0, n))
        if u != v:
            edges.append((u, v, int(rng.integers(0, 10))))
    k = 2 * int(rng.integers(0, n // 2 + 1))
    T = [int(x) for x in rng.choice(n, size=k, replace=False)] if k else []
    return WeightedGraph.build(range(n), edges), T


def test_criterion_05_tjoin_and_matching():
    rng = np.random.default_rng(5005)
    tj_bad = 0
    checked = 0
    while checked < 200:
        g, T = _random_graph(rng)
        try:
            want = brute_tjoin(g, T)[0]
        except InfeasibleInstance:
            with pytest.raises(InfeasibleInstance):
                min_cost_tjoin(g, T)
            continue
        checked += 1
        if min_cost_tjoin(g, T).total_cost != want:
            tj_bad += 1
    m_bad = 0
    for _ in range(200):
        n = 2 * int(rng.integers(0, 6))
        w = random_weights(rng, n)
        if matching_cost(w, min_cost_perfect_matching(w)) != brute_matching(w)[0]:
            m_bad += 1
    ok = tj_bad == 0 and m_bad == 0
    verdict(5, ok, f"T-join mismatches {tj_bad}/200, matching mismatches {m_bad}/200")
    assert ok


def test_criterion_06_sparsification_invariants():
    failures = getattr(test_criterion_01_feasibility_fl, "sparse_failures", None)
    if failures is None:
        test_criterion_01_feasibility_fl()
        failures = test_criterion_01_feasibility_fl.sparse_failures
    verdict(6, not failures, f"{len(failures)} assertion failures over the criterion 1 runs")
    assert not failures, failures[:5]


def test_criterion_07_tjoin_upper_bound(solved_oracle_suite):
    bad, used = [], 0
    for inst, trace, opt in solved_oracle_suite:
        if trace.tjoin is None:
            continue
        used += 1
        rhs = 2 * (
            connection_cost(inst, trace.initial.solution)
            + connection_cost(inst, opt.witness)
            + opening_cost(inst, opt.witness)
        )
        if not leq(trace.tjoin.total_cost, rhs):
            bad.append(inst.name)
    verdict(7, not bad, f"{used} instances needed a T-join, {len(bad)} above the bound")
    assert not bad


def kcenter_suite():
    rng = np.random.default_rng(8008)
    out = []
    for seed in range(300):
        n, k = int(rng.integers(1, 11)), int(rng.integers(1, 4))
        out.append(random_kc(80_000 + seed, n, k, mix=(1, 1, 1), geometry=GEOMETRIES[seed % 2]))
    return out


def test_criterion_08_kcenter():
    t0 = time.perf_counter()
    infeasible, over, differ = [], [], []
    worst = 0.0
    for inst in kcenter_suite():
        tau = exact_kcenter(inst).optimum_value
        res = solve_kcenter(inst)
        lin = solve_kcenter(inst, linear_scan=True)
        for r in (res, lin):
            if kcenter_violations(inst, r.centers, r.assignment) or len(r.centers) > inst.k:
                infeasible.append(inst.name)
            if not leq(max_assignment_distance(inst, r.assignment), 6 * tau):
                over.append(inst.name)
        if res.radius != lin.radius or res.centers != lin.centers:
            differ.append(inst.name)
        if tau > 0:
            worst = max(worst, float(res.realized) / float(tau))
    elapsed = time.perf_counter() - t0
    ok = not infeasible and not over and not differ and elapsed < 120
    verdict(
        8,
        ok,
        f"300 instances, {len(infeasible)} infeasible, {len(over)} above 6 tau*, max ratio {worst:.3f}, "
        f"{len(differ)} where binary search and linear scan differ, {elapsed:.1f} s (limit 120 s)",
    )
    assert not infeasible and not over
    assert elapsed < 120
    assert not differ, f"binary search and linear scan disagree on {differ}"


def _timed_kcenter(n: int, seed: int) -> float:
    inst = generate_instance(GenParams("kcenter", 0, n, k=20, geometry="euclidean", parity_mix=(1, 1, 1)), seed)
    t = time.perf_counter()
    res = solve_kcenter(inst)
    elapsed = time.perf_counter() - t
    assert not kcenter_violations(inst, res.centers, res.assignment)
    return elapsed


@pytest.mark.slow
def test_criterion_09_kcenter_scaling():
    small = min(_timed_kcenter(2000, 9) for _ in range(3))
    large = min(_timed_kcenter(4000, 9) for _ in range(3))
    ratio = large / small
    ok = small < 30 and ratio < 5.5
    verdict(9, ok, f"|V|=2000: {small:.2f} s (limit 30 s), |V|=4000: {large:.2f} s, ratio {ratio:.2f} (limit 5.5)")
    assert ok


def test_criterion_10_ufl_baseline(solved_oracle_suite):
    bad, worst = [], 0.0
    for inst, trace, _ in solved_oracle_suite:
        cost = solution_cost(inst, trace.initial.solution)
        best = exact_ufl(inst).optimum_value
        if not leq(cost, 3 * best):
            bad.append(inst.name)
        if best > 0:
            worst = max(worst, float(cost) / float(best))
    verdict(10, not bad, f"{len(solved_oracle_suite)} instances, max ratio {worst:.3f} (bound 3), {len(bad)} over")
    assert not bad
