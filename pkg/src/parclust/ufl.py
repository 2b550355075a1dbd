"""Primal-dual 3-approximation for uncapacitated facility location.

Client duals grow at unit rate.  A facility becomes temporarily open once
the clients' contributions ``max(0, alpha_j - c_ij)`` pay for it; a client
stops growing as soon as it reaches a temporarily open facility.  Among the
temporarily open facilities a maximal conflict-free subset is kept (two
facilities conflict when some client contributes positively to both).

The output is normalised: every client goes to its nearest open facility
and facilities left without clients are closed.  Both steps only lower the
cost, so ``cost <= 3 * sum(alpha) <= 3 * OPT``.

Parity labels are ignored here.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from parclust._num import Number, div
from parclust.errors import InfeasibleInstance
from parclust.instance import Instance, Solution, drop_empty

log = logging.getLogger(__name__)

RHO_FL = 3


@dataclass(frozen=True)
class UflResult:
    solution: Solution
    rho_guarantee: int
    duals: Mapping[str, Number]
    temporarily_open: tuple[str, ...]


def _payment_time(need: Number, cs: Sequence[Number], now: Number) -> Number | None:
    """Earliest ``t >= now`` with ``sum(max(0, t - c) for c in cs) >= need``."""
    if need <= 0:
        return now
    k = 0
    s: Number = 0
    for c in sorted(cs):
        if k:
            t = div(need + s, k)
            if t <= c:
                return max(t, now)
        k += 1
        s += c
    if not k:
        return None
    return max(div(need + s, k), now)


def nearest_assignment(inst: Instance, open_set: Iterable[str], clients: Iterable[str]) -> dict[str, str]:
    order = sorted(open_set, key=inst.index)
    if not order:
        raise InfeasibleInstance("no open facility to assign clients to")
    out = {}
    for j in clients:
        # min() keeps the first minimiser, i.e. the earliest facility.
        out[j] = min(order, key=lambda i: inst.d(i, j))
    return out


def solve_ufl(inst: Instance, clients: Sequence[str] | None = None) -> UflResult:
    """Run the primal-dual scheme on ``inst`` (optionally on a client subset)."""
    clients = list(inst.clients if clients is None else clients)
    fac = list(inst.facility_ids)
    if not clients:
        return UflResult(Solution(frozenset(), {}), RHO_FL, {}, ())
    if not fac:
        raise InfeasibleInstance("clients present but no facilities")

    c = {(i, j): inst.d(i, j) for i in fac for j in clients}
    alpha: dict[str, Number] = {}
    active = list(clients)  # instance order
    paid = {i: 0 for i in fac}  # contributions of frozen clients
    tmp_open: list[str] = []
    now: Number = 0

    def freeze(j: str, t: Number) -> None:
        alpha[j] = t
        active.remove(j)
        for i in fac:
            if i not in tmp_open and t > c[i, j]:
                paid[i] += t - c[i, j]

    while active:
        tc = None
        jc = None
        if tmp_open:
            for j in active:
                t = min(c[i, j] for i in tmp_open)
                if tc is None or t < tc:
                    tc, jc = t, j
        tf = None
        fc = None
        for i in fac:
            if i in tmp_open:
                continue
            t = _payment_time(inst.f(i) - paid[i], [c[i, j] for j in active], now)
            if t is not None and (tf is None or t < tf):
                tf, fc = t, i
        if tc is not None and (tf is None or tc <= tf):
            now = max(now, tc)
            freeze(jc, now)
            continue
        assert fc is not None
        now = tf
        tmp_open.append(fc)
        log.debug("facility %s temporarily open at t=%s", fc, now)
        for j in [j for j in active if c[fc, j] <= now]:
            freeze(j, now)

    chosen: list[str] = []
    for i in sorted(tmp_open, key=inst.index):
        if all(not any(alpha[j] > c[i, j] and alpha[j] > c[k, j] for j in clients) for k in chosen):
            chosen.append(i)
    assignment = nearest_assignment(inst, chosen, clients)
    sol = drop_empty(Solution(frozenset(chosen), assignment))
    return UflResult(sol, RHO_FL, alpha, tuple(tmp_open))
