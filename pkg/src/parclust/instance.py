"""Problem instances, solutions and the basic operations on them.

An :class:`Instance` is immutable.  Points are stored in a fixed order,
facilities first and clients after them, and ``dist`` is the full symmetric
matrix over that order (facility-facility and client-client entries are
needed by the matching and auxiliary-graph steps).

Numbers are kept as given: ``int``/``Fraction`` inputs stay exact all the
way through the solvers, ``float`` inputs are handled with a small relative
tolerance where comparisons matter.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from parclust._num import Number, is_exact
from parclust.errors import StructuralError

DEFAULT_EPS = 1e-9


class ParityLabel(str, enum.Enum):
    ODD = "odd"
    EVEN = "even"
    UNCONSTRAINED = "unconstrained"

    def accepts(self, count: int) -> bool:
        if self is ParityLabel.ODD:
            return count % 2 == 1
        if self is ParityLabel.EVEN:
            return count % 2 == 0
        return True


@dataclass(frozen=True)
class Facility:
    id: str
    open_cost: Number
    parity: ParityLabel = ParityLabel.EVEN


@dataclass(frozen=True)
class Instance:
    facilities: tuple[Facility, ...]
    clients: tuple[str, ...]
    dist: tuple[tuple[Number, ...], ...]
    name: str = ""
    _index: Mapping[str, int] = field(init=False, repr=False, compare=False)
    _fac: Mapping[str, Facility] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = [f.id for f in self.facilities] + list(self.clients)
        dup = [x for x, c in Counter(ids).items() if c > 1]
        if dup:
            raise StructuralError(f"duplicate ids: {sorted(dup)}")
        n = len(ids)
        if len(self.dist) != n or any(len(row) != n for row in self.dist):
            raise StructuralError(f"distance matrix must be {n}x{n}")
        for f in self.facilities:
            if f.open_cost < 0:
                raise StructuralError(f"negative opening cost at {f.id}")
            if not isinstance(f.parity, ParityLabel):
                raise StructuralError(f"bad parity label at {f.id}: {f.parity!r}")
        object.__setattr__(self, "_index", MappingProxyType({x: k for k, x in enumerate(ids)}))
        object.__setattr__(self, "_fac", MappingProxyType({f.id: f for f in self.facilities}))

    @classmethod
    def build(
        cls,
        facilities: Iterable[Facility],
        clients: Iterable[str],
        dist: Sequence[Sequence[Number]],
        name: str = "",
    ) -> Instance:
        return cls(tuple(facilities), tuple(clients), tuple(tuple(r) for r in dist), name)

    @property
    def point_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.facilities) + self.clients

    @property
    def facility_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.facilities)

    def index(self, x: str) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise StructuralError(f"unknown id {x!r}") from None

    def facility(self, i: str) -> Facility:
        try:
            return self._fac[i]
        except KeyError:
            raise StructuralError(f"unknown facility {i!r}") from None

    def is_facility(self, x: str) -> bool:
        return x in self._fac

    def d(self, x: str, y: str) -> Number:
        return self.dist[self.index(x)][self.index(y)]

    def f(self, i: str) -> Number:
        return self.facility(i).open_cost

    def parity(self, i: str) -> ParityLabel:
        return self.facility(i).parity

    def with_labels(self, label: ParityLabel) -> Instance:
        """Copy of the instance with every facility relabelled."""
        facs = [Facility(f.id, f.open_cost, label) for f in self.facilities]
        return Instance(tuple(facs), self.clients, self.dist, self.name)

    @property
    def exact(self) -> bool:
        return all(is_exact(f.open_cost) for f in self.facilities) and all(
            is_exact(v) for row in self.dist for v in row
        )


@dataclass(frozen=True)
class Solution:
    """Open facilities and a client -> facility assignment."""

    open_set: frozenset[str]
    assignment: Mapping[str, str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "open_set", frozenset(self.open_set))
        object.__setattr__(self, "assignment", MappingProxyType(dict(self.assignment)))

    @classmethod
    def from_assignment(cls, assignment: Mapping[str, str], extra_open: Iterable[str] = ()) -> Solution:
        return cls(frozenset(assignment.values()) | frozenset(extra_open), assignment)

    def clusters(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {i: [] for i in self.open_set}
        for j, i in self.assignment.items():
            out.setdefault(i, []).append(j)
        return out

    def counts(self) -> Counter:
        return Counter(self.assignment.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Solution):
            return NotImplemented
        return self.open_set == other.open_set and dict(self.assignment) == dict(other.assignment)

    def __hash__(self) -> int:
        return hash((self.open_set, frozenset(self.assignment.items())))


EMPTY_SOLUTION = Solution(frozenset(), {})


# --------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    triangles: list[tuple[str, str, str, Number]] = field(default_factory=list)
    asymmetric: list[tuple[str, str]] = field(default_factory=list)
    negative: list[tuple[str, str]] = field(default_factory=list)
    nonzero_diagonal: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.triangles or self.asymmetric or self.negative or self.nonzero_diagonal)

    def lines(self) -> list[str]:
        out = [f"negative distance d({a},{b})" for a, b in self.negative]
        out += [f"d({x},{x}) != 0" for x in self.nonzero_diagonal]
        out += [f"asymmetric d({a},{b}) != d({b},{a})" for a, b in self.asymmetric]
        out += [f"triangle violated: d({x},{z}) > d({x},{y}) + d({y},{z}) by {s}" for x, z, y, s in self.triangles]
        return out


def validate_metric(ids: Sequence[str], d: Sequence[Sequence[Number]], eps: float = DEFAULT_EPS) -> ValidationReport:
    """Report every metric-axiom violation of ``d``.

    Each violated triangle is listed once as ``(x, z, y, slack)`` with
    ``x`` before ``z`` in ``ids``, meaning ``d(x,z)`` exceeds the detour
    through ``y`` by ``slack``.  Exact inputs are checked exactly; floating
    inputs get a relative tolerance ``eps``.
    """
    n = len(ids)
    rep = ValidationReport()
    for a in range(n):
        if d[a][a] != 0:
            rep.nonzero_diagonal.append(ids[a])
        for b in range(a + 1, n):
            if d[a][b] < 0 or d[b][a] < 0:
                rep.negative.append((ids[a], ids[b]))
            if d[a][b] != d[b][a]:
                if is_exact(d[a][b]) and is_exact(d[b][a]) or not math.isclose(d[a][b], d[b][a], rel_tol=eps):
                    rep.asymmetric.append((ids[a], ids[b]))
    for x in range(n):
        dx = d[x]
        for z in range(x + 1, n):
            dxz = dx[z]
            for y in range(n):
                if y == x or y == z:
                    continue
                via = dx[y] + d[y][z]
                slack = dxz - via
                if slack <= 0:
                    continue
                if is_exact(slack) or slack > eps * max(abs(dxz), abs(via)):
                    rep.triangles.append((ids[x], ids[z], ids[y], slack))
    return rep


def validate_instance(inst: Instance, eps: float = DEFAULT_EPS) -> ValidationReport:
    return validate_metric(inst.point_ids, inst.dist, eps)


class DisconnectedMetric(StructuralError):
    pass


def metric_closure(raw: Sequence[Sequence[Number | None]], ids: Sequence[str] | None = None) -> list[list[Number]]:
    """All-pairs shortest-path closure (Floyd-Warshall).

    Missing pairs may be given as ``None`` or ``math.inf``.  Raises
    :class:`DisconnectedMetric` naming the first pair left unreachable.
    """
    n = len(raw)
    inf = math.inf
    d: list[list[Number]] = [
        [inf if v is None else v for v in row] for row in raw
    ]
    for a in range(n):
        if len(d[a]) != n:
            raise StructuralError("distance matrix must be square")
        d[a][a] = 0
    for k in range(n):
        dk = d[k]
        for a in range(n):
            dak = d[a][k]
            if dak == inf:
                continue
            da = d[a]
            for b in range(n):
                alt = dak + dk[b]
                if alt < da[b]:
                    da[b] = alt
    for a in range(n):
        for b in range(a + 1, n):
            if d[a][b] == inf:
                name = (ids[a], ids[b]) if ids is not None else (a, b)
                raise DisconnectedMetric(f"no path between {name[0]} and {name[1]}")
    return d


# --------------------------------------------------------------------------
# solution evaluation


def check_structure(inst: Instance, sol: Solution) -> None:
    """Raise :class:`StructuralError` unless ``sol`` is a well-formed solution of ``inst``."""
    for i in sol.open_set:
        if not inst.is_facility(i):
            raise StructuralError(f"open set contains non-facility {i!r}")
    clients = set(inst.clients)
    for j, i in sol.assignment.items():
        if j not in clients:
            raise StructuralError(f"assignment references unknown client {j!r}")
        if i not in sol.open_set:
            raise StructuralError(f"client {j!r} assigned to closed or unknown facility {i!r}")
    missing = clients - set(sol.assignment)
    if missing:
        raise StructuralError(f"unassigned clients: {sorted(missing)}")


def opening_cost(inst: Instance, sol: Solution) -> Number:
    return sum((inst.f(i) for i in sorted(sol.open_set, key=inst.index)), 0)


def connection_cost(inst: Instance, sol: Solution) -> Number:
    return sum((inst.d(i, j) for j, i in sol.assignment.items()), 0)


def solution_cost(inst: Instance, sol: Solution) -> Number:
    """Opening plus connection cost; parity is not checked here."""
    check_structure(inst, sol)
    return opening_cost(inst, sol) + connection_cost(inst, sol)


def parity_violations(inst: Instance, sol: Solution) -> set[str]:
    counts = sol.counts()
    return {i for i in sol.open_set if not inst.parity(i).accepts(counts.get(i, 0))}


def is_feasible(inst: Instance, sol: Solution) -> bool:
    check_structure(inst, sol)
    return not parity_violations(inst, sol)


def drop_empty(sol: Solution) -> Solution:
    """Close every open facility with no client (never raises the cost)."""
    used = frozenset(sol.assignment.values())
    if used == sol.open_set:
        return sol
    return Solution(used, sol.assignment)


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.feasible


def feasibility_precheck(inst: Instance) -> Feasibility:
    """Decide whether any parity-feasible solution exists.

    Odd facilities contribute odd cluster sizes (at least one client each),
    even facilities contribute even sizes (possibly zero), so only the
    parity of ``|D|`` and the label counts matter.
    """
    labels = [f.parity for f in inst.facilities]
    if ParityLabel.UNCONSTRAINED in labels:
        raise StructuralError("feasibility_precheck needs odd/even labels; reduce unconstrained facilities first")
    n_d = len(inst.clients)
    n_odd = labels.count(ParityLabel.ODD)
    n_even = labels.count(ParityLabel.EVEN)
    if n_d == 0:
        return Feasibility(True)
    if n_d % 2 == 1:
        if n_odd >= 1:
            return Feasibility(True)
        return Feasibility(False, f"|D|={n_d} is odd but no facility is odd-constrained")
    if n_even >= 1 or n_odd >= 2:
        return Feasibility(True)
    if n_odd == 1:
        return Feasibility(False, f"|D|={n_d} is even and the only facility is odd-constrained")
    return Feasibility(False, "no facilities")


# --------------------------------------------------------------------------
# unconstrained facilities


@dataclass(frozen=True)
class Reduction:
    instance: Instance
    origin: Mapping[str, str]  # reduced facility id -> original facility id

    def lift(self, sol: Solution) -> Solution:
        """Map a reduced-instance solution back by collapsing the copies."""
        assignment = {j: self.origin[i] for j, i in sol.assignment.items()}
        return Solution(frozenset(self.origin[i] for i in sol.open_set), assignment)


def _fresh(base: str, taken: set[str]) -> str:
    cand = base
    while cand in taken:
        cand += "'"
    taken.add(cand)
    return cand


def reduce_unconstrained(inst: Instance) -> Reduction:
    """Replace every unconstrained facility by an odd and an even copy.

    Both copies sit at the original's location (distance 0 from each other)
    and carry its opening cost.  Odd/even facilities pass through unchanged.
    """
    if all(f.parity is not ParityLabel.UNCONSTRAINED for f in inst.facilities):
        return Reduction(inst, MappingProxyType({f.id: f.id for f in inst.facilities}))
    taken = set(inst.point_ids)
    facs: list[Facility] = []
    src: list[int] = []  # index into the original point order
    origin: dict[str, str] = {}
    for k, fac in enumerate(inst.facilities):
        if fac.parity is ParityLabel.UNCONSTRAINED:
            for lab in (ParityLabel.ODD, ParityLabel.EVEN):
                cid = _fresh(f"{fac.id}~{lab.value}", taken)
                facs.append(Facility(cid, fac.open_cost, lab))
                src.append(k)
                origin[cid] = fac.id
        else:
            facs.append(fac)
            src.append(k)
            origin[fac.id] = fac.id
    nf = len(inst.facilities)
    src += [nf + j for j in range(len(inst.clients))]
    dist = tuple(tuple(inst.dist[a][b] for b in src) for a in src)
    reduced = Instance(tuple(facs), inst.clients, dist, inst.name)
    return Reduction(reduced, MappingProxyType(origin))
