"""Parity-constrained k-center: a 6-approximation.

For a guessed radius ``tau`` the threshold graph ``G`` joins two nodes iff
their distance is at most ``tau``.  Each connected component is handled on
its own:

1. a greedy tree of centers, pairwise at hop distance >= 3, every node
   within 2 hops of its center, tree edges of hop length exactly 3;
2. the tree is rooted (possibly closing the root or opening one extra odd
   node) so that the number of parity-violating centers becomes even;
3. violating centers are joined by node-disjoint paths in the square of
   the tree and every path shifts one node along itself, which flips the
   parity of exactly its two endpoints.

Every reassignment stays within 6 hops, hence within ``6 * tau``.  The
smallest workable ``tau`` is found by binary search over the pairwise
distances.

Distances live in a numpy array so that the threshold graph and the capped
breadth-first searches are vectorised; the whole per-radius step is
``O(|V|^2)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from parclust._num import Number, leq
from parclust.errors import InfeasibleInstance, InvariantViolation, StructuralError
from parclust.instance import ParityLabel

log = logging.getLogger(__name__)

ODD, EVEN, FREE = ParityLabel.ODD, ParityLabel.EVEN, ParityLabel.UNCONSTRAINED


def as_distance_array(d) -> np.ndarray:
    """Numeric array for ``d``; rationals become an object array to stay exact."""
    if isinstance(d, np.ndarray) and d.dtype != object:
        arr = d
    else:
        rows = [list(r) for r in d]
        flat = [x for r in rows for x in r]
        if any(isinstance(x, Fraction) for x in flat):
            arr = np.array(rows, dtype=object).reshape(len(rows), len(rows))
        elif all(isinstance(x, (int, np.integer)) for x in flat):
            arr = np.array(rows, dtype=np.int64).reshape(len(rows), len(rows))
        else:
            arr = np.array(rows, dtype=np.float64).reshape(len(rows), len(rows))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise StructuralError("distance matrix must be square")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class KCenterInstance:
    nodes: tuple[str, ...]
    parity: tuple[ParityLabel, ...]
    dist: np.ndarray
    k: int
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "parity", tuple(ParityLabel(p) for p in self.parity))
        object.__setattr__(self, "dist", as_distance_array(self.dist))
        n = len(self.nodes)
        if len(set(self.nodes)) != n:
            raise StructuralError("duplicate node ids")
        if len(self.parity) != n or self.dist.shape != (n, n):
            raise StructuralError("parity labels and distance matrix must match the node list")
        if self.k < 1:
            raise StructuralError("k must be at least 1")
        if n and (self.dist < 0).any():
            raise StructuralError("negative distance")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KCenterInstance):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.parity == other.parity
            and self.k == other.k
            and self.dist.shape == other.dist.shape
            and bool((self.dist == other.dist).all())
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n(self) -> int:
        return len(self.nodes)

    def index(self, v: str) -> int:
        return self.nodes.index(v)


# --------------------------------------------------------------------------
# threshold graphs


@dataclass(frozen=True, eq=False)
class ThresholdGraph:
    tau: Number
    adjacency: np.ndarray
    components: list[np.ndarray]


def threshold_adjacency(dist: np.ndarray, tau: Number) -> np.ndarray:
    adj = np.asarray(dist <= tau, dtype=bool)
    np.fill_diagonal(adj, False)
    return adj


def connected_components(adj: np.ndarray, max_count: int | None = None) -> list[np.ndarray] | None:
    """Components as sorted index arrays; ``None`` once ``max_count`` is exceeded."""
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        if max_count is not None and len(comps) >= max_count:
            return None
        seen[s] = True
        parts = [np.array([s])]
        frontier = parts[0]
        while frontier.size:
            nxt = np.flatnonzero(adj[frontier].any(axis=0) & ~seen)
            seen[nxt] = True
            parts.append(nxt)
            frontier = nxt
        comps.append(np.sort(np.concatenate(parts)))
    return comps


def build_threshold_graph(inst: KCenterInstance, tau: Number) -> ThresholdGraph:
    if tau < 0:
        raise StructuralError("tau must be nonnegative")
    adj = threshold_adjacency(inst.dist, tau)
    return ThresholdGraph(tau, adj, connected_components(adj))


def hop_distances(adj: np.ndarray, source: int, cap: int) -> np.ndarray:
    """BFS hop distances from ``source``; nodes farther than ``cap`` get ``cap + 1``."""
    n = adj.shape[0]
    d = np.full(n, cap + 1, dtype=np.int64)
    d[source] = 0
    frontier = np.array([source])
    for level in range(1, cap + 1):
        nxt = np.flatnonzero(adj[frontier].any(axis=0) & (d > level))
        if not nxt.size:
            break
        d[nxt] = level
        frontier = nxt
    return d


# --------------------------------------------------------------------------
# greedy center tree


class _TooManyCenters(Exception):
    pass


@dataclass
class CenterTree:
    """Greedy centers of one connected graph (local indices).

    ``parent`` maps each center to the center it was attached to (``None``
    for the first one); ``assignment[v]`` is the center of node ``v``.
    """

    centers: list[int]
    parent: dict[int, int | None]
    assignment: np.ndarray
    root: int | None = None

    def edges(self) -> list[tuple[int, int]]:
        return [(p, c) for c, p in self.parent.items() if p is not None]


def initial_centers_tree(adj: np.ndarray, limit: int | None = None) -> CenterTree:
    """Greedy tree on a connected unweighted graph given by boolean ``adj``.

    Starting from node 0, repeatedly admits the smallest node at hop
    distance exactly 3 from all chosen centers.  Distances to the centers
    are kept capped at 4 and a search from a new center only walks through
    nodes whose distance it improves, so each node is touched at most four
    times overall.
    """
    n = adj.shape[0]
    if n == 0:
        raise StructuralError("empty component")
    dist = np.full(n, 4, dtype=np.int8)
    owner = np.full(n, -1, dtype=np.int64)

    def admit(s: int) -> None:
        dist[s] = 0
        owner[s] = s
        frontier = np.array([s])
        for level in (1, 2, 3):
            nxt = np.flatnonzero(adj[frontier].any(axis=0) & (dist > level))
            if not nxt.size:
                return
            dist[nxt] = level
            owner[nxt] = s
            frontier = nxt

    centers = [0]
    parent: dict[int, int | None] = {0: None}
    admit(0)
    while True:
        cand = np.flatnonzero(dist == 3)
        if not cand.size:
            break
        v = int(cand[0])
        parent[v] = int(owner[v])
        centers.append(v)
        if limit is not None and len(centers) > limit:
            raise _TooManyCenters
        admit(v)
    if (dist > 2).any():
        raise StructuralError("initial_centers_tree needs a connected graph")
    return CenterTree(centers, parent, owner.copy())


# --------------------------------------------------------------------------
# one component


@dataclass
class ComponentSolution:
    centers: list[int]
    assignment: np.ndarray
    case: str
    tree: CenterTree
    root: int | None = None
    added: int | None = None
    paths: list[list[int]] = field(default_factory=list)
    initial_size: int = 0


def _invalid(labels: Sequence[ParityLabel], open_: set[int], counts: np.ndarray) -> list[int]:
    return sorted(u for u in open_ if not labels[u].accepts(int(counts[u])))


def _finish(labels, open_: set[int], sigma: np.ndarray, **kw) -> ComponentSolution:
    counts = np.bincount(sigma, minlength=len(labels))
    if any(int(sigma[u]) not in open_ for u in range(len(labels))):
        raise InvariantViolation("node assigned to a closed center")
    bad = _invalid(labels, open_, counts)
    if bad:
        raise InvariantViolation(f"centers with wrong parity after reassignment: {bad}")
    used = sorted(u for u in open_ if counts[u] > 0)
    return ComponentSolution(used, sigma, **kw)


def _reassignment_paths(children: dict[int, list[int]], root: int, invalid: set[int]) -> list[list[int]]:
    """Node-disjoint paths in the tree square pairing up the invalid nodes."""
    order = []
    stack = [root]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(children[u])
    exposed: dict[int, list[int] | None] = {}
    paths: list[list[int]] = []
    for u in reversed(order):  # children before parents
        ex = [exposed[c] for c in children[u] if exposed[c] is not None]
        for a in range(0, len(ex) - 1, 2):
            paths.append(ex[a] + ex[a + 1][::-1])
        left = ex[-1] if len(ex) % 2 else None
        if left is not None:
            p = left + [u]
            if u in invalid:
                paths.append(p)
                exposed[u] = None
            else:
                exposed[u] = p
        else:
            exposed[u] = [u] if u in invalid else None
    if exposed[root] is not None:
        raise InvariantViolation("odd number of invalid centers left an exposed path at the root")
    return paths


def solve_component(
    adj: np.ndarray, labels: Sequence[ParityLabel], limit: int | None = None
) -> ComponentSolution | None:
    """Parity-feasible centers for one connected threshold graph.

    ``labels`` must be odd/even only.  Returns ``None`` exactly when
    ``|V|`` is odd and every node is even-constrained.  ``limit`` aborts
    early (raising an internal exception) once the greedy tree alone rules
    out finishing with ``limit - 1`` centers.
    """
    n = len(labels)
    if FREE in labels:
        raise StructuralError("substitute unconstrained labels before solve_component")
    if n % 2 == 1 and all(lab is EVEN for lab in labels):
        return None
    tree = initial_centers_tree(adj, limit)
    sigma = tree.assignment.copy()
    open_ = set(tree.centers)
    size0 = len(tree.centers)
    counts = np.bincount(sigma, minlength=n)
    inv = _invalid(labels, open_, counts)
    if not inv:
        return _finish(labels, open_, sigma, case="valid", tree=tree, initial_size=size0)

    if len(tree.centers) == 1:
        s = tree.centers[0]
        want = ODD if n % 2 else EVEN
        swap = next((u for u in range(n) if labels[u] is want), None)
        if swap is not None:
            sigma[:] = swap
            return _finish(labels, {swap}, sigma, case="small-swap", tree=tree, initial_size=size0)
        v = next(u for u in range(n) if u != s and labels[u] is ODD)
        sigma[v] = v
        return _finish(labels, {s, v}, sigma, case="small-add", tree=tree, initial_size=size0)

    nbrs: dict[int, set[int]] = {u: set() for u in tree.centers}
    for p, c in tree.edges():
        nbrs[p].add(c)
        nbrs[c].add(p)
    added = None
    odd_open = [u for u in sorted(open_) if labels[u] is ODD]
    if len(inv) % 2 == 0:
        case, root = "A", min(open_)
    elif odd_open:
        case, root = "B", odd_open[0]
    else:
        case = "C"
        added = next((u for u in range(n) if u not in open_ and labels[u] is ODD), None)
        if added is None:
            raise InvariantViolation("case C without a closed odd-constrained node")
        host = int(sigma[added])
        nbrs[added] = {host}
        nbrs[host].add(added)
        open_.add(added)
        root = inv[0]

    children: dict[int, list[int]] = {}
    seen = {root}
    queue = [root]
    for u in queue:
        children[u] = sorted(w for w in nbrs[u] if w not in seen)
        seen.update(children[u])
        queue.extend(children[u])

    if case in ("B", "C"):
        c = next(w for w in children[root] if w != added)
        sigma[sigma == root] = c
        open_.discard(root)

    counts = np.bincount(sigma, minlength=n)
    inv = _invalid(labels, open_, counts)
    if len(inv) % 2:
        raise InvariantViolation(f"odd number of invalid centers after rooting (case {case})")

    paths = _reassignment_paths(children, root, set(inv))
    _check_paths(paths, inv, root, children)
    for p in paths:
        if added is not None and added in p:
            if p[0] == added:
                p.reverse()
        elif p[0] > p[-1]:
            p.reverse()
        for a, b in zip(p, p[1:]):
            if sigma[a] != a:
                raise InvariantViolation(f"path node {a} is not assigned to itself")
            sigma[a] = b
    return _finish(
        labels, open_, sigma, case=case, tree=tree, root=root, added=added, paths=paths, initial_size=size0
    )


def _check_paths(paths: list[list[int]], inv: list[int], root: int, children: dict[int, list[int]]) -> None:
    parent = {c: u for u, cs in children.items() for c in cs}
    seen: set[int] = set()
    ends = []
    for p in paths:
        if len(p) < 2:
            raise InvariantViolation("trivial reassignment path")
        if seen.intersection(p) or len(set(p)) != len(p):
            raise InvariantViolation("reassignment paths are not node-disjoint")
        seen.update(p)
        ends += [p[0], p[-1]]
        for a, b in zip(p, p[1:]):
            close = parent.get(a) == b or parent.get(b) == a or (a in parent and parent.get(b) == parent[a])
            if not close:
                raise InvariantViolation(f"path step {a}-{b} is not an edge of the tree square")
    if sorted(ends) != sorted(inv):
        raise InvariantViolation("path endpoints do not match the invalid centers")
    if root in seen and root not in inv:
        raise InvariantViolation("valid root lies on a reassignment path")


# --------------------------------------------------------------------------
# driver


@dataclass(frozen=True)
class KCenterResult:
    centers: tuple[str, ...]
    assignment: Mapping[str, str]
    radius: Number  # the accepted guess tau
    realized: Number  # max distance from a node to its center
    evaluations: int = field(default=0, compare=False)  # radii tried


@dataclass
class _Attempt:
    ok: bool
    reason: str = ""
    centers: list[int] = field(default_factory=list)
    sigma: np.ndarray | None = None
    adj: np.ndarray | None = None


def component_labels(parity: Sequence[ParityLabel], comp: np.ndarray) -> list[ParityLabel]:
    """Labels of a component with unconstrained nodes set to the parity of its size."""
    free_as = ODD if len(comp) % 2 else EVEN
    return [free_as if parity[v] is FREE else parity[v] for v in comp]


def _attempt(inst: KCenterInstance, tau: Number) -> _Attempt:
    adj = threshold_adjacency(inst.dist, tau)
    comps = connected_components(adj, max_count=inst.k)
    if comps is None:
        return _Attempt(False, f"more than k={inst.k} components")
    labels = [component_labels(inst.parity, c) for c in comps]
    for comp, lab in zip(comps, labels):
        if len(comp) % 2 and all(x is EVEN for x in lab):
            return _Attempt(False, f"component of odd size {len(comp)} has only even-constrained nodes")
    sigma = np.empty(inst.n, dtype=np.int64)
    centers: list[int] = []
    for comp, lab in zip(comps, labels):
        sub = adj if len(comp) == inst.n else adj[np.ix_(comp, comp)]
        try:
            res = solve_component(sub, lab, limit=inst.k - len(centers) + 1)
        except _TooManyCenters:
            return _Attempt(False, f"more than k={inst.k} centers")
        assert res is not None
        centers += [int(comp[u]) for u in res.centers]
        if len(centers) > inst.k:
            return _Attempt(False, f"more than k={inst.k} centers")
        sigma[comp] = comp[res.assignment]
    return _Attempt(True, centers=sorted(centers), sigma=sigma, adj=adj)


def candidate_radii(dist: np.ndarray) -> np.ndarray:
    n = dist.shape[0]
    iu = np.triu_indices(n, 1)
    vals = dist[iu]
    zero = np.zeros(1, dtype=dist.dtype) if dist.dtype != object else np.array([0], dtype=object)
    return np.unique(np.concatenate([zero, vals]))


def _certify(inst: KCenterInstance, tau: Number, att: _Attempt) -> Number:
    sigma, adj = att.sigma, att.adj
    assert sigma is not None and adj is not None
    counts = np.bincount(sigma, minlength=inst.n)
    if len(att.centers) > inst.k:
        raise InvariantViolation("too many centers")
    for u in range(inst.n):
        if counts[u] and u not in att.centers:
            raise InvariantViolation(f"node assigned to non-center {inst.nodes[u]}")
    for u in att.centers:
        if not inst.parity[u].accepts(int(counts[u])):
            raise InvariantViolation(f"center {inst.nodes[u]} violates its parity")
        hops = hop_distances(adj, u, 6)
        if (hops[sigma == u] > 6).any():
            raise InvariantViolation(f"a node of center {inst.nodes[u]} is more than 6 hops away")
    realized = inst.dist[np.arange(inst.n), sigma].max()
    if not leq(realized, 6 * tau):
        raise InvariantViolation(f"realized radius {realized} exceeds 6 * {tau}")
    return realized.item() if hasattr(realized, "item") else realized


def solve_kcenter(inst: KCenterInstance, linear_scan: bool = False) -> KCenterResult:
    """Smallest workable radius guess and its certified solution.

    Raises:
        InfeasibleInstance: no radius works, i.e. the parity labels admit no
            solution with at most ``k`` centers.
    """
    if inst.n == 0:
        return KCenterResult((), {}, 0, 0)
    cands = candidate_radii(inst.dist)
    cache: dict[int, _Attempt] = {}

    def at(i: int) -> _Attempt:
        if i not in cache:
            cache[i] = _attempt(inst, cands[i])
            log.debug("tau=%s: %s", cands[i], "ok" if cache[i].ok else cache[i].reason)
        return cache[i]

    top = len(cands) - 1
    if not at(top).ok:
        raise InfeasibleInstance(f"no radius works: {at(top).reason}")
    if linear_scan:
        hi = next(i for i in range(len(cands)) if at(i).ok)
    else:
        lo, hi = -1, top
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if at(mid).ok:
                hi = mid
            else:
                lo = mid
    tau = cands[hi]
    tau = tau.item() if hasattr(tau, "item") else tau
    att = at(hi)
    realized = _certify(inst, tau, att)
    assert att.sigma is not None
    centers = tuple(inst.nodes[u] for u in att.centers)
    assignment = {inst.nodes[v]: inst.nodes[int(att.sigma[v])] for v in range(inst.n)}
    return KCenterResult(centers, assignment, tau, realized, len(cache))


def kcenter_precheck(inst: KCenterInstance) -> tuple[bool, str]:
    """Whether some radius admits a parity-feasible solution with ``<= k`` centers.

    With an unbounded radius one center of the right parity serves
    everything; failing that, two odd centers split an even ``|V|``.
    """
    n = inst.n
    labels = set(inst.parity)
    if n == 0 or FREE in labels:
        return True, ""
    if n % 2:
        if ODD in labels:
            return True, ""
        return False, f"|V|={n} is odd and every node is even-constrained"
    if EVEN in labels or inst.k >= 2:
        return True, ""
    return False, f"|V|={n} is even, every node is odd-constrained and k=1"


def kcenter_violations(inst: KCenterInstance, centers: Sequence[str], assignment: Mapping[str, str]) -> set[str]:
    counts: dict[str, int] = {}
    for c in assignment.values():
        counts[c] = counts.get(c, 0) + 1
    label = dict(zip(inst.nodes, inst.parity))
    return {c for c in centers if not label[c].accepts(counts.get(c, 0))}


def max_assignment_distance(inst: KCenterInstance, assignment: Mapping[str, str]) -> Number:
    idx = {v: n for n, v in enumerate(inst.nodes)}
    out: Number = 0
    for v, c in assignment.items():
        x = inst.dist[idx[v], idx[c]]
        x = x.item() if hasattr(x, "item") else x
        out = max(out, x)
    return out


__all__ = [
    "CenterTree",
    "ComponentSolution",
    "KCenterInstance",
    "KCenterResult",
    "ThresholdGraph",
    "build_threshold_graph",
    "candidate_radii",
    "connected_components",
    "hop_distances",
    "initial_centers_tree",
    "solve_component",
    "solve_kcenter",
]
