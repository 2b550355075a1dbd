"""JSON instance files.

Facility location::

    {"facilities": [{"id": "i1", "open_cost": 3, "parity": "odd"}, ...],
     "clients": [{"id": "j1"}, ...],
     "metric": {...}}

k-center::

    {"nodes": [{"id": "a", "parity": "even"}, ...], "metric": {...}, "k": 2}

``metric`` is one of ``{"kind": "matrix", "order": [...], "d": [[...]]}``,
``{"kind": "euclidean", "points": {id: [x, y]}}`` or (facility location
only) ``{"kind": "bipartite", "d": {facility: {client: w}}}``; the
bipartite kind is closed under shortest paths.

With ``exact=True`` every number is read as a :class:`~fractions.Fraction`
(decimal literals are taken at face value, ``"p/q"`` strings are allowed).
Serialization always writes the full matrix, so a parsed file re-serializes
to a matrix-kind file that parses back to an equal instance.
"""

from __future__ import annotations

import json
import math
import sys
from fractions import Fraction
from typing import Any, Sequence, TextIO

import numpy as np

from parclust._num import Number, to_json_number, to_number
from parclust.errors import StructuralError
from parclust.instance import Facility, Instance, ParityLabel, Solution, metric_closure
from parclust.kcenter import KCenterInstance


def _num(x: Any, exact: bool) -> Number:
    if isinstance(x, bool) or not isinstance(x, (int, float, str, Fraction)):
        raise StructuralError(f"expected a number, got {x!r}")
    try:
        return to_number(x, exact)
    except (ValueError, ZeroDivisionError) as exc:
        raise StructuralError(f"bad number {x!r}") from exc


def _ids(items: Any, what: str) -> list[dict]:
    if not isinstance(items, list) or not all(isinstance(x, dict) and isinstance(x.get("id"), str) for x in items):
        raise StructuralError(f"'{what}' must be a list of objects with a string 'id'")
    return items


def _parity(x: Any) -> ParityLabel:
    try:
        return ParityLabel(x)
    except ValueError:
        raise StructuralError(f"unknown parity label {x!r}") from None


def _metric(spec: Any, ids: Sequence[str], exact: bool, facilities: Sequence[str] = ()) -> list[list[Number]]:
    """Distance matrix over ``ids`` (in that order) from a metric object."""
    if not isinstance(spec, dict):
        raise StructuralError("'metric' must be an object")
    kind = spec.get("kind")
    pos = {x: k for k, x in enumerate(ids)}
    n = len(ids)
    if kind == "matrix":
        order = spec.get("order", list(ids))
        d = spec.get("d")
        if sorted(order) != sorted(ids) or len(set(order)) != len(order):
            raise StructuralError("matrix 'order' must list every id exactly once")
        if not isinstance(d, list) or len(d) != n or any(not isinstance(r, list) or len(r) != n for r in d):
            raise StructuralError(f"matrix 'd' must be {n} x {n}")
        perm = [order.index(x) for x in ids]
        return [[_num(d[a][b], exact) for b in perm] for a in perm]
    if kind == "euclidean":
        pts = spec.get("points")
        if not isinstance(pts, dict) or set(pts) != set(ids):
            raise StructuralError("euclidean 'points' must give coordinates for every id")
        xy = []
        for x in ids:
            p = pts[x]
            if not isinstance(p, list) or len(p) != 2:
                raise StructuralError(f"point {x!r} must be [x, y]")
            xy.append([float(_num(c, False)) for c in p])
        # Square roots are irrational in general; distances stay floats.
        return [[math.dist(p, q) for q in xy] for p in xy]
    if kind == "bipartite":
        if not facilities:
            raise StructuralError("bipartite metrics need facilities and clients")
        d = spec.get("d")
        if not isinstance(d, dict):
            raise StructuralError("bipartite 'd' must map facility -> {client: weight}")
        raw: list[list[Number | None]] = [[None] * n for _ in range(n)]
        for k in range(n):
            raw[k][k] = 0
        for i, row in d.items():
            if i not in pos or i not in facilities or not isinstance(row, dict):
                raise StructuralError(f"bipartite row {i!r} is not a facility")
            for j, w in row.items():
                if j not in pos or j in facilities:
                    raise StructuralError(f"bipartite entry {i!r}->{j!r} does not name a client")
                raw[pos[i]][pos[j]] = raw[pos[j]][pos[i]] = _num(w, exact)
        return metric_closure(raw, ids)
    raise StructuralError(f"unknown metric kind {kind!r}")


# --------------------------------------------------------------------------
# facility location


def instance_from_dict(data: Any, exact: bool = False, name: str = "") -> Instance:
    if not isinstance(data, dict):
        raise StructuralError("instance must be a JSON object")
    facs = _ids(data.get("facilities", []), "facilities")
    clients = _ids(data.get("clients", []), "clients")
    facilities = [
        Facility(f["id"], _num(f.get("open_cost", 0), exact), _parity(f.get("parity", "even"))) for f in facs
    ]
    fids = [f.id for f in facilities]
    cids = [c["id"] for c in clients]
    ids = fids + cids
    if len(set(ids)) != len(ids):
        raise StructuralError("ids must be unique across facilities and clients")
    if not ids:
        dist: list[list[Number]] = []
    else:
        dist = _metric(data.get("metric"), ids, exact, fids)
    return Instance.build(facilities, cids, dist, name or str(data.get("name", "")))


def instance_to_dict(inst: Instance) -> dict:
    out = {
        "facilities": [
            {"id": f.id, "open_cost": to_json_number(f.open_cost), "parity": f.parity.value} for f in inst.facilities
        ],
        "clients": [{"id": j} for j in inst.clients],
        "metric": {
            "kind": "matrix",
            "order": list(inst.point_ids),
            "d": [[to_json_number(x) for x in row] for row in inst.dist],
        },
    }
    if inst.name:
        out["name"] = inst.name
    return out


# --------------------------------------------------------------------------
# k-center


def kcenter_from_dict(data: Any, exact: bool = False, name: str = "") -> KCenterInstance:
    if not isinstance(data, dict):
        raise StructuralError("instance must be a JSON object")
    nodes = _ids(data.get("nodes", []), "nodes")
    ids = [x["id"] for x in nodes]
    k = data.get("k")
    if isinstance(k, bool) or not isinstance(k, int):
        raise StructuralError("'k' must be an integer")
    if len(set(ids)) != len(ids):
        raise StructuralError("duplicate node ids")
    spec = data.get("metric")
    if isinstance(spec, dict) and spec.get("kind") == "bipartite":
        raise StructuralError("bipartite metrics are for facility location only")
    dist = _metric(spec, ids, exact) if ids else np.zeros((0, 0))
    parity = [_parity(x.get("parity", "even")) for x in nodes]
    return KCenterInstance(tuple(ids), tuple(parity), dist, k, name or str(data.get("name", "")))


def kcenter_to_dict(inst: KCenterInstance) -> dict:
    out = {
        "nodes": [{"id": v, "parity": p.value} for v, p in zip(inst.nodes, inst.parity)],
        "metric": {
            "kind": "matrix",
            "order": list(inst.nodes),
            "d": [[to_json_number(x.item() if hasattr(x, "item") else x) for x in row] for row in inst.dist],
        },
        "k": inst.k,
    }
    if inst.name:
        out["name"] = inst.name
    return out


# --------------------------------------------------------------------------
# files


def _parse_constant(tok: str) -> Any:
    raise StructuralError(f"non-finite number {tok} in JSON")


def loads(text: str, exact: bool = False) -> Any:
    try:
        if exact:
            return json.loads(text, parse_float=Fraction, parse_constant=_parse_constant)
        return json.loads(text, parse_constant=_parse_constant)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"invalid JSON: {exc}") from exc


def read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise StructuralError(f"cannot read {path}: {exc.strerror}") from exc


def problem_kind(data: Any) -> str:
    if isinstance(data, dict) and "nodes" in data:
        return "kcenter"
    return "fl"


def load(path: str, exact: bool = False) -> Instance | KCenterInstance:
    data = loads(read_text(path), exact)
    name = "" if path == "-" else path
    if problem_kind(data) == "kcenter":
        return kcenter_from_dict(data, exact, name)
    return instance_from_dict(data, exact, name)


def load_fl(path: str, exact: bool = False) -> Instance:
    inst = load(path, exact)
    if not isinstance(inst, Instance):
        raise StructuralError(f"{path} is a k-center instance")
    return inst


def load_kcenter(path: str, exact: bool = False) -> KCenterInstance:
    inst = load(path, exact)
    if not isinstance(inst, KCenterInstance):
        raise StructuralError(f"{path} is a facility-location instance")
    return inst


def to_dict(inst: Instance | KCenterInstance) -> dict:
    return kcenter_to_dict(inst) if isinstance(inst, KCenterInstance) else instance_to_dict(inst)


def dumps(inst: Instance | KCenterInstance) -> str:
    return json.dumps(to_dict(inst), indent=None, separators=(",", ":"))


def dump(inst: Instance | KCenterInstance, fh: TextIO) -> None:
    fh.write(dumps(inst))
    fh.write("\n")


def solution_to_dict(inst: Instance, sol: Solution) -> dict:
    order = {i: k for k, i in enumerate(inst.point_ids)}
    return {
        "open": sorted(sol.open_set, key=order.__getitem__),
        "assignment": {j: sol.assignment[j] for j in inst.clients if j in sol.assignment},
    }


def bundled(name: str) -> str:
    """Path of a data file shipped with the package (e.g. ``footnote2.json``)."""
    from importlib.resources import files

    return str(files("parclust") / "data" / name)
