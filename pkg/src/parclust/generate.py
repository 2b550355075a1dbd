"""Seeded random instances for tests and benchmarks.

Two geometries are offered.  ``euclidean`` draws points uniformly from the
unit square and uses straight-line distances.  ``random-metric`` draws
integer weights on the complete graph and takes their shortest-path
closure, which gives an exact integer metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from parclust.errors import StructuralError
from parclust.instance import Facility, Instance, ParityLabel, feasibility_precheck, metric_closure, reduce_unconstrained
from parclust.kcenter import KCenterInstance, kcenter_precheck

GEOMETRIES = ("euclidean", "random-metric")
LABELS = (ParityLabel.ODD, ParityLabel.EVEN, ParityLabel.UNCONSTRAINED)


@dataclass(frozen=True)
class GenParams:
    problem: str = "fl"  # "fl" or "kcenter"
    nf: int = 3  # facilities (fl)
    nd: int = 5  # clients (fl) or nodes (kcenter)
    k: int = 2
    geometry: str = "euclidean"
    parity_mix: tuple[float, float, float] = (1.0, 1.0, 0.0)  # odd : even : unconstrained
    feasible_only: bool = False
    max_weight: int = 10
    max_retries: int = 200

    def __post_init__(self) -> None:
        if self.problem not in ("fl", "kcenter"):
            raise StructuralError(f"unknown problem {self.problem!r}")
        if self.geometry not in GEOMETRIES:
            raise StructuralError(f"unknown geometry {self.geometry!r}")
        if self.nf < 0 or self.nd < 0:
            raise StructuralError("counts must be nonnegative")
        mix = tuple(float(x) for x in self.parity_mix)
        if len(mix) != 3 or any(x < 0 for x in mix) or sum(mix) <= 0:
            raise StructuralError("parity mix needs three nonnegative weights with a positive sum")
        object.__setattr__(self, "parity_mix", mix)
        if self.problem == "kcenter" and self.k < 1:
            raise StructuralError("k must be at least 1")


def parse_mix(text: str) -> tuple[float, float, float]:
    """``"odd:even:unconstrained"`` weights, e.g. ``"1:1:0"``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise StructuralError(f"parity mix {text!r} must look like odd:even:unconstrained")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise StructuralError(f"parity mix {text!r} has a non-numeric part") from None


def _distances(n: int, geometry: str, rng: np.random.Generator, max_weight: int) -> list[list]:
    if geometry == "euclidean":
        pts = rng.random((n, 2))
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
        return [[float(x) for x in row] for row in d]
    w = rng.integers(1, max_weight + 1, size=(n, n))
    raw = [[0 if a == b else int(w[min(a, b), max(a, b)]) for b in range(n)] for a in range(n)]
    return metric_closure(raw)


def _labels(n: int, mix: tuple[float, float, float], rng: np.random.Generator) -> list[ParityLabel]:
    p = np.array(mix) / sum(mix)
    return [LABELS[x] for x in rng.choice(3, size=n, p=p)]


def _fl(params: GenParams, rng: np.random.Generator, tag: str) -> Instance:
    nf, nd = params.nf, params.nd
    dist = _distances(nf + nd, params.geometry, rng, params.max_weight)
    if params.geometry == "euclidean":
        costs = [float(x) for x in rng.random(nf)]
    else:
        costs = [int(x) for x in rng.integers(0, params.max_weight + 1, size=nf)]
    labels = _labels(nf, params.parity_mix, rng)
    facs = [Facility(f"f{k}", costs[k], labels[k]) for k in range(nf)]
    return Instance.build(facs, [f"c{k}" for k in range(nd)], dist, tag)


def _kc(params: GenParams, rng: np.random.Generator, tag: str) -> KCenterInstance:
    n = params.nd
    dist = _distances(n, params.geometry, rng, params.max_weight)
    labels = _labels(n, params.parity_mix, rng)
    return KCenterInstance(tuple(f"v{k}" for k in range(n)), tuple(labels), np.array(dist).reshape(n, n), params.k, tag)


def _passes(inst: Instance | KCenterInstance) -> bool:
    if isinstance(inst, KCenterInstance):
        return kcenter_precheck(inst)[0]
    return bool(feasibility_precheck(reduce_unconstrained(inst).instance))


def generate_instance(params: GenParams, seed: int) -> Instance | KCenterInstance:
    """Deterministic random instance for ``(params, seed)``.

    With ``feasible_only`` the draw is repeated (from the same seeded
    stream) until the instance passes the feasibility precheck.

    Raises:
        StructuralError: no feasible draw within ``max_retries`` attempts.
    """
    rng = np.random.default_rng(seed)
    tag = f"{params.problem}-{params.geometry}-s{seed}"
    for _ in range(params.max_retries):
        inst = _fl(params, rng, tag) if params.problem == "fl" else _kc(params, rng, tag)
        if not params.feasible_only or _passes(inst):
            return inst
    raise StructuralError(f"no feasible instance after {params.max_retries} draws; check the parity mix")
