"""Instance builders shared by the test modules."""

from __future__ import annotations

import numpy as np

from parclust import io
from parclust.generate import GenParams, generate_instance
from parclust.instance import Facility, Instance, ParityLabel

ODD, EVEN, FREE = ParityLabel.ODD, ParityLabel.EVEN, ParityLabel.UNCONSTRAINED


def footnote2() -> Instance:
    return io.load_fl(io.bundled("footnote2.json"), exact=True)


def line_instance(fac: list[tuple[str, float, ParityLabel, float]], clients: list[tuple[str, float]]) -> Instance:
    """Points on a line: facilities ``(id, f, label, x)`` and clients ``(id, x)``."""
    xs = [x for *_, x in fac] + [x for _, x in clients]
    d = [[abs(a - b) for b in xs] for a in xs]
    return Instance.build([Facility(i, f, lab) for i, f, lab, _ in fac], [j for j, _ in clients], d)


def random_fl(seed: int, nf: int, nd: int, mix=(1, 1, 0), geometry="random-metric", feasible=True) -> Instance:
    return generate_instance(
        GenParams("fl", nf, nd, geometry=geometry, parity_mix=mix, feasible_only=feasible), seed
    )


def random_kc(seed: int, n: int, k: int, mix=(1, 1, 1), geometry="random-metric", feasible=True):
    return generate_instance(
        GenParams("kcenter", 0, n, k=k, geometry=geometry, parity_mix=mix, feasible_only=feasible), seed
    )


def random_weights(rng: np.random.Generator, n: int, hi: int = 20) -> list[list[int]]:
    w = [[0] * n for _ in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            w[a][b] = w[b][a] = int(rng.integers(0, hi))
    return w
