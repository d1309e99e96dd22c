"""Seeded generators for randomized property suites.

Shared between the test suite and the CLI's verify command so both exercise
the same distributions.  Every generator takes a ``numpy.random.Generator``
and is deterministic for a fixed one.
"""

from __future__ import annotations

import numpy as np

from confdim.modulus import CombCurve, Cover, CurveFamily, explicit_family
from confdim.multicurve import (
    INESSENTIAL,
    PERIPHERAL,
    Essential,
    MulticurveSpec,
    PreimageComponent,
)


def random_levyfree_spec(rng: np.random.Generator, max_curves: int = 4) -> MulticurveSpec:
    """Random irreducible multicurve spec with no Levy cycle.

    The curves are wired into a single cycle of essential components with
    degrees in {2, 3}, which keeps the transition matrix irreducible at every
    exponent; optional extra essential components all have degree 4, so
    column sums stay below 2^(1-Q) + 2*4^(1-Q) and the eigenvalue decays
    past any fixed threshold at a predictable exponent.  Degree-1 components
    only ever appear as peripheral or inessential, so no Levy cycle exists.
    """
    m = int(rng.integers(1, max_curves + 1))
    labels = tuple(f"g{i + 1}" for i in range(m))
    preimages = {}
    for j in range(m):
        comps = [
            PreimageComponent(
                degree=int(rng.integers(2, 4)),
                classification=Essential(labels[(j + 1) % m]),
            )
        ]
        for _ in range(int(rng.integers(0, 3))):
            target = labels[int(rng.integers(0, m))]
            comps.append(PreimageComponent(degree=4, classification=Essential(target)))
        if rng.random() < 0.5:
            comps.append(
                PreimageComponent(degree=int(rng.integers(1, 5)), classification=PERIPHERAL)
            )
        if rng.random() < 0.3:
            comps.append(
                PreimageComponent(degree=int(rng.integers(1, 5)), classification=INESSENTIAL)
            )
        preimages[labels[j]] = tuple(comps)
    return MulticurveSpec(curves=labels, preimages=preimages)


def random_curve(rng: np.random.Generator, piece_count: int, max_size: int = 4) -> CombCurve:
    size = int(rng.integers(1, min(max_size, piece_count) + 1))
    indices = rng.choice(piece_count, size=size, replace=False)
    return CombCurve(int(i) for i in indices)


def random_family(
    rng: np.random.Generator, piece_count: int, max_curves: int = 4, max_size: int = 4
) -> CurveFamily:
    """Random explicit family; duplicate curves collapse, so the count may
    come out below the draw."""
    count = int(rng.integers(1, max_curves + 1))
    curves = {}
    for _ in range(count):
        curve = random_curve(rng, piece_count, max_size)
        curves[curve.incidence] = curve
    return explicit_family(curves.values())


def random_nested_pair(
    rng: np.random.Generator, piece_count: int, max_curves: int = 5
) -> tuple[CurveFamily, CurveFamily]:
    """A family and a non-empty subfamily of it, for monotonicity checks."""
    outer = random_family(rng, piece_count, max_curves=max_curves)
    count = len(outer.curves)
    keep = 1 + int(rng.integers(0, count))
    chosen = rng.choice(count, size=keep, replace=False)
    inner = explicit_family(outer.curves[i] for i in sorted(int(i) for i in chosen))
    return inner, outer


def random_cover(rng: np.random.Generator, max_pieces: int = 12) -> Cover:
    return Cover(piece_count=int(rng.integers(3, max_pieces + 1)))
