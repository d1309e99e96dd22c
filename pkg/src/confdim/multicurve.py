"""Multicurve transition matrices, Levy cycles, and the critical exponent.

A multicurve is a labeled set of curves together with, for each curve, the
classified preimage components of that curve under the map: each component
carries a covering degree and is either homotopic to one of the listed curves
(essential), peripheral, or inessential.  The classification is input data;
computing it from a map description is a different problem entirely.

From this data the exponent-weighted transition matrix is assembled: entry
(i, j) sums degree^(1-Q) over the components of the j-th curve's preimage
that are homotopic to curve i.  Peripheral and inessential components
contribute nothing.  The critical exponent Q(Gamma) is the unique Q >= 1
where the leading eigenvalue crosses 1, when the spec contains an irreducible
piece and no Levy cycle blocks the decay.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from confdim.spectral import (
    ConvergenceError,
    NonNegMatrix,
    decompose,
    spectral_radius,
)

PERIPHERAL = "peripheral"
INESSENTIAL = "inessential"

FINITE = "finite"
ZERO = "zero"
LEVY_OBSTRUCTED = "levy_obstructed"

#: Exponent used to confirm that the eigenvalue never drops below 1 before
#: reporting a Levy obstruction.  Any degree >= 2 contributes at most
#: 2^(1-64) here, so only genuine degree-1 cycles can keep lambda at 1.
LEVY_PROBE_EXPONENT = 64.0

_Q_DOUBLING_CAP = 2.0**20
_MAX_SOLVE_STEPS = 400


@dataclass(frozen=True)
class Essential:
    """Homotopy class of an essential preimage component: the curve it matches."""

    curve: str


@dataclass(frozen=True)
class PreimageComponent:
    """One connected component of a curve's preimage.

    ``classification`` is an :class:`Essential` wrapper naming the homotopic
    curve, or one of the strings ``"peripheral"`` / ``"inessential"``.
    """

    degree: int
    classification: Union[Essential, str]

    def __post_init__(self):
        if not isinstance(self.degree, int) or isinstance(self.degree, bool):
            raise ValueError(f"component degree must be an integer, got {self.degree!r}")
        if self.degree < 1:
            raise ValueError(f"component degree must be >= 1, got {self.degree}")
        c = self.classification
        if not isinstance(c, Essential) and c not in (PERIPHERAL, INESSENTIAL):
            raise ValueError(f"unknown component classification: {c!r}")


@dataclass(frozen=True)
class MulticurveSpec:
    """Curves plus classified preimage components, keyed by target curve.

    ``preimages`` maps each curve label to the components of that curve's
    preimage.  Labels absent from the mapping get no components, which is
    only consistent with ``map_degree`` left unset (fiber degrees over every
    curve must sum to the map degree when it is declared).
    """

    curves: tuple[str, ...]
    preimages: tuple[tuple[PreimageComponent, ...], ...]
    map_degree: int | None = None

    def __init__(
        self,
        curves: Sequence[str],
        preimages: Mapping[str, Sequence[PreimageComponent]],
        map_degree: int | None = None,
    ):
        curves = tuple(curves)
        if len(curves) == 0:
            raise ValueError("a multicurve needs at least one curve")
        if len(set(curves)) != len(curves):
            raise ValueError("curve labels must be distinct")
        unknown = set(preimages) - set(curves)
        if unknown:
            raise ValueError(f"preimages listed for unknown curves: {sorted(unknown)}")

        table = tuple(tuple(preimages.get(label, ())) for label in curves)
        labels = set(curves)
        for label, comps in zip(curves, table):
            for comp in comps:
                if not isinstance(comp, PreimageComponent):
                    raise ValueError(f"bad component under {label!r}: {comp!r}")
                c = comp.classification
                if isinstance(c, Essential) and c.curve not in labels:
                    raise ValueError(
                        f"component of {label!r} is homotopic to unknown curve {c.curve!r}"
                    )
        if map_degree is not None:
            if not isinstance(map_degree, int) or map_degree < 1:
                raise ValueError(f"map_degree must be a positive integer, got {map_degree!r}")
            for label, comps in zip(curves, table):
                total = sum(comp.degree for comp in comps)
                if total != map_degree:
                    raise ValueError(
                        f"fiber degrees over {label!r} sum to {total}, "
                        f"expected map_degree={map_degree}"
                    )

        object.__setattr__(self, "curves", curves)
        object.__setattr__(self, "preimages", table)
        object.__setattr__(self, "map_degree", map_degree)

    @property
    def size(self) -> int:
        return len(self.curves)

    def index_of(self, label: str) -> int:
        return self.curves.index(label)

    def components_of(self, label: str) -> tuple[PreimageComponent, ...]:
        return self.preimages[self.index_of(label)]


@dataclass(frozen=True)
class QResult:
    """Outcome of the critical-exponent solve.

    ``kind`` is one of ``"finite"`` (with ``q`` set), ``"zero"`` (no
    irreducible sub-multicurve; ``q`` is 0), or ``"levy_obstructed"``
    (``q`` is None: the eigenvalue stays >= 1 for every exponent).
    """

    kind: str
    q: float | None
    achieved_lambda: float
    iterations: int


@dataclass(frozen=True)
class CatalogReport:
    results: tuple[QResult, ...]
    overall: float
    levy_flag: bool


@dataclass(frozen=True)
class IrreducibleCore:
    indices: tuple[int, ...]
    leading_lambda: float


def lattes_spec() -> MulticurveSpec:
    """The degree-4 torus-quotient model: one curve, two degree-2 components.

    Its transition entry is 2 * 2^(1-Q) = 2^(2-Q), so the critical exponent
    is exactly 2.
    """
    comp = PreimageComponent(degree=2, classification=Essential("g1"))
    return MulticurveSpec(curves=("g1",), preimages={"g1": (comp, comp)}, map_degree=4)


def transition_matrix(spec: MulticurveSpec, q: float) -> NonNegMatrix:
    """Assemble the exponent-Q transition matrix of the spec.

    Entry (i, j) is the sum of degree^(1-Q) over components of curve j's
    preimage homotopic to curve i; exponents below 1 are rejected.
    """
    if q < 1.0:
        raise ValueError(f"exponent must satisfy Q >= 1, got {q}")
    m = spec.size
    a = np.zeros((m, m))
    index = {label: i for i, label in enumerate(spec.curves)}
    for j in range(m):
        for comp in spec.preimages[j]:
            if isinstance(comp.classification, Essential):
                i = index[comp.classification.curve]
                a[i, j] += float(comp.degree) ** (1.0 - q)
    return NonNegMatrix(a)


def leading_eigenvalue(spec: MulticurveSpec, q: float, tol: float = 1e-10) -> float:
    """Spectral radius of the transition matrix at exponent Q."""
    return spectral_radius(transition_matrix(spec, q), tol)


def _degree_one_adjacency(spec: MulticurveSpec) -> list[list[int]]:
    """Digraph on curve indices: edge j -> i iff curve j has a degree-1
    preimage component homotopic to curve i."""
    index = {label: i for i, label in enumerate(spec.curves)}
    adj: list[list[int]] = [[] for _ in spec.curves]
    for j in range(spec.size):
        for comp in spec.preimages[j]:
            if comp.degree == 1 and isinstance(comp.classification, Essential):
                i = index[comp.classification.curve]
                if i not in adj[j]:
                    adj[j].append(i)
    for outs in adj:
        outs.sort()
    return adj


def detect_levy_cycles(spec: MulticurveSpec) -> list[tuple[int, ...]]:
    """All simple cycles of the degree-1 essential-transition digraph.

    Each cycle is a tuple of curve indices (j, j', ...) where each curve has a
    degree-1 preimage component homotopic to the next, wrapping around.  The
    list is empty exactly when the spec has no Levy cycle.  Cycles are
    canonicalized to start at their smallest index and sorted.
    """
    adj = _degree_one_adjacency(spec)
    n = spec.size
    cycles: list[tuple[int, ...]] = []
    # DFS from each start vertex, restricted to vertices >= start so every
    # cycle is produced exactly once, anchored at its smallest member.
    for start in range(n):
        stack = [(start, (start,))]
        # iterative DFS with explicit path tuples; graphs here are tiny
        while stack:
            v, path = stack.pop()
            for w in adj[v]:
                if w == start:
                    cycles.append(path)
                elif w > start and w not in path:
                    stack.append((w, path + (w,)))
    cycles.sort()
    return cycles


def contains_irreducible(spec: MulticurveSpec) -> bool:
    """Whether some sub-multicurve has an irreducible transition block.

    The support of the transition matrix does not depend on Q, so the check
    runs once at Q = 1.
    """
    dec = decompose(transition_matrix(spec, 1.0))
    return any(kind == "irreducible" for kind in dec.kinds)


def q_of_multicurve(spec: MulticurveSpec, tol: float = 1e-10) -> QResult:
    """Solve lambda(Q) = 1 for the critical exponent of the spec.

    Returns Zero when no irreducible sub-multicurve exists (the matrix is
    nilpotent and the exponent is 0 by convention), LevyObstructed when a
    degree-1 cycle pins the eigenvalue at or above 1 for every exponent, and
    Finite(Q) otherwise, located by doubling then bisection.  The reported
    eigenvalue at a Finite exponent is within ``tol`` of 1.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not contains_irreducible(spec):
        return QResult(kind=ZERO, q=0.0, achieved_lambda=0.0, iterations=0)

    eigen_tol = max(tol / 100.0, 1e-13)
    evals = 0

    if detect_levy_cycles(spec):
        lam_probe = leading_eigenvalue(spec, LEVY_PROBE_EXPONENT, eigen_tol)
        evals += 1
        if lam_probe >= 1.0:
            return QResult(
                kind=LEVY_OBSTRUCTED, q=None, achieved_lambda=lam_probe, iterations=evals
            )

    lam_lo = leading_eigenvalue(spec, 1.0, eigen_tol)
    evals += 1
    if abs(lam_lo - 1.0) <= tol:
        return QResult(kind=FINITE, q=1.0, achieved_lambda=lam_lo, iterations=evals)

    # Doubling phase: lambda is strictly decreasing, so grow the right
    # endpoint until it dips below 1.
    lo, hi = 1.0, 2.0
    while True:
        lam_hi = leading_eigenvalue(spec, hi, eigen_tol)
        evals += 1
        if abs(lam_hi - 1.0) <= tol:
            return QResult(kind=FINITE, q=hi, achieved_lambda=lam_hi, iterations=evals)
        if lam_hi < 1.0:
            break
        lo = hi
        hi *= 2.0
        if hi > _Q_DOUBLING_CAP:
            raise ConvergenceError(
                f"no exponent with lambda < 1 found up to Q={lo}; last lambda={lam_hi}"
            )

    # Bisection: invariant lambda(lo) >= 1 >= lambda(hi).
    for _ in range(_MAX_SOLVE_STEPS):
        mid = 0.5 * (lo + hi)
        lam_mid = leading_eigenvalue(spec, mid, eigen_tol)
        evals += 1
        if hi - lo <= tol and abs(lam_mid - 1.0) <= tol:
            return QResult(kind=FINITE, q=mid, achieved_lambda=lam_mid, iterations=evals)
        if lam_mid >= 1.0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(
        f"critical-exponent bisection stalled on bracket [{lo}, {hi}] at tol={tol}"
    )


def q_of_map(catalog: Sequence[MulticurveSpec], tol: float = 1e-10) -> CatalogReport:
    """Aggregate critical exponents over a catalog of multicurve specs.

    The overall value is the largest finite exponent (0 when there is none);
    Levy-obstructed entries are flagged rather than folded into the maximum,
    since they rule out the expanding-map hypotheses altogether.
    """
    if len(catalog) == 0:
        raise ValueError("catalog must contain at least one multicurve spec")
    results = tuple(q_of_multicurve(spec, tol) for spec in catalog)
    finite = [r.q for r in results if r.kind == FINITE]
    zero = [0.0 for r in results if r.kind == ZERO]
    overall = max(finite + zero + [0.0])
    levy_flag = any(r.kind == LEVY_OBSTRUCTED for r in results)
    return CatalogReport(results=results, overall=overall, levy_flag=levy_flag)


def restrict_spec(spec: MulticurveSpec, indices: Sequence[int]) -> MulticurveSpec:
    """Restrict a spec to a subset of its curves.

    Kept curves retain all their components; components homotopic to dropped
    curves are reclassified as inessential, so fiber-degree sums (and any
    declared map_degree) are preserved.
    """
    keep = sorted(set(indices))
    if not keep:
        raise ValueError("cannot restrict to an empty curve set")
    for i in keep:
        if not 0 <= i < spec.size:
            raise ValueError(f"curve index {i} out of range")
    kept_labels = {spec.curves[i] for i in keep}

    def demote(comp: PreimageComponent) -> PreimageComponent:
        c = comp.classification
        if isinstance(c, Essential) and c.curve not in kept_labels:
            return PreimageComponent(degree=comp.degree, classification=INESSENTIAL)
        return comp

    curves = tuple(spec.curves[i] for i in keep)
    preimages = {
        spec.curves[i]: tuple(demote(comp) for comp in spec.preimages[i]) for i in keep
    }
    return MulticurveSpec(curves=curves, preimages=preimages, map_degree=spec.map_degree)


def irreducible_core(spec: MulticurveSpec, q: float, tol: float = 1e-10) -> IrreducibleCore:
    """Curve indices of a leading irreducible block and that block's eigenvalue.

    Restricting the spec to these indices keeps the leading eigenvalue of the
    full matrix (within solver tolerance): the leading block of the support
    decomposition realizes the spectral radius.
    """
    if not contains_irreducible(spec):
        raise ValueError("spec has no irreducible sub-multicurve")
    matrix = transition_matrix(spec, q)
    dec = decompose(matrix)
    radii = [
        spectral_radius(matrix.entries[np.ix_(blk, blk)], tol) if kind == "irreducible" else 0.0
        for blk, kind in zip(dec.blocks, dec.kinds)
    ]
    best = int(np.argmax(radii))
    return IrreducibleCore(indices=tuple(dec.blocks[best]), leading_lambda=radii[best])
