"""Perron-Frobenius machinery for non-negative square matrices.

Everything downstream (critical exponents, growth bounds) reduces to spectral
data of non-negative matrices: the spectral radius, a non-negative eigenvector
for it, and the block upper-triangular structure coming from the strongly
connected components of the support digraph.

The algorithmic choices are deliberately elementary and certified:

* ``decompose`` condenses the support digraph into strongly connected
  components and orders them so the permuted matrix is block upper-triangular.
  Each diagonal block is either irreducible or a 1x1 zero block.
* ``spectral_radius`` runs power iteration per irreducible block on the
  shifted matrix ``D + I`` (the shift kills periodicity), bracketing the
  eigenvalue with Collatz-Wielandt bounds, and takes the maximum over blocks.
* ``pf_eigenvector`` builds a non-negative eigenvector even in the reducible
  case: pick a leading block none of whose ancestors is also leading, take its
  positive eigenvector, and extend over the ancestor blocks by solving the
  (invertible, inverse-non-negative) system ``(lam*I - A_T) v_T = R v_b``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

IRREDUCIBLE = "irreducible"
ZERO = "zero"

#: iteration cap for power iterations; hitting it raises ConvergenceError.
MAX_POWER_ITERATIONS = 10**6

DEFAULT_TOL = 1e-12


class ConvergenceError(RuntimeError):
    """An iterative solve exhausted its iteration budget."""


@dataclass(frozen=True, eq=False)
class NonNegMatrix:
    """A square matrix with finite, non-negative entries.

    The entry array is copied and frozen so instances are safe to share.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("matrix must have dimension >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        if np.any(arr < 0):
            raise ValueError("matrix entries must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Decomposition:
    """Irreducible decomposition of a non-negative matrix.

    ``blocks`` partitions the index set; permuting rows and columns by
    ``order`` (the concatenation of the blocks) puts the matrix in block
    upper-triangular form.  ``kinds[b]`` is ``"irreducible"`` or ``"zero"``
    (the latter only for 1x1 blocks with a zero diagonal entry).
    """

    order: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...]
    kinds: tuple[str, ...]


def _as_matrix(a) -> NonNegMatrix:
    if isinstance(a, NonNegMatrix):
        return a
    return NonNegMatrix(np.asarray(a, dtype=float))


def _support_adjacency(entries: np.ndarray) -> list[list[int]]:
    """Adjacency lists of the support digraph: edge i -> j iff A[i, j] > 0."""
    n = entries.shape[0]
    return [list(np.nonzero(entries[i] > 0)[0]) for i in range(n)]


def _tarjan_sccs(adj: list[list[int]]) -> list[list[int]]:
    """Strongly connected components, iteratively (no recursion limit issues)."""
    n = len(adj)
    index = [-1] * n
    lowlink = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for next_pi in range(pi, len(adj[v])):
                w = adj[v][next_pi]
                if index[w] == -1:
                    work[-1] = (v, next_pi + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comp.sort()
                sccs.append(comp)
    return sccs


def decompose(a) -> Decomposition:
    """Condense the support digraph into ordered diagonal blocks.

    Blocks are listed in a topological order of the condensation (edges go
    from earlier blocks to later ones), so the permuted matrix is block
    upper-triangular.  Among valid topological orders we take the canonical
    one that greedily picks the available block containing the smallest index.
    """
    m = _as_matrix(a)
    adj = _support_adjacency(m.entries)
    sccs = _tarjan_sccs(adj)

    comp_of = [0] * m.dim
    for b, comp in enumerate(sccs):
        for v in comp:
            comp_of[v] = b

    # Condensation edges and in-degrees, then Kahn with a min-heap keyed by
    # the smallest vertex of each block for a deterministic order.
    k = len(sccs)
    succs: list[set[int]] = [set() for _ in range(k)]
    indeg = [0] * k
    for v in range(m.dim):
        for w in adj[v]:
            bv, bw = comp_of[v], comp_of[w]
            if bv != bw and bw not in succs[bv]:
                succs[bv].add(bw)
                indeg[bw] += 1

    heap = [(sccs[b][0], b) for b in range(k) if indeg[b] == 0]
    heapq.heapify(heap)
    ordered: list[int] = []
    while heap:
        _, b = heapq.heappop(heap)
        ordered.append(b)
        for nb in succs[b]:
            indeg[nb] -= 1
            if indeg[nb] == 0:
                heapq.heappush(heap, (sccs[nb][0], nb))

    blocks = tuple(tuple(sccs[b]) for b in ordered)
    kinds = []
    for blk in blocks:
        if len(blk) == 1 and m.entries[blk[0], blk[0]] == 0:
            kinds.append(ZERO)
        else:
            kinds.append(IRREDUCIBLE)
    order = tuple(i for blk in blocks for i in blk)
    return Decomposition(order=order, blocks=blocks, kinds=tuple(kinds))


def is_irreducible(a) -> bool:
    """True iff the support digraph is strongly connected.

    By convention a 1x1 zero matrix is not irreducible, while a 1x1 matrix
    with a positive entry is.
    """
    m = _as_matrix(a)
    if m.dim == 1:
        return bool(m.entries[0, 0] > 0)
    return len(_tarjan_sccs(_support_adjacency(m.entries))) == 1


def _cw_radius(block: np.ndarray, tol: float, max_iter: int) -> float:
    """Spectral radius of an irreducible block via Collatz-Wielandt bounds.

    Iterates on the primitive shift ``M = block + I`` and tightens the bracket
    ``min_i (Mx)_i / x_i <= lam(M) <= max_i (Mx)_i / x_i``, both of which hold
    for every positive vector x. Returns ``lam(M) - 1``.
    """
    n = block.shape[0]
    if n == 1:
        return float(block[0, 0])
    m = block + np.eye(n)
    x = np.full(n, 1.0 / n)
    lo, hi = 0.0, np.inf
    for _ in range(max_iter):
        y = m @ x
        ratios = y / x
        lo = max(lo, float(ratios.min()))
        hi = min(hi, float(ratios.max()))
        if hi - lo <= tol:
            # The bracket can cross (hi < lo) by roundoff once converged;
            # the midpoint stays within tol of the true value either way.
            return max(0.5 * (lo + hi) - 1.0, 0.0)
        x = y / y.sum()
    raise ConvergenceError(
        f"power iteration did not reach tol={tol} within {max_iter} iterations "
        f"(bracket [{lo - 1.0}, {hi - 1.0}])"
    )


def _block_radii(m: NonNegMatrix, dec: Decomposition, tol: float, max_iter: int) -> list[float]:
    radii = []
    for blk, kind in zip(dec.blocks, dec.kinds):
        if kind == ZERO:
            radii.append(0.0)
        else:
            sub = m.entries[np.ix_(blk, blk)]
            radii.append(_cw_radius(sub, tol, max_iter))
    return radii


def spectral_radius(a, tol: float = DEFAULT_TOL, max_iter: int = MAX_POWER_ITERATIONS) -> float:
    """Spectral radius of a non-negative matrix, within ``tol``.

    The matrix is decomposed into irreducible blocks; the radius is the
    maximum of the block radii. 1x1 blocks are read off exactly, so reducible
    integer matrices like strictly triangular ones come out exact.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = _as_matrix(a)
    dec = decompose(m)
    return max(_block_radii(m, dec, tol, max_iter))


def leading_block(a, tol: float = DEFAULT_TOL, max_iter: int = MAX_POWER_ITERATIONS) -> int:
    """Index (into ``decompose(a).blocks``) of a block attaining the radius.

    Ties within ``tol`` are broken by the smallest block index.
    """
    m = _as_matrix(a)
    dec = decompose(m)
    radii = _block_radii(m, dec, tol, max_iter)
    top = max(radii)
    for b, r in enumerate(radii):
        if r >= top - tol:
            return b
    return int(np.argmax(radii))  # unreachable; appeases the reader


def _cw_eigenvector(block: np.ndarray, lam: float, tol: float, max_iter: int) -> np.ndarray:
    """Positive eigenvector of an irreducible block, unit l1 norm."""
    n = block.shape[0]
    if n == 1:
        return np.ones(1)
    m = block + np.eye(n)
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        y = m @ x
        x = y / y.sum()
        if np.max(np.abs(block @ x - lam * x)) <= 0.5 * tol:
            return x
    raise ConvergenceError(
        f"eigenvector iteration did not reach tol={tol} within {max_iter} iterations"
    )


def _ancestors(succs: list[set[int]], target: int) -> set[int]:
    """Blocks with a directed condensation path into ``target``."""
    k = len(succs)
    preds: list[list[int]] = [[] for _ in range(k)]
    for b, outs in enumerate(succs):
        for w in outs:
            preds[w].append(b)
    seen: set[int] = set()
    frontier = [target]
    while frontier:
        v = frontier.pop()
        for p in preds[v]:
            if p not in seen:
                seen.add(p)
                frontier.append(p)
    return seen


def _condensation_succs(m: NonNegMatrix, dec: Decomposition) -> list[set[int]]:
    comp_of = {}
    for b, blk in enumerate(dec.blocks):
        for v in blk:
            comp_of[v] = b
    succs: list[set[int]] = [set() for _ in dec.blocks]
    rows, cols = np.nonzero(m.entries > 0)
    for v, w in zip(rows, cols):
        bv, bw = comp_of[v], comp_of[w]
        if bv != bw:
            succs[bv].add(bw)
    return succs


def pf_eigenvector(a, tol: float = DEFAULT_TOL, max_iter: int = MAX_POWER_ITERATIONS) -> np.ndarray:
    """Non-negative eigenvector for the spectral radius, normalized to unit sum.

    Satisfies ``max|A v - lam v| <= tol`` with ``lam = spectral_radius(a)``.
    When the matrix is irreducible all entries are strictly positive. In the
    reducible case the support sits on a leading block and its ancestors,
    which is the only support pattern a non-negative eigenvector can have.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = _as_matrix(a)
    entries = m.entries
    n = m.dim
    dec = decompose(m)
    # Tighter per-block tolerance so the assembled residual meets tol.
    inner = min(tol, DEFAULT_TOL) / 4.0
    radii = _block_radii(m, dec, inner, max_iter)
    lam = max(radii)

    if lam == 0.0:
        # Nilpotent support: any index whose column is zero gives A e_j = 0.
        for j in range(n):
            if not np.any(entries[:, j] > 0):
                v = np.zeros(n)
                v[j] = 1.0
                return v
        raise ConvergenceError("no zero column in a nilpotent matrix; input corrupt")

    succs = _condensation_succs(m, dec)
    candidates = [b for b, r in enumerate(radii) if r >= lam - 2.0 * inner]
    chosen = None
    for b in candidates:
        anc = _ancestors(succs, b)
        if not any(other in anc for other in candidates if other != b):
            chosen = b
            break
    if chosen is None:  # candidate cycle cannot happen in a DAG; keep a fallback
        chosen = candidates[0]

    block_idx = list(dec.blocks[chosen])
    sub = entries[np.ix_(block_idx, block_idx)]
    vb = _cw_eigenvector(sub, radii[chosen], inner, max_iter)

    v = np.zeros(n)
    v[block_idx] = vb
    ancestor_idx = sorted(i for b in _ancestors(succs, chosen) for i in dec.blocks[b])
    if ancestor_idx:
        at = entries[np.ix_(ancestor_idx, ancestor_idx)]
        r = entries[np.ix_(ancestor_idx, block_idx)]
        vt = np.linalg.solve(lam * np.eye(len(ancestor_idx)) - at, r @ vb)
        v[ancestor_idx] = np.maximum(vt, 0.0)

    v /= v.sum()
    # Check against a fraction of tol: lam itself is only known to inner/2,
    # so the residual against the exact radius can be slightly larger.
    residual = float(np.max(np.abs(entries @ v - lam * v)))
    if residual > 0.75 * tol:
        raise ConvergenceError(
            f"assembled eigenvector residual {residual:.3e} exceeds tol={tol}"
        )
    return v
