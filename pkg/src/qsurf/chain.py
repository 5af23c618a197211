"""Chain complexes over GF(2): tensor products, homology, distances.

A complex C_n -> C_{n-1} -> ... -> C_0 is stored as the ordered tuple of
its boundary matrices, highest grade first.  Boundary d_i maps C_i to
C_{i-1}, so as a matrix it has dim(C_{i-1}) rows and dim(C_i) columns;
maps requested beyond either end are zero maps of the appropriate shape.
Composites of consecutive maps must vanish (d_i @ d_{i+1} = 0 as
matrices acting on column vectors).

Distances are computed by exhaustive weight-bounded search, either over
supports of bounded weight or over the full kernel when its dimension is
small; both strategies are exact up to the cap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import gf2

INF = math.inf

# Cost ceiling for exhaustive searches (candidate vectors examined).
ENUMERATION_LIMIT = 1 << 27


class EnumerationLimitError(RuntimeError):
    """Raised when an exhaustive distance search would exceed the cost bound."""


@dataclass(frozen=True)
class ChainComplex:
    """Boundary matrices highest grade first: boundaries[0] is d_n.

    A complex with a single space and no boundary maps is represented by
    an empty boundary tuple plus an explicit dim_top.
    """

    boundaries: tuple[np.ndarray, ...]
    dim_top: int | None = None

    def __post_init__(self):
        mats = tuple(gf2.asbits(b) for b in self.boundaries)
        for m in mats:
            m.setflags(write=False)
        object.__setattr__(self, "boundaries", mats)
        if not mats and self.dim_top is None:
            raise ValueError("a boundary-free complex needs dim_top")

    @property
    def length(self) -> int:
        """Top grade n (the complex has grades 0..n)."""
        return len(self.boundaries)

    def dim(self, i: int) -> int:
        n = self.length
        if i < 0 or i > n:
            return 0
        if n == 0:
            return self.dim_top  # type: ignore[return-value]
        if i == 0:
            return self.boundaries[-1].shape[0]
        return self.boundaries[n - i].shape[1]

    def boundary(self, i: int) -> np.ndarray:
        """d_i as a matrix; zero-shaped map outside 1..n."""
        n = self.length
        if 1 <= i <= n:
            return self.boundaries[n - i]
        if i <= 0:
            return np.zeros((0, self.dim(max(i, 0))), dtype=np.uint8)
        return np.zeros((self.dim(n), 0), dtype=np.uint8)


def validate(c: ChainComplex) -> bool:
    """True iff adjacent dimensions chain and all composites vanish."""
    n = c.length
    for i in range(1, n):
        lo, hi = c.boundary(i), c.boundary(i + 1)
        if hi.shape[0] != lo.shape[1]:
            return False
        if np.any(gf2.matmul(lo, hi)):
            return False
    return True


def transpose_complex(c: ChainComplex) -> ChainComplex:
    """All boundary maps transposed, grading reversed."""
    if c.length == 0:
        return c
    flipped = tuple(b.T.copy() for b in reversed(c.boundaries))
    return ChainComplex(flipped)


def tensor_product(c: ChainComplex, d: ChainComplex) -> ChainComplex:
    """Total complex of the double complex of *c* and *d*.

    Tot_i is the direct sum of C_j (x) D_k over j + k = i, summands in
    ascending j; the basis inside each summand is row-major with the
    first factor varying slowest.  Block maps: vertical blocks
    d_j (x) I, horizontal blocks I (x) d_k, zero elsewhere.
    """
    if not validate(c) or not validate(d):
        raise ValueError("tensor_product requires valid complexes")
    nc, nd = c.length, d.length
    n = nc + nd

    def summands(i):
        return [(j, i - j) for j in range(max(0, i - nd), min(nc, i) + 1)]

    def offsets(parts):
        offs, total = {}, 0
        for j, k in parts:
            offs[(j, k)] = total
            total += c.dim(j) * d.dim(k)
        return offs, total

    mats = []
    for i in range(1, n + 1):
        src, dst = summands(i), summands(i - 1)
        src_off, src_dim = offsets(src)
        dst_off, dst_dim = offsets(dst)
        block = np.zeros((dst_dim, src_dim), dtype=np.uint8)
        for j, k in src:
            col0 = src_off[(j, k)]
            width = c.dim(j) * d.dim(k)
            if width == 0:
                continue
            if j >= 1 and (j - 1, k) in dst_off:
                row0 = dst_off[(j - 1, k)]
                v = gf2.kron(c.boundary(j), np.eye(d.dim(k), dtype=np.uint8))
                block[row0:row0 + v.shape[0], col0:col0 + width] = v
            if k >= 1 and (j, k - 1) in dst_off:
                row0 = dst_off[(j, k - 1)]
                h = gf2.kron(np.eye(c.dim(j), dtype=np.uint8), d.boundary(k))
                block[row0:row0 + h.shape[0], col0:col0 + width] = h
        mats.append(block)

    if not mats:
        return ChainComplex((), dim_top=c.dim(0) * d.dim(0))
    return ChainComplex(tuple(reversed(mats)))


def homology_dim(c: ChainComplex, i: int) -> int:
    """dim ker d_i - rank d_{i+1}  (maps beyond the ends are zero)."""
    if i < 0 or i > c.length:
        raise ValueError(f"grade {i} out of range 0..{c.length}")
    return c.dim(i) - gf2.rank(c.boundary(i)) - gf2.rank(c.boundary(i + 1))


def kunneth_dim(c: ChainComplex, d: ChainComplex, i: int) -> int:
    """Sum of homology_dim(c, j) * homology_dim(d, k) over j + k = i."""
    total = 0
    for j in range(0, c.length + 1):
        k = i - j
        if 0 <= k <= d.length:
            total += homology_dim(c, j) * homology_dim(d, k)
    return total


class _RowSpace:
    """Row space of a matrix with a fast batched membership reduction."""

    def __init__(self, m: np.ndarray):
        r, pivots = gf2.row_reduce(m)
        self.rows = r[: len(pivots)]
        self.pivots = pivots

    def reduce(self, batch: np.ndarray) -> np.ndarray:
        """XOR out pivot rows; a vector lies in the space iff it reduces to 0."""
        out = batch.copy()
        for i, col in enumerate(self.pivots):
            mask = out[:, col] == 1
            if mask.any():
                out[mask] ^= self.rows[i]
        return out


def _support_search(a, trivial, n, weight_cap, collect_all, budget):
    """Ascending-weight scan over supports; exact up to weight_cap.

    Once every weight below w has been exhausted, any hit at weight w is
    already minimal, so in first-hit mode the budget is checked batch by
    batch rather than level by level.
    """
    a_t = gf2.asbits(a).T.astype(np.int16)
    chunk = 1 << 16
    spent = 0
    for w in range(1, weight_cap + 1):
        if collect_all and spent + math.comb(n, w) > budget:
            raise EnumerationLimitError(
                f"support search needs {spent + math.comb(n, w)} candidates "
                f"(> limit {budget})"
            )
        hits: list[np.ndarray] = []
        combos = itertools.combinations(range(n), w)
        while True:
            if spent > budget:
                raise EnumerationLimitError(
                    f"support search exceeded the {budget}-candidate limit "
                    f"at weight {w}"
                )
            batch = list(itertools.islice(combos, chunk))
            if not batch:
                break
            spent += len(batch)
            idx = np.array(batch, dtype=np.intp)
            syn = a_t[idx].sum(axis=1) % 2
            in_kernel = ~syn.any(axis=1) if syn.shape[1] else np.ones(len(idx), bool)
            for ci in np.nonzero(in_kernel)[0]:
                v = np.zeros(n, dtype=np.uint8)
                v[idx[ci]] = 1
                if trivial.reduce(v[None, :]).any():
                    hits.append(v)
                    if not collect_all:
                        return w, hits
        if hits:
            return w, hits
    return None, []


def _kernel_search(kernel, trivial, weight_cap, collect_all):
    """Scan every nonzero kernel vector; exact for any cap."""
    k, n = kernel.shape
    best_w: int | None = None
    hits: list[np.ndarray] = []
    chunk = 1 << 14
    kk = kernel.astype(np.uint8)
    for start in range(1, 1 << k, chunk):
        stop = min(start + chunk, 1 << k)
        ints = np.arange(start, stop, dtype=np.uint64)
        bits = ((ints[:, None] >> np.arange(k, dtype=np.uint64)) & 1).astype(np.uint8)
        vecs = (bits.astype(np.int16) @ kk.astype(np.int16) % 2).astype(np.uint8)
        weights = vecs.sum(axis=1)
        cap = best_w if best_w is not None else weight_cap
        cand = np.nonzero(weights <= cap)[0]
        if cand.size == 0:
            continue
        sub = vecs[cand]
        nontrivial = trivial.reduce(sub).any(axis=1)
        for v, w in zip(sub[nontrivial], weights[cand][nontrivial]):
            w = int(w)
            if best_w is None or w < best_w:
                best_w, hits = w, [v]
            elif w == best_w and collect_all:
                hits.append(v)
    if best_w is None:
        return None, []
    if not collect_all:
        hits = hits[:1]
    return best_w, hits


def min_weight_nontrivial(
    a,
    b,
    weight_cap: int = 6,
    collect_all: bool = False,
    budget: int = ENUMERATION_LIMIT,
):
    """Least-weight v with a @ v = 0 and v outside the row space of b.

    Returns (weight, vectors); (None, []) when nothing of weight <=
    weight_cap exists.  Raises EnumerationLimitError when both search
    strategies exceed *budget* candidates.
    """
    a = gf2.asbits(a)
    n = a.shape[1]
    trivial = _RowSpace(gf2.asbits(b))
    kernel = gf2.kernel_basis(a)
    kdim = kernel.shape[0]
    support_cost = sum(math.comb(n, w) for w in range(1, weight_cap + 1))
    kernel_cost = (1 << kdim) if kdim < 63 else math.inf
    if kernel_cost <= min(support_cost, budget):
        return _kernel_search(kernel, trivial, weight_cap, collect_all)
    # The support scan checks its budget weight level by weight level, so
    # it can still succeed when a hit exists at low weight even if the
    # full sweep up to the cap would be infeasible.
    return _support_search(a, trivial, n, weight_cap, collect_all, budget)


def systolic_distance(c: ChainComplex, i: int, weight_cap: int = 6):
    """Minimum weight of a grade-i cycle not a boundary.

    Returns an int, INF when the homology at grade i is trivial, or None
    when nothing of weight <= weight_cap was found (distance exceeds the
    cap).
    """
    if i < 0 or i > c.length:
        raise ValueError(f"grade {i} out of range 0..{c.length}")
    if homology_dim(c, i) == 0:
        return INF
    w, _ = min_weight_nontrivial(c.boundary(i), c.boundary(i + 1).T, weight_cap)
    return w


def cosystolic_distance(c: ChainComplex, i: int, weight_cap: int = 6):
    """Systolic distance of the transpose complex at the matching grade:
    minimum weight of a grade-i cocycle not a coboundary."""
    if i < 0 or i > c.length:
        raise ValueError(f"grade {i} out of range 0..{c.length}")
    if homology_dim(c, i) == 0:  # dim H^i = dim H_i over a field
        return INF
    w, _ = min_weight_nontrivial(c.boundary(i + 1).T, c.boundary(i), weight_cap)
    return w


@dataclass(frozen=True)
class DistanceProfile:
    """Per-grade systolic and cosystolic distances of a complex.

    Entries are ints, INF (trivial homology; at grade 0 this is the
    surjective-d_1 convention), or None (search capped out).
    """

    systolic: tuple
    cosystolic: tuple

    def d(self, i: int):
        if i < 0 or i >= len(self.systolic):
            return INF
        return self.systolic[i]

    def d_co(self, i: int):
        if i < 0 or i >= len(self.cosystolic):
            return INF
        return self.cosystolic[i]


def distance_profile(c: ChainComplex, weight_cap: int = 6) -> DistanceProfile:
    sys_d, cosys_d = [], []
    for i in range(c.length + 1):
        try:
            sys_d.append(systolic_distance(c, i, weight_cap))
        except EnumerationLimitError:
            sys_d.append(None)
        try:
            cosys_d.append(cosystolic_distance(c, i, weight_cap))
        except EnumerationLimitError:
            cosys_d.append(None)
    return DistanceProfile(tuple(sys_d), tuple(cosys_d))


def _mul(a, b):
    if a is None or b is None:
        return None
    if a is INF or b is INF:
        return INF
    return a * b


def product_distance(dc: DistanceProfile, dd: DistanceProfile, i: int):
    """min(d_i(C) * d_0(D), d_{i-1}(C) * d_1(D)) with INF-absorbing
    arithmetic; *dd* must come from a 2-term complex."""
    if len(dd.systolic) != 2:
        raise ValueError("second factor must be a 2-term complex profile")
    t1 = _mul(dc.d(i), dd.d(0))
    t2 = _mul(dc.d(i - 1), dd.d(1))
    if t1 is None or t2 is None:
        return None
    return min(t1, t2)
