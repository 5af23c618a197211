"""Dense GF(2) linear algebra on numpy uint8 arrays.

Matrices are 2-D uint8 arrays with entries in {0, 1}; vectors are 1-D.
All arithmetic is mod 2.  Row reduction uses deterministic pivoting
(lowest column index first) so kernel bases and solutions are
reproducible across runs.  Empty shapes (zero rows or columns) are valid
and represent zero maps.
"""

from __future__ import annotations

import numpy as np


def asbits(a) -> np.ndarray:
    """Return *a* as a uint8 array, checking all entries are 0 or 1."""
    m = np.asarray(a, dtype=np.uint8)
    if m.size and m.max() > 1:
        raise ValueError("matrix entries must be 0 or 1")
    return m


def row_reduce(m, n_pivot_cols: int | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form over GF(2).

    Pivots are searched in ascending column order over the first
    *n_pivot_cols* columns (default: all); row operations apply to the
    full row width, so augmented columns reduce along.

    Returns:
        (R, pivot_cols): the RREF and the list of pivot column indices
        (its length is the GF(2) rank of the searched columns).
    """
    r = asbits(m).copy()
    if r.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    nrows, ncols = r.shape
    if n_pivot_cols is None:
        n_pivot_cols = ncols

    pivot_cols: list[int] = []
    prow = 0
    for col in range(n_pivot_cols):
        if prow == nrows:
            break
        hits = np.nonzero(r[prow:, col])[0]
        if hits.size == 0:
            continue
        pivot = prow + hits[0]
        if pivot != prow:
            r[[prow, pivot]] = r[[pivot, prow]]
        others = np.nonzero(r[:, col])[0]
        others = others[others != prow]
        if others.size:
            r[others] ^= r[prow]
        pivot_cols.append(col)
        prow += 1
    return r, pivot_cols


def rank(m) -> int:
    """GF(2) rank of a binary matrix."""
    _, pivots = row_reduce(m)
    return len(pivots)


def kernel_basis(m) -> np.ndarray:
    """Basis of the right kernel {v : Mv = 0}, one vector per row.

    The basis is deterministic: one vector per free column, in ascending
    free-column order.  Shape is (cols - rank, cols).
    """
    mm = asbits(m)
    nrows, ncols = mm.shape
    r, pivots = row_reduce(mm)
    free = [c for c in range(ncols) if c not in pivots]
    basis = np.zeros((len(free), ncols), dtype=np.uint8)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = r[i, fc]
    return basis


def kron(a, b) -> np.ndarray:
    """Kronecker product over GF(2) (entries stay in {0, 1})."""
    return np.kron(asbits(a), asbits(b))


def matmul(a, b) -> np.ndarray:
    """Matrix product mod 2.

    Computed through BLAS in float64: integer counts stay exact far
    beyond any inner dimension in reach, and it is orders of magnitude
    faster than numpy's generic integer matmul on large blocks.
    """
    prod = asbits(a).astype(np.float64) @ asbits(b).astype(np.float64)
    return (prod % 2).astype(np.uint8)


def matvec(m, v) -> np.ndarray:
    """Matrix-vector product mod 2."""
    mm = asbits(m)
    vv = asbits(v)
    if vv.shape[0] != mm.shape[1]:
        raise ValueError(f"dimension mismatch: {mm.shape} @ {vv.shape}")
    return ((mm.astype(np.int64) @ vv.astype(np.int64)) % 2).astype(np.uint8)


def solve(m, y) -> np.ndarray | None:
    """Some x with Mx = y, or None if no solution exists.

    Free variables are set to zero, so the returned solution is
    deterministic.
    """
    mm = asbits(m)
    yy = asbits(y)
    if yy.shape[0] != mm.shape[0]:
        raise ValueError(f"dimension mismatch: {mm.shape} rows vs {yy.shape} syndrome")
    aug = np.hstack([mm, yy.reshape(-1, 1)])
    r, pivots = row_reduce(aug, n_pivot_cols=mm.shape[1])
    x = np.zeros(mm.shape[1], dtype=np.uint8)
    for i, pc in enumerate(pivots):
        x[pc] = r[i, -1]
    # Rows below the last pivot must have zero right-hand side.
    if np.any(r[len(pivots):, -1]):
        return None
    return x


def in_row_space(m, v) -> bool:
    """True iff v is a GF(2) combination of the rows of M."""
    mm = asbits(m)
    vv = asbits(v)
    if vv.shape[0] != mm.shape[1]:
        raise ValueError(f"dimension mismatch: {mm.shape} cols vs {vv.shape}")
    return rank(np.vstack([mm, vv])) == rank(mm)


def matrix_to_text(m) -> str:
    """Serialize to the plain-text format: 'rows cols' header, then one
    row of 0/1 characters per line."""
    mm = asbits(m)
    lines = [f"{mm.shape[0]} {mm.shape[1]}"]
    for row in mm:
        lines.append("".join("1" if b else "0" for b in row))
    return "\n".join(lines) + "\n"


def matrix_from_text(text: str) -> np.ndarray:
    """Parse the plain-text matrix format produced by matrix_to_text."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix text")
    nrows, ncols = (int(t) for t in lines[0].split())
    if len(lines) - 1 != nrows:
        raise ValueError(f"expected {nrows} rows, got {len(lines) - 1}")
    out = np.zeros((nrows, ncols), dtype=np.uint8)
    for i, ln in enumerate(lines[1:]):
        ln = ln.strip()
        if len(ln) != ncols or set(ln) - {"0", "1"}:
            raise ValueError(f"bad row {i}: {ln!r}")
        out[i] = [c == "1" for c in ln]
    return out
