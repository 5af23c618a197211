"""Repetition-code complexes and the 2D/3D/4D surface codes.

The codes are built by iterated tensor products of the two repetition
complexes (one with the bidiagonal check matrix H as its boundary, one
with its transpose):

    E = C (x) D        2D surface code, qubits at grade 1
    F = E (x) D        3D surface code, qubits at grade 1 or 2
    G = F (x) C        4D surface code, qubits at grade 2

Slicing a complex at qubit grade i gives H_X = d_i and H_Z = d_{i+1}^T;
one grade further out on each side (when the complex is long enough)
gives the metacheck matrices M_X = d_{i-1} and M_Z = d_{i+2}^T, which
annihilate valid syndromes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf2
from .chain import (
    INF,
    ChainComplex,
    EnumerationLimitError,
    cosystolic_distance,
    homology_dim,
    min_weight_nontrivial,
    systolic_distance,
    tensor_product,
    transpose_complex,
)


@dataclass(frozen=True)
class CssCode:
    """A CSS code with optional metachecks and logical representatives.

    d is the exact distance when the bounded search confirmed it, else
    None; d_floor is the exhaustively verified lower bound (d >= d_floor
    always holds, and d == d_floor when d is known).
    """

    n: int
    k: int
    d: int | None
    d_floor: int
    h_x: np.ndarray
    h_z: np.ndarray
    m_x: np.ndarray | None
    m_z: np.ndarray | None
    logicals_x: np.ndarray
    logicals_z: np.ndarray
    qubit_grade: int

    def __post_init__(self):
        for name in ("h_x", "h_z", "m_x", "m_z", "logicals_x", "logicals_z"):
            arr = getattr(self, name)
            if arr is not None:
                arr = gf2.asbits(arr)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def num_x_checks(self) -> int:
        return self.h_x.shape[0]

    @property
    def num_z_checks(self) -> int:
        return self.h_z.shape[0]

    def metacheck(self, side: str) -> np.ndarray | None:
        if side not in ("x", "z"):
            raise ValueError("side must be 'x' or 'z'")
        return self.m_x if side == "x" else self.m_z


def repetition_pcm(length: int) -> np.ndarray:
    """(L-1) x L bidiagonal parity-check matrix of the length-L
    repetition code."""
    if length < 2:
        raise ValueError("repetition code needs L >= 2")
    h = np.zeros((length - 1, length), dtype=np.uint8)
    for i in range(length - 1):
        h[i, i] = 1
        h[i, i + 1] = 1
    return h


def repetition_complex(length: int, transposed: bool = False) -> ChainComplex:
    """2-term complex with boundary H (or H^T when *transposed*)."""
    h = repetition_pcm(length)
    return ChainComplex((h.T.copy() if transposed else h,))


def _coset_representatives(a, b, k, weight_cap):
    """k minimum-weight vectors spanning independent classes of
    ker(a) modulo rowspace(b)."""
    w, hits = min_weight_nontrivial(a, b, weight_cap, collect_all=True)
    if w is None:
        raise EnumerationLimitError(
            f"no nontrivial vector of weight <= {weight_cap} found"
        )
    reps: list[np.ndarray] = []
    base = gf2.asbits(b)
    for v in hits:
        stack = np.vstack([base] + [r[None, :] for r in reps] + [v[None, :]])
        if gf2.rank(stack) > gf2.rank(stack[:-1]):
            reps.append(v)
        if len(reps) == k:
            return np.array(reps, dtype=np.uint8)
    # Rare k > 1 case where the minimum weight stratum spans fewer than k
    # classes: complete the basis algebraically (non-minimal weight).
    for v in gf2.kernel_basis(a):
        stack = np.vstack([base] + [r[None, :] for r in reps] + [v[None, :]])
        if gf2.rank(stack) > gf2.rank(stack[:-1]):
            reps.append(v)
        if len(reps) == k:
            return np.array(reps, dtype=np.uint8)
    raise EnumerationLimitError("could not assemble a full set of representatives")


def _algebraic_representatives(a, b, k) -> np.ndarray:
    """k independent coset representatives of ker(a) mod rowspace(b),
    with no weight minimization."""
    reps: list[np.ndarray] = []
    base = gf2.asbits(b)
    for v in gf2.kernel_basis(a):
        stack = np.vstack([base] + [r[None, :] for r in reps] + [v[None, :]])
        if gf2.rank(stack) > gf2.rank(stack[:-1]):
            reps.append(v)
        if len(reps) == k:
            return np.array(reps, dtype=np.uint8)
    raise ValueError("kernel does not span k nontrivial classes")


def _gf2_inverse(p: np.ndarray) -> np.ndarray:
    k = p.shape[0]
    aug = np.hstack([p, np.eye(k, dtype=np.uint8)])
    r, pivots = gf2.row_reduce(aug, n_pivot_cols=k)
    if len(pivots) != k:
        raise ValueError("pairing matrix is singular")
    return r[:, k:]


def _pair_logicals(lx: np.ndarray, lz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Adjust the Z representatives so overlap parities are the identity."""
    pairing = (lx.astype(np.int64) @ lz.T.astype(np.int64)) % 2
    inv = _gf2_inverse(pairing.astype(np.uint8))
    new_z = (inv.T.astype(np.int64) @ lz.astype(np.int64) % 2).astype(np.uint8)
    return lx, new_z


def logical_representatives(code: CssCode, weight_cap: int | None = None):
    """Minimum-weight logical representatives, paired so that
    logicals_x[i] . logicals_z[j] has overlap parity delta_ij."""
    if code.k < 1:
        raise ValueError("code has no logical qubits")
    cap = weight_cap if weight_cap is not None else max(code.d_floor, 6)
    lz = _coset_representatives(code.h_x, code.h_z, code.k, cap)
    lx = _coset_representatives(code.h_z, code.h_x, code.k, cap)
    return _pair_logicals(lx, lz)


def css_from_complex(
    cx: ChainComplex, qubit_grade: int, weight_cap: int = 6
) -> CssCode:
    """Slice a chain complex into a CSS code at the given qubit grade."""
    i = qubit_grade
    if not (1 <= i <= cx.length - 1):
        raise ValueError(
            f"qubit grade {i} needs boundary maps on both sides "
            f"(complex has grades 0..{cx.length})"
        )
    h_x = cx.boundary(i).copy()
    h_z = cx.boundary(i + 1).T.copy()
    m_x = cx.boundary(i - 1).copy() if i - 1 >= 1 else None
    m_z = cx.boundary(i + 2).T.copy() if i + 2 <= cx.length else None

    n = cx.dim(i)
    k = homology_dim(cx, i)

    d: int | None = None
    d_floor = 1
    if k > 0:
        # Per side: an int is that side's exact minimum, "capped" means
        # the exhaustive search completed with no hit (minimum > cap),
        # "unknown" means the search was infeasible within the budget.
        sides = []
        for fn in (systolic_distance, cosystolic_distance):
            try:
                sides.append(fn(cx, i, weight_cap))
            except EnumerationLimitError:
                sides.append("unknown")
        found = [s for s in sides if isinstance(s, (int, float)) and s is not INF]
        if found and all(s != "unknown" for s in sides):
            d = int(min(found))
            d_floor = d
        elif all(s is None for s in sides):
            d_floor = weight_cap + 1

    def reps(a, b):
        if not k:
            return np.zeros((0, n), np.uint8)
        try:
            return _coset_representatives(a, b, k, weight_cap)
        except EnumerationLimitError:
            # Representatives beyond the search cap: fall back to an
            # algebraic coset basis (valid logicals, not minimum weight).
            return _algebraic_representatives(a, b, k)

    lz = reps(h_x, h_z)
    lx = reps(h_z, h_x)
    if k:
        lx, lz = _pair_logicals(lx, lz)

    return CssCode(
        n=n, k=k, d=d, d_floor=d_floor,
        h_x=h_x, h_z=h_z, m_x=m_x, m_z=m_z,
        logicals_x=lx, logicals_z=lz, qubit_grade=i,
    )


def surface_code(dimension: int, length: int, qubit_grade: int | None = None,
                 weight_cap: int = 6) -> CssCode:
    """The open-boundary surface code of the given dimension and side
    length L, as a CSS code with metachecks where the complex allows.

    Expected parameter families:
        2D: [[L^2 + (L-1)^2, 1, L]]
        3D: [[L^3 + 2L(L-1)^2, 1, min(L, L^2)]]
        4D: [[6L^4 - 12L^3 + 10L^2 - 4L + 1, 1, L^2]]
    """
    if dimension not in (2, 3, 4):
        raise ValueError("dimension must be 2, 3, or 4")
    c = repetition_complex(length)
    d_cx = repetition_complex(length, transposed=True)
    e = tensor_product(c, d_cx)
    if dimension == 2:
        cx, forced = e, 1
    elif dimension == 3:
        cx, forced = tensor_product(e, d_cx), None
    else:
        f = tensor_product(e, d_cx)
        cx, forced = tensor_product(f, c), 2

    if forced is not None:
        if qubit_grade is not None and qubit_grade != forced:
            raise ValueError(
                f"{dimension}D qubit grade is fixed to {forced}"
            )
        grade = forced
    else:
        grade = 1 if qubit_grade is None else qubit_grade
        if grade not in (1, 2):
            raise ValueError("3D qubit grade must be 1 or 2")
        if grade == 2:
            # Qubits in the middle space with the metachecked syndrome
            # type swapped: the homology of F itself sits only at grade
            # 1, so the grade-2 variant is the transpose complex (same
            # qubits, X and Z roles exchanged, X-side metachecks).
            return css_from_complex(transpose_complex(cx), 2, weight_cap)

    return css_from_complex(cx, grade, weight_cap)


def metacheck_code_distance(code: CssCode, side: str, weight_cap: int = 6) -> int:
    """Distance of the classical code whose parity-check matrix is the
    metacheck matrix on the given side (minimum weight of a nonzero
    syndrome pattern that every metacheck accepts)."""
    m = code.metacheck(side)
    if m is None:
        raise ValueError(f"code has no {side.upper()}-side metachecks")
    empty = np.zeros((0, m.shape[1]), dtype=np.uint8)
    w, _ = min_weight_nontrivial(m, empty, weight_cap)
    if w is None:
        raise EnumerationLimitError(
            f"metacheck code distance exceeds cap {weight_cap}"
        )
    return int(w)


def validate_css(code: CssCode) -> bool:
    """Bit-exact structural checks: commutation, metacheck orthogonality,
    logical commutation with stabilizers, and the pairing identity."""
    if np.any(gf2.matmul(code.h_x, code.h_z.T)):
        return False
    if code.m_x is not None and np.any(gf2.matmul(code.m_x, code.h_x)):
        return False
    if code.m_z is not None and np.any(gf2.matmul(code.m_z, code.h_z)):
        return False
    if code.k:
        if np.any(gf2.matmul(code.h_x, code.logicals_z.T)):
            return False
        if np.any(gf2.matmul(code.h_z, code.logicals_x.T)):
            return False
        pairing = gf2.matmul(code.logicals_x, code.logicals_z.T)
        if not np.array_equal(pairing, np.eye(code.k, dtype=np.uint8)):
            return False
    return True
