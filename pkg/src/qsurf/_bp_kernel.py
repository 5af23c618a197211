"""JIT-compiled flooding product-sum BP kernel.

Edges are stored check-sorted (CSR); the variable pass walks a
precomputed permutation into the same edge arrays.  Semantics match the
pure-numpy path in decoder.bp_decode: message clipping, exact-zero
handling in the leave-one-out tanh product, early exit on syndrome
match, and a fixed-point / period-2 stall exit.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap

_LLR_CLIP = 30.0
_TANH_FLOOR = 1e-30


@njit(cache=True)
def bp_flood_kernel(check_ptr, evar, var_ptr, var_edges, prior_llr,
                    syndrome, max_iter, clamp, patience):
    n_checks = check_ptr.size - 1
    n_vars = var_ptr.size - 1
    n_edges = evar.size
    m_v2c = np.empty(n_edges)
    for e in range(n_edges):
        m_v2c[e] = prior_llr[evar[e]]
    m_c2v = np.zeros(n_edges)
    totals = prior_llr.copy()
    hard = np.zeros(n_vars, dtype=np.uint8)
    t = np.empty(n_edges)
    converged = False
    atanh_cap = 1.0 - clamp
    # Exactly repeated message states evolve deterministically, so any
    # revisit proves a limit cycle and the iteration budget is a no-op;
    # a rolling window of state hashes catches periods up to its size.
    history = np.zeros(16, dtype=np.uint64)
    n_hist = 0
    best_unsat = n_checks + 1
    since_best = 0

    for _ in range(max_iter):
        # Check pass: leave-one-out tanh products with exact zeros.
        for c in range(n_checks):
            lo, hi = check_ptr[c], check_ptr[c + 1]
            prod = 1.0
            n_zero = 0
            zero_edge = -1
            for e in range(lo, hi):
                msg = m_v2c[e]
                if msg > _LLR_CLIP:
                    msg = _LLR_CLIP
                elif msg < -_LLR_CLIP:
                    msg = -_LLR_CLIP
                te = np.tanh(0.5 * msg)
                t[e] = te
                if abs(te) < _TANH_FLOOR:
                    n_zero += 1
                    zero_edge = e
                else:
                    prod *= te
            sign = -1.0 if syndrome[c] else 1.0
            for e in range(lo, hi):
                if n_zero == 0:
                    out = prod / t[e]
                elif n_zero == 1:
                    out = prod if e == zero_edge else 0.0
                else:
                    out = 0.0
                if out > atanh_cap:
                    out = atanh_cap
                elif out < -atanh_cap:
                    out = -atanh_cap
                m_c2v[e] = sign * 2.0 * np.arctanh(out)

        # Variable pass.
        for v in range(n_vars):
            s = prior_llr[v]
            for k in range(var_ptr[v], var_ptr[v + 1]):
                s += m_c2v[var_edges[k]]
            totals[v] = s
            hard[v] = 1 if s < 0 else 0
            for k in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edges[k]
                m_v2c[e] = s - m_c2v[e]

        unsat = 0
        for c in range(n_checks):
            parity = 0
            for e in range(check_ptr[c], check_ptr[c + 1]):
                parity ^= hard[evar[e]]
            if parity != syndrome[c]:
                unsat += 1
        if unsat == 0:
            converged = True
            break
        if unsat < best_unsat:
            best_unsat = unsat
            since_best = 0
        else:
            since_best += 1
            if since_best >= patience:
                break

        bits = m_v2c.view(np.uint64)
        h = np.uint64(14695981039346656037)
        for e in range(n_edges):
            h = (h ^ bits[e]) * np.uint64(1099511628211)
        repeated = False
        for k in range(min(n_hist, 16)):
            if history[k] == h:
                repeated = True
                break
        if repeated:
            break
        history[n_hist % 16] = h
        n_hist += 1

    return totals, hard, converged


@njit(parallel=True, cache=True)
def bp_flood_batch(check_ptr, evar, var_ptr, var_edges, prior_llr,
                   syndromes, max_iter, clamp, patience):
    """bp_flood_kernel over a batch of syndromes, one thread per lane."""
    batch = syndromes.shape[0]
    n_vars = var_ptr.size - 1
    totals = np.empty((batch, n_vars))
    hard = np.empty((batch, n_vars), dtype=np.uint8)
    converged = np.zeros(batch, dtype=np.uint8)
    for b in prange(batch):
        t, h, c = bp_flood_kernel(check_ptr, evar, var_ptr, var_edges,
                                  prior_llr, syndromes[b], max_iter,
                                  clamp, patience)
        totals[b] = t
        hard[b] = h
        converged[b] = 1 if c else 0
    return totals, hard, converged


@njit(cache=True)
def gf2_eliminate(mat, n_pivot_cols):
    """In-place RREF of a uint8 matrix over GF(2), pivots restricted to
    the first n_pivot_cols columns; returns the pivot column indices.
    Row operations span the full width, so augmented columns reduce
    along."""
    nrows, ncols = mat.shape
    pivots = np.empty(min(nrows, n_pivot_cols), dtype=np.int64)
    n_piv = 0
    prow = 0
    for col in range(n_pivot_cols):
        if prow == nrows:
            break
        pivot = -1
        for r in range(prow, nrows):
            if mat[r, col]:
                pivot = r
                break
        if pivot < 0:
            continue
        if pivot != prow:
            for c in range(ncols):
                tmp = mat[prow, c]
                mat[prow, c] = mat[pivot, c]
                mat[pivot, c] = tmp
        for r in range(nrows):
            if r != prow and mat[r, col]:
                for c in range(ncols):
                    mat[r, c] ^= mat[prow, c]
        pivots[n_piv] = col
        n_piv += 1
        prow += 1
    return pivots[:n_piv]


def build_csr(pcm: np.ndarray):
    """Check-sorted edge arrays plus the variable-pass permutation."""
    echk, evar = np.nonzero(pcm)
    order = np.argsort(echk, kind="stable")
    echk = echk[order].astype(np.int64)
    evar = evar[order].astype(np.int64)
    m, n = pcm.shape
    check_ptr = np.zeros(m + 1, dtype=np.int64)
    np.add.at(check_ptr, echk + 1, 1)
    check_ptr = np.cumsum(check_ptr)
    by_var = np.argsort(evar, kind="stable").astype(np.int64)
    var_ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(var_ptr, evar + 1, 1)
    var_ptr = np.cumsum(var_ptr)
    return check_ptr, evar, var_ptr, by_var
