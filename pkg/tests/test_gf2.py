import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsurf import gf2
from qsurf.codes import repetition_pcm


def brute_rank(m):
    """Independent rank oracle: the row space of a rank-r matrix has
    exactly 2^r elements."""
    m = np.asarray(m, dtype=np.uint8)
    seen = set()
    for picks in itertools.product([0, 1], repeat=m.shape[0]):
        v = np.zeros(m.shape[1], dtype=np.uint8)
        for i, b in enumerate(picks):
            if b:
                v ^= m[i]
        seen.add(v.tobytes())
    r = 0
    while (1 << r) < len(seen):
        r += 1
    assert (1 << r) == len(seen)
    return r


@st.composite
def small_matrix(draw, max_rows=6, max_cols=7):
    rows = draw(st.integers(0, max_rows))
    cols = draw(st.integers(1, max_cols))
    data = draw(st.lists(st.integers(0, 1), min_size=rows * cols, max_size=rows * cols))
    return np.array(data, dtype=np.uint8).reshape(rows, cols)


def test_rank_identity_and_zero():
    assert gf2.rank(np.eye(3, dtype=np.uint8)) == 3
    assert gf2.rank(np.zeros((4, 7), dtype=np.uint8)) == 0


def test_rank_repetition_pcm():
    h = repetition_pcm(4)
    assert gf2.rank(h) == 3
    assert brute_rank(h) == 3


def test_rank_equals_transpose_rank():
    rng = np.random.default_rng(7)
    for _ in range(30):
        m = rng.integers(0, 2, size=(5, 8), dtype=np.uint8)
        assert gf2.rank(m) == gf2.rank(m.T)


@given(small_matrix())
@settings(max_examples=60, deadline=None)
def test_rank_matches_brute_oracle(m):
    assert gf2.rank(m) == brute_rank(m)


@given(small_matrix())
@settings(max_examples=60, deadline=None)
def test_rank_nullity(m):
    assert gf2.rank(m) + gf2.kernel_basis(m).shape[0] == m.shape[1]


def test_kernel_repetition_l3():
    basis = gf2.kernel_basis(repetition_pcm(3))
    assert basis.shape == (1, 3)
    assert np.array_equal(basis[0], [1, 1, 1])


def test_kernel_identity_empty():
    assert gf2.kernel_basis(np.eye(2, dtype=np.uint8)).shape == (0, 2)


@given(small_matrix())
@settings(max_examples=60, deadline=None)
def test_kernel_vectors_annihilate(m):
    for v in gf2.kernel_basis(m):
        assert not gf2.matvec(m, v).any()


def test_kron_identities():
    assert np.array_equal(
        gf2.kron(np.eye(2, dtype=np.uint8), np.eye(3, dtype=np.uint8)),
        np.eye(6, dtype=np.uint8),
    )
    h2 = repetition_pcm(2)
    assert np.array_equal(gf2.kron(h2, h2), [[1, 1, 1, 1]])


def test_kron_rank_multiplies():
    rng = np.random.default_rng(11)
    for _ in range(120):
        a = rng.integers(0, 2, size=(4, 6), dtype=np.uint8)
        b = rng.integers(0, 2, size=(3, 5), dtype=np.uint8)
        assert gf2.rank(gf2.kron(a, b)) == gf2.rank(a) * gf2.rank(b)


def test_kron_associative():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 2, size=(2, 3), dtype=np.uint8)
    b = rng.integers(0, 2, size=(3, 2), dtype=np.uint8)
    c = rng.integers(0, 2, size=(2, 2), dtype=np.uint8)
    assert np.array_equal(gf2.kron(gf2.kron(a, b), c), gf2.kron(a, gf2.kron(b, c)))


def test_solve_identity_and_zero():
    eye = np.eye(4, dtype=np.uint8)
    y = np.array([1, 0, 1, 1], dtype=np.uint8)
    assert np.array_equal(gf2.solve(eye, y), y)
    x = gf2.solve(repetition_pcm(4), np.zeros(3, dtype=np.uint8))
    assert not x.any()


def test_solve_repetition_exhaustive():
    h = repetition_pcm(4)
    y = np.array([1, 0, 0], dtype=np.uint8)
    solutions = set()
    for bits in itertools.product([0, 1], repeat=4):
        v = np.array(bits, dtype=np.uint8)
        if np.array_equal(gf2.matvec(h, v), y):
            solutions.add(v.tobytes())
    x = gf2.solve(h, y)
    assert x.tobytes() in solutions


@given(small_matrix(), st.data())
@settings(max_examples=60, deadline=None)
def test_solve_postcondition(m, data):
    y = np.array(
        data.draw(st.lists(st.integers(0, 1), min_size=m.shape[0],
                           max_size=m.shape[0])),
        dtype=np.uint8,
    )
    x = gf2.solve(m, y)
    if x is not None:
        assert np.array_equal(gf2.matvec(m, x), y)
    else:
        for bits in itertools.product([0, 1], repeat=min(m.shape[1], 10)):
            v = np.zeros(m.shape[1], dtype=np.uint8)
            v[: len(bits)] = bits
            assert not np.array_equal(gf2.matvec(m, v), y)


def test_solve_dimension_mismatch():
    with pytest.raises(ValueError):
        gf2.solve(np.eye(3, dtype=np.uint8), np.zeros(2, dtype=np.uint8))


def test_in_row_space_trivial_cases():
    m = repetition_pcm(5)
    assert gf2.in_row_space(m, np.zeros(5, dtype=np.uint8))
    for row in m:
        assert gf2.in_row_space(m, row)


@given(small_matrix(max_rows=4, max_cols=6), st.data())
@settings(max_examples=40, deadline=None)
def test_in_row_space_matches_enumeration(m, data):
    v = np.array(
        data.draw(st.lists(st.integers(0, 1), min_size=m.shape[1],
                           max_size=m.shape[1])),
        dtype=np.uint8,
    )
    combos = set()
    for picks in itertools.product([0, 1], repeat=m.shape[0]):
        w = np.zeros(m.shape[1], dtype=np.uint8)
        for i, b in enumerate(picks):
            if b:
                w ^= m[i]
        combos.add(w.tobytes())
    assert gf2.in_row_space(m, v) == (v.tobytes() in combos)


def test_matrix_text_roundtrip():
    rng = np.random.default_rng(5)
    m = rng.integers(0, 2, size=(4, 9), dtype=np.uint8)
    text = gf2.matrix_to_text(m)
    assert text.splitlines()[0] == "4 9"
    assert np.array_equal(gf2.matrix_from_text(text), m)
    assert gf2.matrix_to_text(gf2.matrix_from_text(text)) == text
