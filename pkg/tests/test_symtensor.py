from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hofa.exceptions import DomainError
from hofa.symtensor import (
    FLOAT,
    RATIONAL,
    DiagTensor,
    LoadingMatrix,
    SymTensor,
    add_diag,
    canonical_index,
    enumerate_indices,
    index_rank,
    tucker_diag,
    tucker_entry,
)

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=9)


@pytest.mark.parametrize(
    "raw, expected",
    [((3, 1, 2), (1, 2, 3)), ((2, 2), (2, 2)), ((5, 1, 5, 1), (1, 1, 5, 5))],
)
def test_canonical_index(raw, expected):
    assert canonical_index(raw) == expected
    assert canonical_index(expected) == expected


def test_canonical_index_out_of_range():
    with pytest.raises(DomainError):
        canonical_index((0, 1), p=3)
    with pytest.raises(DomainError):
        canonical_index((4,), p=3)


def test_enumerate_indices_examples():
    assert enumerate_indices(2, 2) == [(1, 1), (1, 2), (2, 2)]
    assert len(enumerate_indices(3, 3)) == 10
    assert enumerate_indices(1, 5) == [(1, 1, 1, 1, 1)]


@pytest.mark.parametrize("p", [1, 2, 3, 5])
@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_index_rank_matches_enumeration(p, r):
    idx = enumerate_indices(p, r)
    assert len(idx) == comb(p + r - 1, r)
    assert idx == sorted(idx)
    assert [index_rank(i, p) for i in idx] == list(range(len(idx)))


def test_lookup_any_permutation():
    T = SymTensor.from_entries(3, 3, {(1, 2, 3): Fraction(5, 2)})
    for perm in [(1, 2, 3), (3, 2, 1), (2, 1, 3), (3, 1, 2)]:
        assert T[perm] == Fraction(5, 2)
    assert T[1, 1, 1] == 0


def test_tucker_examples():
    T = tucker_diag(DiagTensor([1], 2), LoadingMatrix([[1], [1]]))
    assert np.array_equal(T.to_dense(), np.ones((2, 2), dtype=object))

    T = tucker_diag(DiagTensor([2], 3), LoadingMatrix([[1], [3]]))
    assert [T[1, 1, 1], T[1, 1, 2], T[1, 2, 2], T[2, 2, 2]] == [2, 6, 18, 54]

    T = tucker_diag(DiagTensor([0, 0], 3), LoadingMatrix([[1, 0], [2, 3], [4, 5]]))
    assert T == SymTensor.zeros(3, 3)


def test_tucker_shape_mismatch():
    with pytest.raises(DomainError):
        tucker_diag(DiagTensor([1, 2, 3], 2), LoadingMatrix([[1, 0], [1, 1], [1, 1]]))


def test_add_diag():
    E = DiagTensor([1, 2], 2)
    assert add_diag(SymTensor.zeros(2, 2), E) == E.to_sym()
    L = LoadingMatrix([[1, 0], [2, 3]])
    T = tucker_diag(DiagTensor([5, 7], 2), L)
    assert add_diag(T, DiagTensor([0, 0], 2)) == T
    S = add_diag(T, E)
    # hand sum: t11 = 5 + 1, t12 = 5*2, t22 = 5*4 + 7*9 + 2
    assert (S[1, 1], S[1, 2], S[2, 2]) == (6, 10, 85)
    with pytest.raises(DomainError):
        add_diag(T, DiagTensor([1, 2, 3], 2))


def test_scalar_kinds_do_not_mix():
    a = SymTensor(2, 1, [1, 2], RATIONAL)
    b = SymTensor(2, 1, [1.0, 2.0], FLOAT)
    with pytest.raises(DomainError):
        a + b
    assert (a.to_float() + b) == SymTensor(2, 1, [2.0, 4.0], FLOAT)
    with pytest.raises(DomainError):
        SymTensor(2, 1, [0.5, 1], RATIONAL)


def test_values_are_read_only():
    T = SymTensor(2, 2, [1, 2, 3])
    with pytest.raises(ValueError):
        T.values[0] = 5


def test_lower_triangular_gauge():
    with pytest.raises(DomainError):
        LoadingMatrix([[1, 1], [1, 1]], lower_triangular=True)
    with pytest.raises(DomainError):
        LoadingMatrix([[1, 0, 0], [1, 1, 0]])


def test_json_round_trip_and_diagnostics():
    T = SymTensor.from_entries(3, 2, {(1, 2): Fraction(-3, 4), (3, 3): 2})
    obj = T.to_json()
    assert obj["entries"] == [{"idx": [1, 2], "val": "-3/4"}, {"idx": [3, 3], "val": "2/1"}]
    assert SymTensor.from_json(obj) == T
    bad = dict(obj, entries=[{"idx": [2, 1], "val": "1/1"}])
    with pytest.raises(DomainError, match=r"entries\[0\]\.idx"):
        SymTensor.from_json(bad)
    with pytest.raises(DomainError, match="order"):
        SymTensor.from_json({k: v for k, v in obj.items() if k != "order"})


@st.composite
def diag_and_loading(draw):
    m = draw(st.integers(1, 3))
    p = draw(st.integers(m, 4))
    r = draw(st.integers(1, 4))
    d1 = draw(st.lists(fractions, min_size=m, max_size=m))
    d2 = draw(st.lists(fractions, min_size=m, max_size=m))
    L = [[draw(fractions) if j <= i else Fraction(0) for j in range(m)] for i in range(p)]
    return r, d1, d2, L


@settings(max_examples=40, deadline=None)
@given(diag_and_loading(), fractions, fractions)
def test_tucker_linear_in_core(data, a, b):
    r, d1, d2, L = data
    L = LoadingMatrix(L, RATIONAL, lower_triangular=True)
    lhs = tucker_diag(DiagTensor([a * x + b * y for x, y in zip(d1, d2)], r), L)
    rhs = tucker_diag(DiagTensor(d1, r), L).scale(a) + tucker_diag(DiagTensor(d2, r), L).scale(b)
    assert lhs == rhs


@settings(max_examples=40, deadline=None)
@given(diag_and_loading(), st.randoms(use_true_random=False))
def test_tucker_symmetric_and_truncation(data, rnd):
    r, d1, _, L = data
    L = LoadingMatrix(L, RATIONAL, lower_triangular=True)
    T = tucker_diag(DiagTensor(d1, r), L)
    dense = T.to_dense()
    for idx, val in T.items():
        perm = list(idx)
        rnd.shuffle(perm)
        assert T[perm] == val
        assert dense[tuple(i - 1 for i in perm)] == val
        assert tucker_entry(DiagTensor(d1, r), L, idx) == val
    assert len(T) == comb(L.p + r - 1, r)
