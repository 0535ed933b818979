import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hofa.cumulants import (
    MAX_PARTITION_ORDER,
    TensorSequence,
    analytic_cumulants,
    bell_number,
    bernoulli_number,
    cumulants_to_moments,
    moments_to_cumulants,
    partitions,
    univariate_sequence,
)
from hofa.exceptions import CapacityError, DomainError
from hofa.symtensor import SymTensor, enumerate_indices

from conftest import random_fraction


def random_sequence(rng, p, k, zero_mean):
    first = 2 if zero_mean else 1
    tensors = {
        r: SymTensor(p, r, [random_fraction(rng) for _ in enumerate_indices(p, r)])
        for r in range(first, k + 1)
    }
    return TensorSequence(p, k, tensors, zero_mean)


@pytest.mark.parametrize("r, count", [(1, 1), (2, 2), (3, 5), (4, 15), (6, 203), (8, 4140)])
def test_partition_counts(r, count):
    parts = partitions(r)
    assert len(parts) == count == bell_number(r)
    assert len(set(parts)) == count


def test_partition_cap():
    with pytest.raises(CapacityError):
        partitions(MAX_PARTITION_ORDER + 1)


def test_univariate_examples():
    kappa = moments_to_cumulants(univariate_sequence([1, 2, 4]))
    assert [kappa[r][(1,) * r] for r in (1, 2, 3)] == [1, 1, 0]

    kappa = moments_to_cumulants(univariate_sequence([1, 0, 3], zero_mean=True))
    assert kappa[4][1, 1, 1, 1] == 0

    mom = cumulants_to_moments(univariate_sequence([0, 1, 0, 0]))
    assert [mom[r][(1,) * r] for r in (2, 3, 4)] == [1, 0, 3]


def test_zero_in_zero_out():
    z = TensorSequence(3, 4, {r: SymTensor.zeros(3, r) for r in range(1, 5)}, zero_mean=False)
    assert moments_to_cumulants(z) == z
    assert cumulants_to_moments(z) == z


@pytest.mark.parametrize(
    "dist, expected",
    [
        ("centered-exponential", [0, 1, 2, 6]),
        ("uniform", [0, Fraction(1, 3), 0, Fraction(-2, 15)]),
        ("rademacher", [0, 1, 0, -2]),
    ],
)
def test_analytic_cumulants(dist, expected):
    assert analytic_cumulants(dist, 4) == expected


def test_analytic_cumulants_against_moments():
    # uniform(-1,1): E[X^r] = 1/(r+1) for even r; rademacher: 1 for even r
    for dist, mom in [("uniform", lambda r: Fraction(1, r + 1)), ("rademacher", lambda r: Fraction(1))]:
        kappa = analytic_cumulants(dist, 8)
        got = cumulants_to_moments(univariate_sequence(kappa[1:], zero_mean=True))
        for r in range(2, 9):
            assert got[r][(1,) * r] == (mom(r) if r % 2 == 0 else 0)


def test_bernoulli():
    assert [bernoulli_number(n) for n in range(7)] == [1, Fraction(-1, 2), Fraction(1, 6), 0, Fraction(-1, 30), 0, Fraction(1, 42)]


def test_unknown_distribution():
    with pytest.raises(DomainError):
        analytic_cumulants("cauchy", 3)


@pytest.mark.parametrize("zero_mean", [False, True])
def test_round_trip_p3_k5(rng, zero_mean):
    seq = random_sequence(rng, 3, 5, zero_mean)
    assert cumulants_to_moments(moments_to_cumulants(seq)) == seq
    assert moments_to_cumulants(cumulants_to_moments(seq)) == seq


def test_low_orders_identity_when_centered(rng):
    seq = random_sequence(rng, 3, 4, zero_mean=True)
    kappa = moments_to_cumulants(seq)
    assert kappa[2] == seq[2] and kappa[3] == seq[3]
    assert kappa[4] != seq[4]


def _relabel(seq, perm):
    tensors = {}
    for r in seq.orders():
        T = seq[r]
        tensors[r] = SymTensor.from_entries(seq.p, r, {tuple(perm[i - 1] for i in idx): v for idx, v in T.items()})
    return TensorSequence(seq.p, seq.max_order, tensors, seq.zero_mean)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations([1, 2, 3]))
def test_transforms_commute_with_relabeling(seed, perm):
    seq = random_sequence(np.random.default_rng(seed), 3, 4, zero_mean=False)
    assert moments_to_cumulants(_relabel(seq, perm)) == _relabel(moments_to_cumulants(seq), perm)
    assert cumulants_to_moments(_relabel(seq, perm)) == _relabel(cumulants_to_moments(seq), perm)


def _sum_moments(mx, mz):
    # E[prod (X_j + Z_j)] = sum over subsets S of E[X_S] E[Z_{S^c}], for independent X, Z
    def mom(seq, idx):
        if not idx:
            return Fraction(1)
        return seq[len(idx)][idx]

    tensors = {}
    for r in mx.orders():
        vals = []
        for idx in enumerate_indices(mx.p, r):
            total = Fraction(0)
            for size in range(r + 1):
                for S in itertools.combinations(range(r), size):
                    rest = [i for i in range(r) if i not in S]
                    total += mom(mx, tuple(idx[i] for i in S)) * mom(mz, tuple(idx[i] for i in rest))
            vals.append(total)
        tensors[r] = SymTensor(mx.p, r, vals)
    return TensorSequence(mx.p, mx.max_order, tensors, mx.zero_mean)


def test_cumulants_add_for_independent_sums(rng):
    mx = random_sequence(rng, 2, 5, zero_mean=True)
    mz = random_sequence(rng, 2, 5, zero_mean=True)
    lhs = moments_to_cumulants(_sum_moments(mx, mz))
    cx, cz = moments_to_cumulants(mx), moments_to_cumulants(mz)
    for r in lhs.orders():
        assert lhs[r] == cx[r] + cz[r]


def test_sequence_json_round_trip(rng):
    seq = random_sequence(rng, 2, 4, zero_mean=True)
    assert TensorSequence.from_json(seq.to_json()) == seq


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda o: o.pop("p"), "p"),
        (lambda o: o.update(zero_mean="yes"), "zero_mean"),
        (lambda o: o["tensors"][0].update(scalar="complex"), r"tensors\[0\]\.scalar"),
        (lambda o: o["tensors"][1]["entries"].append({"idx": [1], "val": "1/1"}), r"tensors\[1\]\.entries"),
    ],
)
def test_sequence_json_diagnostics(rng, mutate, field):
    obj = random_sequence(rng, 2, 3, zero_mean=True).to_json()
    mutate(obj)
    with pytest.raises(DomainError, match=field):
        TensorSequence.from_json(obj)


def test_order_one_rejected_for_zero_mean():
    with pytest.raises(DomainError):
        TensorSequence(1, 2, {1: SymTensor(1, 1, [0]), 2: SymTensor(1, 2, [1])}, zero_mean=True)
