from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvkit.combinat import (
    ArityError,
    DegreeError,
    MultiIndex,
    compound_matrix,
    enumerate_multi_indices,
    generalized_kronecker,
    rank,
    sort_sign,
    unrank,
)
from oracles import brute_det_delta


def test_enumeration_order_and_count():
    idx = enumerate_multi_indices(4, 2)
    assert idx == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert len(enumerate_multi_indices(7, 3)) == comb(7, 3)
    assert enumerate_multi_indices(5, 0) == [()]


def test_enumeration_rejects_bad_degree():
    with pytest.raises(DegreeError):
        enumerate_multi_indices(3, 4)


@given(st.integers(1, 7).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n))))
def test_rank_unrank_roundtrip(nr):
    n, r = nr
    for i, m in enumerate(enumerate_multi_indices(n, r)):
        assert rank(m, n) == i
        assert unrank(i, n, r) == m


def test_multi_index_must_increase():
    with pytest.raises(ValueError):
        MultiIndex((2, 1))


def test_sort_sign_examples():
    assert sort_sign((1, 0)) == ((0, 1), -1)
    assert sort_sign((2, 0, 1)) == ((0, 1, 2), 1)
    assert sort_sign((1, 1)) == (None, 0)


@given(st.permutations(list(range(6))))
def test_sort_sign_matches_permutation_parity(perm):
    M = np.eye(6)[list(perm)]
    assert sort_sign(perm)[1] == round(np.linalg.det(M))


@given(st.lists(st.integers(0, 5), min_size=1, max_size=5),
       st.lists(st.integers(0, 5), min_size=1, max_size=5))
def test_kronecker_against_determinant(up, lo):
    if len(up) != len(lo):
        with pytest.raises(ArityError):
            generalized_kronecker(up, lo)
        return
    assert generalized_kronecker(up, lo) == brute_det_delta(up, lo)


def test_kronecker_examples():
    assert generalized_kronecker((0, 1), (1, 0)) == -1
    assert generalized_kronecker((0, 1, 2), (0, 1, 2)) == 1
    assert generalized_kronecker((0, 0), (0, 1)) == 0


@given(st.integers(0, 2**32 - 1))
def test_compound_is_multiplicative(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, 5, 5))
    for r in range(0, 6):
        lhs = compound_matrix(a @ b, r)
        rhs = compound_matrix(a, r) @ compound_matrix(b, r)
        assert np.allclose(lhs, rhs, atol=1e-9)
