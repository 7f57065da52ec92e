from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvkit.combinat import DegreeError, enumerate_multi_indices
from curvkit.dform import (
    BidegreeError,
    DoubleForm,
    MetricAtPoint,
    NotPositiveDefiniteError,
    commutation_check,
    contract,
    contract_mixed,
    df_product,
    from_matrix,
    hodge_star,
    inner_product,
    lower_second,
    metric_multiply,
    random_form,
    random_metric,
    raise_second,
    scalar,
)
from oracles import wedge_full

seeds = st.integers(0, 2**32 - 1)


def rng_of(seed):
    return np.random.Generator(np.random.Philox(seed))


def test_g_squared_normalization():
    m = MetricAtPoint.euclidean(4)
    g2 = metric_multiply(m.form(), m)
    assert g2.value((0, 1), (0, 1)) == pytest.approx(2.0)
    half = g2 / 2
    assert half.value((0, 1), (0, 1)) == pytest.approx(1.0)
    assert half.value((0, 1), (0, 2)) == pytest.approx(0.0)


def test_metric_inner_products():
    rng = rng_of(1)
    m = random_metric(rng, 5)
    assert inner_product(m.form(), m.form(), m) == pytest.approx(5.0)
    h = rng.standard_normal((5, 5))
    h = h + h.T
    assert inner_product(from_matrix(h), m.form(), m) == pytest.approx(np.trace(m.g_inv @ h))


def test_contract_g_squared():
    m = random_metric(rng_of(2), 5)
    g2 = m.power(2) / 2
    assert np.allclose(contract(g2, m).coeffs, 4 * m.g)


def test_kulkarni_special_case_n4():
    rng = rng_of(3)
    m = random_metric(rng, 4)
    w = random_form(rng, 4, 2, 2)
    lhs = contract(metric_multiply(w, m), m) - metric_multiply(contract(w, m), m)
    assert np.allclose(lhs.coeffs, 0.0, atol=1e-10)


@given(seeds, st.integers(2, 6))
def test_kulkarni_all_bidegrees(seed, n):
    rng = rng_of(seed)
    m = random_metric(rng, n)
    for r in range(1, n):
        for s in range(1, n):
            w = random_form(rng, n, r, s)
            lhs = contract(metric_multiply(w, m), m)
            rhs = metric_multiply(contract(w, m), m) + w * float(n - r - s)
            assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) < 1e-10 * max(1.0, np.max(np.abs(lhs.coeffs)))


@given(seeds, st.integers(2, 6))
def test_contraction_adjoint_to_multiplication(seed, n):
    rng = rng_of(seed)
    m = random_metric(rng, n)
    for r in range(0, n):
        for s in range(0, n):
            w = random_form(rng, n, r, s)
            th = random_form(rng, n, r + 1, s + 1)
            a = inner_product(metric_multiply(w, m), th, m)
            b = inner_product(w, contract(th, m), m)
            assert a == pytest.approx(b, rel=1e-10, abs=1e-10)


@given(seeds, st.integers(3, 6), st.integers(1, 3), st.integers(1, 3))
def test_commutation_rule(seed, n, l, mp):
    rng = rng_of(seed)
    m = random_metric(rng, n)
    for r in range(0, n - mp + 1):
        for s in range(0, n - mp + 1):
            if r + mp < l or s + mp < l:
                continue
            rep = commutation_check(random_form(rng, n, r, s), l, mp, m)
            assert rep.passed, rep.line()


def test_product_matches_full_antisymmetrization():
    rng = rng_of(4)
    n = 4
    a = random_form(rng, n, 1, 1)
    b = random_form(rng, n, 1, 1)
    p = df_product(a, b)
    # full tensor route: for (1,1) x (1,1) the (2,2) product is a(x,u)b(y,v) antisymmetrized in each factor
    A, B = a.coeffs, b.coeffs
    T = np.einsum("xu,yv->xyuv", A, B)
    full = T - np.swapaxes(T, 0, 1)
    full = full - np.swapaxes(full, 2, 3)
    for i, I in enumerate(enumerate_multi_indices(n, 2)):
        for j, J in enumerate(enumerate_multi_indices(n, 2)):
            assert p.coeffs[i, j] == pytest.approx(full[I[0], I[1], J[0], J[1]])


def test_one_form_wedge_oracle():
    rng = rng_of(5)
    a, b = rng.standard_normal((2, 4))
    w = wedge_full(a, b)
    assert np.allclose(w, np.outer(a, b) - np.outer(b, a))


@given(seeds)
def test_product_commutes_up_to_sign(seed):
    rng = rng_of(seed)
    n = 5
    a = random_form(rng, n, 1, 2)
    b = random_form(rng, n, 2, 1)
    ab = df_product(a, b).coeffs
    ba = df_product(b, a).coeffs
    sign = (-1) ** (1 * 2 + 2 * 1)
    assert np.allclose(ab, sign * ba)


@given(seeds)
def test_product_associative(seed):
    rng = rng_of(seed)
    n = 5
    a, b, c = (random_form(rng, n, 1, 1) for _ in range(3))
    lhs = df_product(df_product(a, b), c).coeffs
    rhs = df_product(a, df_product(b, c)).coeffs
    assert np.allclose(lhs, rhs)


@given(seeds, st.integers(2, 6))
def test_hodge_star_involution(seed, n):
    rng = rng_of(seed)
    m = random_metric(rng, n)
    for r in range(n + 1):
        for s in range(n + 1):
            w = random_form(rng, n, r, s)
            back = hodge_star(hodge_star(w, m), m)
            sign = (-1) ** (r * (n - r) + s * (n - s))
            assert np.allclose(back.coeffs, sign * w.coeffs, atol=1e-9)


def test_hodge_star_of_unit_and_metric_power():
    m = random_metric(rng_of(6), 4)
    one = scalar(4, 1.0)
    star = hodge_star(one, m)
    assert star.coeffs[0, 0] == pytest.approx(np.linalg.det(m.g))
    gn = m.power(4) / factorial(4)
    assert np.allclose(hodge_star(gn, m).coeffs, 1.0)


@given(seeds)
def test_mixed_contraction_agrees(seed):
    rng = rng_of(seed)
    m = random_metric(rng, 5)
    w = random_form(rng, 5, 3, 3)
    for t in (1, 2, 3):
        direct = contract(w, m, t).coeffs
        mixed = lower_second(contract_mixed(raise_second(w, m), t), m).coeffs
        assert np.allclose(direct, mixed, atol=1e-10)


def test_bidegree_errors():
    m = MetricAtPoint.euclidean(3)
    with pytest.raises(DegreeError):
        df_product(m.power(2), m.power(2))
    with pytest.raises(BidegreeError):
        inner_product(m.form(), m.power(2), m)
    with pytest.raises(ValueError):
        DoubleForm(3, 1, 1, np.zeros((3, 2)))
    with pytest.raises(DegreeError):
        contract(scalar(3), m)


def test_metric_validation():
    with pytest.raises(NotPositiveDefiniteError):
        MetricAtPoint(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefiniteError):
        MetricAtPoint(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_batched_forms():
    rng = rng_of(7)
    g = np.stack([random_metric(rng, 4).g for _ in range(3)])
    m = MetricAtPoint(g)
    w = random_form(rng, 4, 2, 2, batch=(3,))
    c = contract(w, m)
    for i in range(3):
        mi = MetricAtPoint(g[i])
        assert np.allclose(c.coeffs[i], contract(DoubleForm(4, 2, 2, w.coeffs[i]), mi).coeffs)
    assert c.coeffs.shape == (3, comb(4, 1), comb(4, 1))
