import numpy as np
from hypothesis import given, strategies as st

from curvkit import jets as J
from curvkit.chart import fd_derivatives

pts = st.lists(st.floats(-0.8, 0.8), min_size=3, max_size=3)


def expr(X):
    x, y, z = X
    return J.exp(x * y) * J.sin(z + 0.3) + J.power(1.5 + x * x, -1.5) / (2.0 + J.cos(y * z)) + J.sqrt(2.0 + y)


def _jets(x, order=3):
    X = J.Jet.coordinates(np.asarray(x, float), order)
    return expr(X)


@given(pts)
def test_jet_value_matches_plain_evaluation(x):
    v = _jets(x).val
    assert np.isclose(v, expr([np.float64(c) for c in x]))


@given(pts)
def test_jets_match_finite_differences(x):
    x = np.asarray(x)
    j = _jets(x)
    fd = fd_derivatives(lambda p: expr([p[..., i] for i in range(3)]), x, 3, 1e-2)
    assert np.allclose(j.d1, fd[1], atol=1e-7)
    assert np.allclose(j.d2, fd[2], atol=1e-6)
    assert np.allclose(j.d3, fd[3], atol=1e-4)


@given(pts)
def test_third_derivative_symmetric(x):
    d3 = _jets(x).d3
    for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        assert np.allclose(d3, np.transpose(d3, perm))


def test_product_and_quotient_rules():
    X = J.Jet.coordinates(np.array([0.4, -0.2]), 2)
    f = X[0] * X[0] * X[1]
    assert np.allclose(f.d1, [2 * 0.4 * -0.2, 0.16])
    assert np.allclose(f.d2, [[2 * -0.2, 0.8], [0.8, 0.0]])
    q = 1.0 / (1.0 + X[0])
    assert np.isclose(q.d2[0, 0], 2 / 1.4**3)


def test_order_truncation_and_constants():
    X = J.Jet.coordinates(np.array([0.1, 0.2]), 1)
    f = 3.0 * X[0] + np.float64(2.0) * X[1] - 1.0
    assert f.order == 1 and f.d2 is None
    assert np.allclose(f.d1, [3.0, 2.0])
    c = J.Jet.constant(2.0, 2, 2)
    assert np.allclose((c * X[0]).d1, [2.0, 0.0])
