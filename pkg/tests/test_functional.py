import numpy as np
import pytest

from curvkit import functional as fn
from curvkit import models


@pytest.fixture(scope="module")
def torus():
    return models.perturbed_torus(3)


def test_grid_layout():
    ch = models.flat_torus(2)
    g = fn.PeriodicGrid.for_chart(ch, 4)
    pts = g.points()
    assert pts.shape == (16, 2)
    assert np.allclose(pts[1] - pts[0], [0.0, g.hi[1] / 4])
    assert sum(len(c) for c in g.chunks(5)) == 16
    with pytest.raises(fn.GridError):
        fn.PeriodicGrid.for_chart(models.space_form(3), 4)


def test_integrate_trigonometric_exactly():
    ch = models.flat_torus(3)
    g = fn.PeriodicGrid.for_chart(ch, 6)
    vol = g.coordinate_volume
    assert np.isclose(fn.volume(g, ch), vol)
    assert abs(fn.integrate(lambda x, j: np.cos(x[:, 0]), g, ch)) < 1e-12
    assert np.isclose(fn.integrate(lambda x, j: np.cos(x[:, 0] + x[:, 2]) ** 2, g, ch), vol / 2)


def test_flat_functional_vanishes():
    ch = models.flat_torus(3)
    assert fn.hel_functional(fn.PeriodicGrid.for_chart(ch, 4), ch, 1) == 0.0
    with pytest.raises(ValueError):
        fn.hel_functional(fn.PeriodicGrid.for_chart(ch, 4), ch, 2)


def test_functional_converges_under_refinement(torus):
    vals = [fn.hel_functional(fn.PeriodicGrid.for_chart(torus, r), torus, 1) for r in (6, 8, 10)]
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    assert abs(vals[2] - vals[1]) < 1e-3 * fn.PeriodicGrid.for_chart(torus, 4).coordinate_volume


def test_thread_count_does_not_change_result(torus, monkeypatch):
    g = fn.PeriodicGrid.for_chart(torus, 5)
    monkeypatch.setenv("CURVKIT_THREADS", "1")
    a = fn.hel_functional(g, torus, 1)
    monkeypatch.setenv("CURVKIT_THREADS", "3")
    assert fn.worker_count() == 3
    assert fn.hel_functional(g, torus, 1) == a
    monkeypatch.setenv("CURVKIT_THREADS", "many")
    assert fn.worker_count() == 1


def test_volume_derivative(torus):
    g = fn.PeriodicGrid.for_chart(torus, 6)
    h = models.overlap_field(3)
    assert fn.volume_derivative_check(g, torus, h).passed


def test_gradient_identity_k1(torus):
    g = fn.PeriodicGrid.for_chart(torus, 8)
    rep = fn.gradient_identity_check(g, torus, 1, models.overlap_field(3))
    assert rep.passed, rep.line()


def test_gradient_identity_on_flat_torus():
    ch = models.flat_torus(3)
    g = fn.PeriodicGrid.for_chart(ch, 4)
    rep = fn.gradient_identity_check(g, ch, 1, models.random_sym_trig_field(3, 1, 0.3))
    assert rep.passed


@pytest.mark.parametrize("name", ["sphere", "perturbed-torus", "conformal"])
def test_lovelock_divergence_free(name):
    ch = models.build(name, 5)
    rep = fn.divergence_free_check(models.sample_points(ch, 3, 0), ch, 2)
    assert rep.residual < 1e-9


def test_ricci2k_divergence_identity():
    ch = models.perturbed_torus(5)
    res, scale = fn.ricci2k_divergence_identity(ch, models.sample_points(ch, 3, 0), 2)
    assert scale > 1e-3
    assert np.max(np.abs(res)) < 1e-9 * max(1.0, scale)


def test_pairing_is_half_full_contraction(torus):
    g = fn.PeriodicGrid.for_chart(torus, 4)
    h = models.metric_as_field(torus)
    # <J, g> = tr J = (1 - n/2) kappa for k = 1
    full = fn.integrate(lambda x, j: -0.5 * torus_kappa(torus, x), g, torus)
    assert np.isclose(fn.pairing(g, torus, 1, h), 0.5 * full)


def torus_kappa(ch, x):
    from curvkit.chart import riemann

    return riemann(ch, x).kappa
