import numpy as np
import pytest

from curvkit import models
from curvkit.chart import riemann
from curvkit.invariants import gauss_bonnet_2k


def test_catalog_and_unknown_name():
    for name in models.CATALOG:
        ch = models.build(name, 5)
        assert ch.n == 5
    with pytest.raises(models.ModelError):
        models.build("klein-bottle", 5)


def test_space_form_style_mismatch():
    with pytest.raises(models.ModelError):
        models.space_form(5, 1.0, "poincare_ball")
    assert models.space_form(4, 0.0).name == "flat4"


def test_seeded_constructions_are_reproducible():
    a = models.random_sym_trig_field(5, 3).values(np.full((1, 5), 0.2))
    b = models.random_sym_trig_field(5, 3).values(np.full((1, 5), 0.2))
    assert np.array_equal(a, b)
    assert np.array_equal(models.sample_points(models.space_form(5), 4, 1),
                          models.sample_points(models.space_form(5), 4, 1))


def test_sample_points_inside_domain():
    for name in ("sphere", "hyperbolic", "perturbed-torus"):
        ch = models.build(name, 5)
        x = models.sample_points(ch, 20, 2)
        ch.check_points(x)


def test_lovelock_horizon_and_eps_checks():
    with pytest.raises(models.ModelError):
        models.lovelock_slice(5, 2, 1, 10.0)
    with pytest.raises(models.ModelError):
        models.lovelock_slice(5, 2, 2, 0.1)


def test_lovelock_flat_cone_baseline():
    ch = models.lovelock_slice(5, 2, 0, 0.0)
    b = riemann(ch, models.radial_points(ch, 5))
    assert np.max(np.abs(b.Rm)) < 1e-12
    assert np.max(np.abs(gauss_bonnet_2k(b.R, b.metric, 2))) < 1e-12


@pytest.mark.parametrize("n,k,eps", [(5, 2, 1), (5, 2, -1), (7, 3, 1), (7, 3, -1)])
def test_lovelock_pure_profile_constant(n, k, eps):
    vals = []
    for m in (0.0, 0.05, 0.1):
        ch = models.lovelock_slice(n, k, eps, m, profile="pure")
        b = riemann(ch, models.radial_points(ch, 7))
        S = gauss_bonnet_2k(b.R, b.metric, k)
        assert np.ptp(S) / abs(np.mean(S)) < 1e-10
        vals.append(np.mean(S))
    assert np.ptp(vals) / abs(np.mean(vals)) < 1e-10


def test_lovelock_standard_profile_massless_is_space_form_like():
    ch = models.lovelock_slice(5, 2, 1, 0.0)
    b = riemann(ch, models.radial_points(ch, 5))
    S = gauss_bonnet_2k(b.R, b.metric, 2)
    assert np.allclose(S, 30.0)


def test_ellipsoid_sphere_case():
    shapes = models.ellipsoid_shape(4, np.full(5, 2.0), count=3, seed=1)
    for A in shapes:
        assert np.allclose(A, 0.5 * np.eye(4))
    with pytest.raises(models.ModelError):
        models.ellipsoid_shape(4, np.ones(4))


def test_product_with_torus_curvature():
    ch = models.product_with_torus(models.space_form(2, 1.0), 3)
    b = riemann(ch, models.sample_points(ch, 3, 0))
    assert np.allclose(b.kappa, 2.0)


def test_amplitude_guard():
    with pytest.raises(models.ModelError):
        models.perturbed_torus(5, amplitude=1.5)
