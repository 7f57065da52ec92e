import numpy as np
import pytest

from curvkit import models
from curvkit.chart import (
    DomainError,
    JetOrderError,
    SymTensorCalculus,
    SymTensorField,
    bianchi_operator,
    bochner_laplacian,
    christoffel,
    compose,
    complex_step_gradient,
    delta_star,
    divergence,
    first_bianchi,
    lichnerowicz_laplacian,
    metric_compatibility,
    one_form_divergence,
    pair_symmetry,
    rcc_action,
    ricci_scalar,
    riemann,
    s_operators,
    scalar_laplacian,
)
from curvkit.dform import NotPositiveDefiniteError


@pytest.fixture(scope="module")
def sphere():
    ch = models.space_form(5, 1.0)
    return ch, models.sample_points(ch, 4, 3)


def test_flat_chart_has_zero_curvature():
    ch = models.flat_torus(4)
    b = riemann(ch, models.sample_points(ch, 3, 0))
    assert np.max(np.abs(b.Rm)) == 0.0
    G, dG = christoffel(ch, models.sample_points(ch, 2, 0))
    assert np.max(np.abs(G)) == 0.0


@pytest.mark.parametrize("n,mu", [(3, 1.0), (5, 1.0), (5, -1.0), (7, 0.5)])
def test_space_form_curvature(n, mu):
    ch = models.space_form(n, mu)
    b = riemann(ch, models.sample_points(ch, 5, 1))
    assert np.allclose(b.R.coeffs, (b.metric.power(2) * (mu / 2)).coeffs, atol=1e-12)
    Ric, kappa = ricci_scalar(b)
    assert np.allclose(kappa, n * (n - 1) * mu)
    assert np.allclose(Ric.coeffs, (n - 1) * mu * b.g)


@pytest.mark.parametrize("name", ["perturbed-torus", "conformal", "lovelock"])
def test_curvature_symmetries(name):
    ch = models.build(name, 5)
    x = models.radial_points(ch, 4) if name == "lovelock" else models.sample_points(ch, 4, 2)
    b = riemann(ch, x)
    assert first_bianchi(b) < 1e-12
    assert pair_symmetry(b) < 1e-12
    assert metric_compatibility(ch, x) < 1e-12


def test_fd_jets_agree_with_analytic():
    ch = models.perturbed_torus(5)
    chf = models.perturbed_torus(5, jets="fd")
    x = models.sample_points(ch, 3, 4)
    a = ch.jets(x, 3)
    f = chf.jets(x, 3)
    for k, tol in zip(range(4), (0.0, 1e-9, 1e-8, 1e-4)):
        assert np.max(np.abs(a[k] - f[k])) <= tol + 1e-15
    ba, bf = riemann(ch, x), riemann(chf, x)
    assert np.max(np.abs(ba.Rm - bf.Rm)) < 1e-7


def test_domain_and_order_errors(sphere):
    ch, _ = sphere
    with pytest.raises(DomainError):
        riemann(ch, np.full((1, 5), 5.0))
    f = models.gradient_one_form(models.trig_scalar(5, 1))
    with pytest.raises(JetOrderError):
        f.jets(np.zeros((1, 5)), 3)


def test_perturbation_leaving_cone_raises(sphere):
    ch, x = sphere
    h = models.metric_as_field(ch)
    with pytest.raises(NotPositiveDefiniteError):
        ch.perturbed(h, -2.0).jets(x, 0)


def test_ricci_identity(sphere):
    ch, x = sphere
    b = riemann(ch, x)
    h = models.random_sym_trig_field(5, 3, 0.4)
    c = SymTensorCalculus(b, h.jets(x, 2))
    H = c.hessian
    comm = H - np.swapaxes(H, -3, -4)
    Rup = np.einsum("...ae,...ebcd->...abcd", b.g_inv, b.Rm)  # R^a_bcd
    rhs = -np.einsum("...ejli,...ek->...lijk", Rup, c.h) - np.einsum("...ekli,...je->...lijk", Rup, c.h)
    assert np.allclose(comm, rhs, atol=1e-12)


def test_rcc_on_space_form(sphere):
    ch, x = sphere
    b = riemann(ch, x)
    h = models.random_sym_trig_field(5, 4).values(x)
    tr = np.einsum("...ij,...ij->...", b.g_inv, h)
    assert np.allclose(rcc_action(b, h), tr[:, None, None] * b.g - h, atol=1e-12)
    assert np.allclose(compose(h, b.g, b.g_inv), h)


def test_killing_form_and_tt_field(sphere):
    ch, x = sphere
    w = models.killing_one_form(ch, 0, 2)
    assert np.max(np.abs(delta_star(w, ch, x))) < 1e-12
    assert np.max(np.abs(one_form_divergence(w, ch, x))) < 1e-12
    h = models.transverse_traceless_field(ch, 5)
    b = riemann(ch, x)
    hv = h.values(x)
    assert np.max(np.abs(np.einsum("...ij,...ij->...", b.g_inv, hv))) < 1e-12
    assert np.max(np.abs(divergence(h, ch, x))) < 1e-12


def test_divergence_of_conformal_tensor(sphere):
    ch, x = sphere
    f = models.trig_scalar(5, 9)
    fg = models.scalar_times_metric(f, ch)
    df = f.jets(x, 1)[1]
    assert np.allclose(divergence(fg, ch, x), -df, atol=1e-12)
    assert np.max(np.abs(bianchi_operator(models.metric_as_field(ch), ch, x))) < 1e-12


def test_laplacians_on_metric_multiple(sphere):
    ch, x = sphere
    f = models.trig_scalar(5, 2)
    fg = models.scalar_times_metric(f, ch)
    lap = scalar_laplacian(f, ch, x)
    b = riemann(ch, x)
    assert np.allclose(bochner_laplacian(fg, ch, x), lap[:, None, None] * b.g, atol=1e-11)
    # on an Einstein metric the Lichnerowicz Laplacian of f g is (Delta f) g
    assert np.allclose(lichnerowicz_laplacian(fg, ch, x), lap[:, None, None] * b.g, atol=1e-11)


def test_weitzenboeck_general_h(sphere):
    ch, x = sphere
    h = models.random_sym_trig_field(5, 11, 0.5)
    b = riemann(ch, x)
    s2, s1, _ = s_operators(h, ch, x, b)
    c = SymTensorCalculus(b, h.jets(x, 2))
    rhs = c.bochner + 2 * c.rcc() - 2 * compose(c.h, b.ric, b.g_inv)
    assert np.allclose(s2 - s1, rhs, atol=1e-12)


def test_complex_step_gradient_of_metric_determinant():
    ch = models.perturbed_torus(4)
    x = models.sample_points(ch, 3, 1)
    j = ch.jets(x, 3)
    d = complex_step_gradient(lambda g, dg, d2g: np.linalg.det(g), j)
    fd = np.stack([(np.linalg.det(ch.values(x + e * 1e-6)) - np.linalg.det(ch.values(x - e * 1e-6))) / 2e-6
                   for e in np.eye(4)], axis=-1)
    assert np.allclose(d, fd, atol=1e-8)


def test_symmetric_field_check():
    bad = SymTensorField(2, lambda X: [[1.0, X[0]], [0.0, 1.0]])
    with pytest.raises(ValueError):
        bad.jets(np.full((1, 2), 0.5), 1)
