from fractions import Fraction
from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvkit import invariants as inv
from curvkit import models
from curvkit.chart import riemann
from curvkit.dform import MetricAtPoint, contract, from_matrix
from oracles import brute_gauss_bonnet, frame_curvature

# frozen reference values, recomputed by tests/oracles.py brute-force contraction
S4_UNIT_S5 = 30.0
LAMBDA_UNIT_S5 = 144.0


@pytest.fixture(scope="module")
def s5():
    ch = models.space_form(5, 1.0)
    return riemann(ch, models.sample_points(ch, 3, 0))


def test_structure_constants_exact():
    sc = inv.structure_constants(5, 2)
    assert sc.C_nk == 12 and sc.D_nk == 6 and sc.Dp_nk == 24
    assert sc.alpha_lower == Fraction(1, 10) and sc.alpha_upper == Fraction(1, 4)
    assert sc.alpha_nk == -1
    assert inv.structure_constants(4, 2).alpha_nk is None
    with pytest.raises(ValueError):
        inv.structure_constants(5, 3)
    assert set(sc.as_floats()) >= {"C_nk", "alpha_nk"}


@pytest.mark.parametrize("n,k", [(5, 2), (7, 2), (7, 3), (9, 4)])
def test_alpha_matches_closed_expression(n, k):
    a = inv.alpha_restricted(n, k)
    assert a == -Fraction((k - 1) * (k * n - 5 * k + n), n * (n - 2 * k))


def test_brute_force_oracle_on_sphere(s5):
    Rf = frame_curvature(s5)
    assert np.isclose(brute_gauss_bonnet(Rf, 1), 10.0)
    assert np.isclose(brute_gauss_bonnet(Rf, 2), S4_UNIT_S5)
    assert np.allclose(inv.gauss_bonnet_2k(s5.R, s5.metric, 2), S4_UNIT_S5, rtol=1e-10)


@pytest.mark.parametrize("name", ["perturbed-torus", "conformal"])
@pytest.mark.parametrize("k", [1, 2])
def test_pipeline_matches_brute_force_on_generic_metrics(name, k):
    ch = models.build(name, 5)
    b = riemann(ch, models.sample_points(ch, 2, 6))
    for i in range(2):
        expect = brute_gauss_bonnet(frame_curvature(b, i), k)
        assert np.isclose(inv.gauss_bonnet_2k(b.R, b.metric, k)[i], expect, rtol=1e-10, atol=1e-12)


def test_k1_is_classical(s5):
    ch = models.perturbed_torus(5)
    b = riemann(ch, models.sample_points(ch, 3, 2))
    assert np.allclose(inv.gauss_bonnet_2k(b.R, b.metric, 1), b.kappa / 2)
    assert np.allclose(inv.ricci_2k(b.R, b.metric, 1).coeffs, b.ric)
    J = inv.lovelock_tensor(b.R, b.metric, 1).coeffs
    assert np.allclose(J, b.ric - (b.kappa / 2)[:, None, None] * b.g)


def test_two_routes_and_trace(s5):
    ch = models.conformally_flat(5, seed=4)
    b = riemann(ch, models.sample_points(ch, 3, 1))
    for k in (1, 2):
        a = inv.ricci_2k(b.R, b.metric, k).coeffs
        d = inv.ricci_2k_direct(b.R, b.metric, k).coeffs
        assert np.allclose(a, d, atol=1e-12)
        assert inv.invariant_set(b, k).residuals["trace_identity"] < 1e-12


@pytest.mark.parametrize("n,k,mu", [(5, 2, 1.0), (7, 2, 1.0), (7, 3, 1.0), (5, 2, -1.0), (7, 2, -1.0), (7, 3, -1.0)])
def test_space_form_formulas(n, k, mu):
    ch = models.space_form(n, mu)
    b = riemann(ch, models.sample_points(ch, 3, 0))
    mu_k, res = inv.thorpe_check(b.R, b.metric, k)
    assert np.max(res) < 1e-10
    assert np.allclose(mu_k, inv.mu_k_space_form(mu, k))
    iv = inv.invariant_set(b, k)
    assert np.allclose(iv.R2k.coeffs, inv.ricci_2k_formula(b, k, mu_k), rtol=1e-10)
    assert np.allclose(iv.S2k, inv.gauss_bonnet_formula(b, k, mu_k), rtol=1e-10)
    assert np.allclose(iv.lambda_est, inv.lambda_formula(n, k, mu_k, b.kappa), rtol=1e-10)
    # constant-curvature closed form: S = n!/(2^k (n-2k)!) mu^k
    assert np.allclose(iv.S2k, factorial(n) / (factorial(n - 2 * k) * 2**k) * mu**k, rtol=1e-10)


def test_sphere_lambda(s5):
    iv = inv.invariant_set(s5, 2)
    ein, two_k, lam = inv.einstein_residuals(iv, s5)
    assert np.allclose(lam, LAMBDA_UNIT_S5)
    assert np.max(ein) < 1e-10 and np.max(two_k) < 1e-10


def test_thorpe_fails_off_class():
    ch = models.perturbed_torus(5, amplitude=0.2)
    b = riemann(ch, models.sample_points(ch, 3, 0))
    _, res = inv.thorpe_check(b.R, b.metric, 2)
    assert np.min(res) > 1e-3
    with pytest.raises(ValueError):
        inv.thorpe_check(b.R, b.metric, 1)


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_sigma_k_matches_eigenvalues(seed, k):
    rng = models.make_rng(seed)
    n = 6
    a = rng.normal(size=(n, n))
    A = a + a.T
    m = MetricAtPoint(np.eye(n))
    ev = np.linalg.eigvalsh(A)
    expect = sum(np.prod(c) for c in __import__("itertools").combinations(ev, k))
    assert np.isclose(inv.sigma_k(A, m, k), expect, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("n,k", [(5, 2), (7, 2), (7, 3)])
def test_sigma_identity_conformally_flat(n, k):
    for seed in range(2):
        ch = models.conformally_flat(n, seed=seed)
        b = riemann(ch, models.sample_points(ch, 2, seed))
        W = inv.schouten_weyl(b).W
        assert np.max(np.abs(W.coeffs)) < 1e-10
        rep = inv.gb_sigma_identity(b, k, conformally_flat=True)
        assert rep.passed, rep.line()


def test_sigma_identity_with_weyl_terms():
    ch = models.perturbed_torus(5)
    b = riemann(ch, models.sample_points(ch, 3, 0))
    rep = inv.gb_sigma_identity(b, 2, conformally_flat=False, tolerance=1e-10)
    assert not rep.asserted
    assert rep.residual < 1e-10
    short, _ = inv.gb_sigma_rhs(b, 2, weyl_terms=False)
    assert np.max(np.abs(short - inv.gauss_bonnet_2k(b.R, b.metric, 2))) > 1e-6


def test_newton_p2_is_minus_einstein():
    n = 6
    shapes = models.random_shape_operators(n, 10, 3)
    for A in shapes:
        m = MetricAtPoint(np.eye(n))
        R = inv.shape_to_curvature(A, m)
        ric = contract(R, m).coeffs
        kap = np.trace(ric)
        E = ric - kap / 2 * np.eye(n)
        P2 = inv.lower(inv.newton_tensor(A, m, 2), m)
        assert np.allclose(P2, -E, atol=1e-10)


def test_newton_trace_identity():
    A = models.random_shape_operators(5, 1, 0)[0]
    m = MetricAtPoint(np.eye(5))
    for r in range(5):
        assert np.isclose(np.trace(inv.newton_tensor(A, m, r)), (5 - r) * inv.sigma_k(A, m, r))


@pytest.mark.parametrize("n,k", [(5, 2), (7, 2), (7, 3)])
def test_hypersurface_lovelock_proportional_to_newton(n, k):
    shapes = models.ellipsoid_shape(n, np.linspace(1.0, 2.0, n + 1), count=5, seed=1)
    assert inv.hypersurface_lovelock_check(shapes, k).passed


def test_kronecker_calibration_value():
    assert np.isclose(inv.calibrate_d_nk(5, 2), -1 / 16)


@pytest.mark.parametrize("name", ["perturbed-torus", "conformal", "hyperbolic"])
def test_kronecker_route_proportional(name):
    ch = models.build(name, 5)
    b = riemann(ch, models.sample_points(ch, 3, 2))
    L, d = inv.lovelock_kronecker(b.Rm, b.metric, 2)
    assert np.allclose(L, inv.lovelock_tensor(b.R, b.metric, 2).coeffs, atol=1e-10)


def test_kronecker_needs_room():
    ch = models.space_form(4)
    b = riemann(ch, models.sample_points(ch, 1, 0))
    with pytest.raises(ValueError):
        inv.lovelock_kronecker_raw(b.Rm, b.metric, 2)


def test_kronecker_mismatch_raises(monkeypatch):
    ch = models.perturbed_torus(5)
    b = riemann(ch, models.sample_points(ch, 1, 0))
    monkeypatch.setitem(inv._D_NK, (5, 2), 1.0)
    with pytest.raises(inv.ConventionError):
        inv.lovelock_kronecker(b.Rm, b.metric, 2)


def test_tracefree_basis_orthonormal():
    B = inv.tracefree_basis(5)
    assert len(B) == comb(6, 2) - 1
    G = np.einsum("pab,qab->pq", B, B)
    assert np.allclose(G, np.eye(len(B)))
    assert np.allclose(np.einsum("paa->p", B), 0)


@pytest.mark.parametrize("mu,a,lo,hi", [(1.0, -1.0, 2.0, 5.0), (-1.0, 1.0, -2.0, -5.0)])
def test_rigidity_certificate_space_forms(mu, a, lo, hi):
    ch = models.space_form(5, mu)
    b = riemann(ch, models.sample_points(ch, 3, 0))
    cert = inv.rigidity_certificate(b, 2)
    assert cert.satisfied
    assert np.allclose(cert.a_min, a) and np.allclose(cert.a_max, a)
    assert np.allclose(cert.lower_bound, lo) and np.allclose(cert.upper_bound, hi)
    with pytest.raises(ValueError):
        inv.rigidity_certificate(b, 3)
