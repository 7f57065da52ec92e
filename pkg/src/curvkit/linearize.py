"""Linearizations of curvature quantities in the metric direction h.

Closed forms are built from the covariant calculus of :mod:`curvkit.chart`:
the second-derivative operator D^2, the eigenvalue operator F_h and the
derivative of the contraction map. Each one can be checked against the
central-difference oracle :func:`fd_linearize`, which differentiates the
full curvature pipeline along g + t h.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np

from .chart import (
    CurvatureBundle,
    MetricChart,
    SymTensorCalculus,
    SymTensorField,
    ScalarField,
    compose,
    rcc_action,
    riemann,
    rm_to_form,
    scalar_laplacian,
)
from .combinat import compound_matrix
from .dform import DoubleForm, MetricAtPoint, contract, df_product, from_matrix
from .invariants import (
    constant_C,
    constant_D,
    einstein_residuals,
    gauss_bonnet_2k,
    invariant_set,
    lovelock_tensor,
    ricci_2k,
    thorpe_check,
)
from .report import relative_residual

H_CLASS_TOL = 1e-6
IG_TOL = 1e-8


class HClassError(ValueError):
    """The point fails the Thorpe or 2k-Einstein condition a formula needs."""


class IgMembershipError(ValueError):
    """The field is not trace-free and divergence-free at the point."""


class StepRejected(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# F_h


def h_eigenframe(h, m: MetricAtPoint):
    """Eigenvalues of h relative to g and a g-orthonormal frame diagonalizing h.

    Eigenvalues ascend; each eigenvector is signed so its first nonzero
    component is positive.
    """
    h = np.asarray(h)
    if np.max(np.abs(h - np.swapaxes(h, -1, -2)), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(h))):
        raise np.linalg.LinAlgError("h is not symmetric")
    L = np.linalg.cholesky(m.g)
    Linv = np.linalg.inv(L)
    M = Linv @ h @ np.swapaxes(Linv, -1, -2)
    lam, U = np.linalg.eigh(0.5 * (M + np.swapaxes(M, -1, -2)))
    V = np.swapaxes(Linv, -1, -2) @ U
    tol = 1e-12 * np.max(np.abs(V), axis=-2, keepdims=True)
    nz = np.abs(V) > tol
    first = np.argmax(nz, axis=-2)[..., None, :]
    s = np.sign(np.take_along_axis(V, first, axis=-2))
    s = np.where(s == 0, 1.0, s)
    return lam, V * s


def _index_sums(lam, n, r):
    from .combinat import _enumerate

    if r == 0:
        return np.zeros(lam.shape[:-1] + (1,))
    idx = np.array(_enumerate(n, r), dtype=np.intp).reshape(-1, r)
    return lam[..., idx].sum(axis=-1)


def fh_operator(h, omega: DoubleForm, m: MetricAtPoint) -> DoubleForm:
    """F_h omega: scale each frame coefficient by the h-eigenvalue sum over both index sets."""
    n, r, s = omega.n, omega.r, omega.s
    lam, V = h_eigenframe(h, m)
    W = np.linalg.inv(V)
    Cr, Cs = compound_matrix(V, r), compound_matrix(V, s)
    Wr, Ws = compound_matrix(W, r), compound_matrix(W, s)
    framed = np.swapaxes(Cr, -1, -2) @ omega.coeffs @ Cs
    weight = _index_sums(lam, n, r)[..., :, None] + _index_sums(lam, n, s)[..., None, :]
    back = np.swapaxes(Wr, -1, -2) @ (framed * weight) @ Ws
    return DoubleForm(n, r, s, back)


# ---------------------------------------------------------------------------
# D^2 and the closed forms


def _calculus(h: SymTensorField, chart: MetricChart, x, bundle=None, order: int = 2):
    b = bundle if bundle is not None else riemann(chart, x)
    return b, SymTensorCalculus(b, h.jets(x, order))


def d2_tensor(H):
    """The eight-term combination of second covariant derivatives as a 4-index table."""
    def t(p):
        return np.einsum(f"...{p}->...abcd", H)
    return (t("cabd") + t("acbd") + t("dbac") + t("bdac")
            - t("cbad") - t("bcad") - t("dabc") - t("adbc"))


def d2_operator(h: SymTensorField, chart: MetricChart, x, bundle=None) -> DoubleForm:
    b, c = _calculus(h, chart, x, bundle)
    return rm_to_form(d2_tensor(c.hessian))


def dot_contraction(omega: DoubleForm, h, m: MetricAtPoint) -> DoubleForm:
    """Derivative of the contraction map along h, applied to omega."""
    dinv = -m.g_inv @ np.asarray(h) @ m.g_inv
    return contract(omega, m, inv=dinv)


def riemann_linearization_closed(h, chart, x, bundle=None) -> DoubleForm:
    """-(1/4) D^2 h + (1/4) F_h(R)."""
    b, c = _calculus(h, chart, x, bundle)
    return rm_to_form(d2_tensor(c.hessian)) * (-0.25) + fh_operator(c.h, b.R, b.metric) * 0.25


def ricci_linearization_closed(h, chart, x, bundle=None):
    """(1/2) Lichnerowicz h - delta*(beta h)."""
    b, c = _calculus(h, chart, x, bundle)
    return 0.5 * c.lichnerowicz() - c.delta_star_bianchi(1)


def ric_pairing(b: CurvatureBundle, h):
    return np.einsum("...ac,...bd,...ab,...cd->...", b.g_inv, b.g_inv, b.ric, h)


def scalar_linearization_closed(h, chart, x, bundle=None):
    """Delta tr h + delta delta h - <Ric, h>."""
    b, c = _calculus(h, chart, x, bundle)
    return c.laplacian_trace + c.delta_delta - ric_pairing(b, c.h)


@dataclass
class ContractionIdentityTerms:
    """Both sides of the contraction identities for D^2, F_h and the linearized curvature."""
    c_d2: tuple
    c2_d2: tuple
    c_fh: tuple
    c2_fh: tuple
    c_rdot: tuple
    c2_rdot: tuple

    def residuals(self) -> dict:
        return {k: relative_residual(*getattr(self, k))[1] for k in
                ("c_d2", "c2_d2", "c_fh", "c2_fh", "c_rdot", "c2_rdot")}


def contraction_identity_terms(h, chart, x, bundle=None) -> ContractionIdentityTerms:
    b, c = _calculus(h, chart, x, bundle)
    m, hh = b.metric, c.h
    ric, gi = b.ric, b.g_inv
    D2 = rm_to_form(d2_tensor(c.hessian))
    F = fh_operator(hh, b.R, m)
    rcc = rcc_action(b, hh)
    ricoh = compose(ric, hh, gi) + compose(hh, ric, gi)
    # left sides: contractions of the operators
    cD2 = contract(D2, m).coeffs
    c2D2 = contract(D2, m, 2).coeffs[..., 0, 0]
    cF = contract(F, m).coeffs
    c2F = contract(F, m, 2).coeffs[..., 0, 0]
    Rdot = D2 * (-0.25) + F * 0.25
    cR = contract(Rdot, m).coeffs
    c2R = contract(Rdot, m, 2).coeffs[..., 0, 0]
    # right sides: the displayed formulas
    r_cD2 = (-2 * c.bochner + 2 * c.hess_trace + 4 * c.delta_star_delta() - ricoh + 2 * rcc)
    r_c2D2 = -4 * c.laplacian_trace - 4 * c.delta_delta
    r_cF = ricoh + 2 * rcc
    r_c2F = 4 * ric_pairing(b, hh)
    r_cR = 0.5 * (c.bochner - c.hess_trace - 2 * c.delta_star_delta() + ricoh)
    r_c2R = c.laplacian_trace + c.delta_delta + ric_pairing(b, hh)
    return ContractionIdentityTerms((cD2, r_cD2), (c2D2, r_c2D2), (cF, r_cF), (c2F, r_c2F),
                          (cR, r_cR), (c2R, r_c2R))


# ---------------------------------------------------------------------------
# 2k quantities on the class H_{n,k}


@dataclass
class HClassData:
    mu_k: np.ndarray
    lam: np.ndarray
    thorpe_res: float
    einstein_res: float


def h_class_data(b: CurvatureBundle, k: int, check: bool = True) -> HClassData:
    n = b.n
    if n < 5 or not 2 <= k < n / 2:
        raise HClassError(f"need n >= 5 and 2 <= k < n/2, got n={n}, k={k}")
    mu, tres = thorpe_check(b.R, b.metric, k)
    inv = invariant_set(b, k)
    ein, two_k, lam = einstein_residuals(inv, b)
    scale = np.sqrt(np.abs(np.einsum("...ab,...ab->...", inv.R2k.coeffs, inv.R2k.coeffs))) + 1e-300
    e_rel = float(np.max(two_k * np.sqrt(n) / scale))
    t_rel = float(np.max(tres))
    if check and (t_rel > H_CLASS_TOL or e_rel > H_CLASS_TOL):
        raise HClassError(f"point is off the class: Thorpe residual {t_rel:.2e}, 2k-Einstein residual {e_rel:.2e}")
    return HClassData(mu_k=mu, lam=lam, thorpe_res=t_rel, einstein_res=e_rel)


def _bc(a):
    return np.asarray(a)[..., None, None]


def ricci2k_linearization_closed(h, chart, x, k: int, bundle=None):
    """Linearization of the 2k-Ricci tensor at a point of the class H_{n,k}."""
    b, c = _calculus(h, chart, x, bundle)
    d = h_class_data(b, k)
    n = b.n
    C = float(constant_C(n, k))
    kap = b.kappa
    g = b.g
    tr = c.trace
    rough = c.bochner - c.hess_trace - 2 * c.delta_star_delta()
    q = (n - 2 * k) / (n - 3)
    out = (0.5 * k * (n - 2 * k) * rough
           + k * (k - 1) * _bc(c.laplacian_trace + c.delta_delta) * g
           + _bc(kap / n) * (-(k - 1) * (k + q) * _bc(tr) * g + (k * (n - 2) + (k - 1) * q) * c.h)
           - (n - 2 * k) * (n - 2 * k - 1) / (n - 3) * rcc_action(b, c.h))
    return C * _bc(d.mu_k) * out


def p_operator(b: CurvatureBundle, h, k: int):
    n = b.n
    return (_bc((k - 1) * b.kappa / (n * k * (n - 3))) * h
            - (n - 2 * k - 1) / (k * (n - 3)) * rcc_action(b, h))


def c2k_operator(h, chart, x, k: int, bundle=None):
    """Restriction of the 2k-Ricci linearization minus lambda to trace-free divergence-free h."""
    b, c = _calculus(h, chart, x, bundle)
    d = h_class_data(b, k)
    scale = max(1.0, float(np.max(np.abs(c.h))))
    if np.max(np.abs(c.trace)) > IG_TOL * scale or np.max(np.abs(c.delta)) > IG_TOL * scale:
        raise IgMembershipError("h is not trace-free and divergence-free at the points")
    n = b.n
    C = float(constant_C(n, k))
    return _bc(d.mu_k * k * (n - 2 * k) * C) * (0.5 * c.bochner + p_operator(b, c.h, k))


def gb2k_linearization_closed(h, chart, x, k: int, bundle=None):
    """D mu_k (Delta tr h + delta delta h - kappa/n tr h)."""
    b, c = _calculus(h, chart, x, bundle)
    d = h_class_data(b, k)
    D = float(constant_D(b.n, k))
    return D * d.mu_k * (c.laplacian_trace + c.delta_delta - b.kappa / b.n * c.trace)


def conformal_operator(f: ScalarField, chart, x, k: int, bundle=None):
    """D' mu_k (Delta f - kappa/(n-1) f), the linearization along f g."""
    b = bundle if bundle is not None else riemann(chart, x)
    d = h_class_data(b, k)
    n = b.n
    Dp = (n - 1) * float(constant_D(n, k))
    fv = f.jets(x, 0)[0]
    return Dp * d.mu_k * (scalar_laplacian(f, chart, x, b) - b.kappa / (n - 1) * fv)


def linearization_k1(h, chart, x, bundle=None):
    """k = 1 pattern of the Gauss-Bonnet linearization: D_{n,1} (Delta tr + delta delta - <Ric,h>)."""
    b, c = _calculus(h, chart, x, bundle)
    return float(constant_D(b.n, 1)) * (c.laplacian_trace + c.delta_delta - ric_pairing(b, c.h))


# ---------------------------------------------------------------------------
# finite-difference oracle


def _inv_R(b, k):
    return b.R.coeffs


def _inv_Ric(b, k):
    return b.ric


def _inv_kappa(b, k):
    return b.kappa


def _inv_ricci2k(b, k):
    return ricci_2k(b.R, b.metric, k).coeffs


def _inv_gb2k(b, k):
    return gauss_bonnet_2k(b.R, b.metric, k)


def _inv_lovelock(b, k):
    return lovelock_tensor(b.R, b.metric, k).coeffs


INVARIANTS: dict[str, Callable] = {
    "R": _inv_R,
    "Ric": _inv_Ric,
    "kappa": _inv_kappa,
    "ricci2k": _inv_ricci2k,
    "gb2k": _inv_gb2k,
    "lovelock": _inv_lovelock,
}


@dataclass
class LinearizationRequest:
    chart: MetricChart
    h: SymTensorField
    x: np.ndarray
    invariant: str | Callable = "kappa"
    k: int = 1
    steps: tuple = (1e-2, 1e-3, 1e-4)

    def __post_init__(self):
        s = np.asarray(self.steps, dtype=float)
        if s.ndim != 1 or len(s) < 2 or np.any(s <= 0) or np.any(np.diff(s) >= 0):
            raise ValueError("steps must be a strictly decreasing sequence of positive reals (at least two)")
        self.steps = tuple(float(v) for v in s)
        self.x = np.asarray(self.x, dtype=float)


@dataclass
class FDResult:
    estimates: dict
    richardson: np.ndarray
    order: float
    closed: np.ndarray | None = None
    residual: float | None = None
    rejected: list = field(default_factory=list)

    def compare(self, closed) -> "FDResult":
        closed = np.asarray(closed)
        self.closed = closed
        self.residual = relative_residual(self.richardson, closed)[1]
        return self


def fd_linearize(req: LinearizationRequest, closed=None) -> FDResult:
    """Central differences (B(g+th) - B(g-th))/2t per step, Richardson limit and order estimate.

    The Richardson limit uses the two largest accepted steps, assuming a
    t^2 leading error. Steps that leave the positive cone are recorded and
    skipped.
    """
    fn = INVARIANTS[req.invariant] if isinstance(req.invariant, str) else req.invariant
    est, rejected = {}, []
    for t in req.steps:
        try:
            bp = riemann(req.chart.perturbed(req.h, t), req.x)
            bm = riemann(req.chart.perturbed(req.h, -t), req.x)
        except np.linalg.LinAlgError:
            rejected.append(t)
            continue
        except ValueError as exc:
            if "positive" not in str(exc):
                raise
            rejected.append(t)
            continue
        est[t] = (np.asarray(fn(bp, req.k)) - np.asarray(fn(bm, req.k))) / (2 * t)
    ts = sorted(est, reverse=True)
    if len(ts) < 2:
        raise StepRejected(f"fewer than two usable steps (rejected {rejected})")
    t1, t2 = ts[0], ts[1]
    e1, e2 = est[t1], est[t2]
    rich = (t1**2 * e2 - t2**2 * e1) / (t1**2 - t2**2)
    order = float("nan")
    if len(ts) >= 3:
        a = np.linalg.norm(np.ravel(e1 - e2))
        bnorm = np.linalg.norm(np.ravel(e2 - est[ts[2]]))
        if a > 0 and bnorm > 0:
            order = float(np.log(a / bnorm) / np.log(t1 / t2))
    out = FDResult(estimates=est, richardson=rich, order=order, rejected=rejected)
    if closed is not None:
        out.compare(closed)
    return out
