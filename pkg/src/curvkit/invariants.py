"""Curvature invariants built from the curvature double form.

The 2k-Ricci tensor, the 2k-Gauss-Bonnet curvature and the Lovelock tensor
are computed from powers of the curvature form and iterated contractions.
An independent route for the Lovelock tensor sums the generalized Kronecker
delta expansion over an orthonormal frame. Everything here is pointwise and
works on batches of points.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from math import comb, factorial

import numpy as np

from .chart import CurvatureBundle, form_to_rm, rm_to_form
from .combinat import _enumerate, rank, sort_sign
from .dform import (
    DoubleForm,
    MetricAtPoint,
    contract,
    contract_mixed,
    df_product,
    lower_second,
    raise_second,
    from_matrix,
    hodge_star,
    inner_product,
    scalar,
)
from .report import VerificationReport, digest, relative_residual, timer


class ConventionError(RuntimeError):
    """Two routes that must agree up to one constant do not."""


# ---------------------------------------------------------------------------
# structure constants


@dataclass(frozen=True)
class StructureConstants:
    n: int
    k: int
    C_nk: Fraction
    D_nk: Fraction
    Dp_nk: Fraction
    alpha_lower: Fraction | None
    alpha_upper: Fraction | None
    alpha_nk: Fraction | None
    d_nk_calibrated: float | None = None

    def as_floats(self) -> dict:
        out = {}
        for key in ("C_nk", "D_nk", "Dp_nk", "alpha_lower", "alpha_upper", "alpha_nk", "d_nk_calibrated"):
            v = getattr(self, key)
            out[key] = None if v is None else float(v)
        return out


def constant_C(n: int, k: int) -> Fraction:
    """(2k-1)!(n-3)!/(n-2k)!"""
    return Fraction(factorial(2 * k - 1) * factorial(n - 3), factorial(n - 2 * k))


def constant_D(n: int, k: int) -> Fraction:
    return Fraction(k * k * (n - 2)) * constant_C(n, k) / factorial(2 * k)


def alpha_lower(n: int, k: int) -> Fraction:
    return Fraction(k * n - 5 * k + 2, n * (k * n + k + 2 - 2 * n))


def alpha_upper(n: int, k: int) -> Fraction:
    return Fraction(k * n - 2 * k - 1, n * (k * n - 5 * k + n - 1))


def alpha_restricted(n: int, k: int) -> Fraction:
    """Coefficient of kappa tr(h) g in the operator Rdot - lambda, in units of (n-2k)/(n-3).

    Collected from the (tr h) g term of the 2k-Ricci linearization:
    -(k-1)(k + (n-2k)/(n-3))/n = alpha (n-2k)/(n-3).
    """
    coef = -Fraction(k - 1, n) * (k + Fraction(n - 2 * k, n - 3))
    return coef * Fraction(n - 3, n - 2 * k)


def structure_constants(n: int, k: int, d_nk: float | None = None) -> StructureConstants:
    if n < 4 or k < 1 or 2 * k > n:
        raise ValueError(f"parameters out of range: n={n}, k={k}")
    rigid = n >= 5 and k >= 2 and 2 * k < n
    return StructureConstants(
        n=n, k=k,
        C_nk=constant_C(n, k),
        D_nk=constant_D(n, k),
        Dp_nk=(n - 1) * constant_D(n, k),
        alpha_lower=alpha_lower(n, k) if rigid else None,
        alpha_upper=alpha_upper(n, k) if rigid else None,
        alpha_nk=alpha_restricted(n, k) if 2 * k < n else None,
        d_nk_calibrated=d_nk,
    )


def mu_k_space_form(mu: float, k: int) -> float:
    return mu ** (k - 1) / 2 ** (k - 1)


# ---------------------------------------------------------------------------
# 2k-invariants via double forms


def curvature_power(R: DoubleForm, k: int) -> DoubleForm:
    out = scalar(R.n, 1.0, dtype=R.coeffs.dtype)
    for _ in range(k):
        out = df_product(out, R)
    return out


def _check_k(n, k):
    if k < 1 or 2 * k > n:
        raise ValueError(f"need 1 <= k <= n/2, got k={k}, n={n}")


def _mixed_power(R: DoubleForm, m: MetricAtPoint, k: int) -> DoubleForm:
    # R^k with its second factor raised; contractions are then constant maps
    return curvature_power(raise_second(R, m), k)


def ricci_2k(R: DoubleForm, m: MetricAtPoint, k: int) -> DoubleForm:
    """c^(2k-1)(R^k) as a (1,1) form."""
    _check_k(R.n, k)
    return lower_second(contract_mixed(_mixed_power(R, m, k), 2 * k - 1), m)


def gauss_bonnet_2k(R: DoubleForm, m: MetricAtPoint, k: int):
    """c^(2k)(R^k)/(2k)!"""
    _check_k(R.n, k)
    return contract_mixed(_mixed_power(R, m, k), 2 * k).coeffs[..., 0, 0] / factorial(2 * k)


def ricci_2k_direct(R: DoubleForm, m: MetricAtPoint, k: int) -> DoubleForm:
    """Same as :func:`ricci_2k` through repeated metric contractions (slower reference route)."""
    return contract(curvature_power(R, k), m, 2 * k - 1)


def lovelock_tensor(R: DoubleForm, m: MetricAtPoint, k: int, S2k=None) -> DoubleForm:
    """J = R^(2k)/(2k-1)! - S^(2k) g."""
    r2k = ricci_2k(R, m, k)
    if S2k is None:
        S2k = contract(r2k, m).coeffs[..., 0, 0] / factorial(2 * k)
    return r2k / factorial(2 * k - 1) - m.form() * np.asarray(S2k)


@dataclass
class InvariantSet:
    k: int
    R2k: DoubleForm
    S2k: np.ndarray
    J2k: DoubleForm
    lambda_est: np.ndarray
    residuals: dict = field(default_factory=dict)


def invariant_set(bundle: CurvatureBundle, k: int) -> InvariantSet:
    m = bundle.metric
    r2k = ricci_2k(bundle.R, m, k)
    trace = contract(r2k, m).coeffs[..., 0, 0]
    S = contract(ricci_2k_direct(bundle.R, m, k), m).coeffs[..., 0, 0] / factorial(2 * k)
    J = r2k / factorial(2 * k - 1) - m.form() * S
    lam = factorial(2 * k) * S / m.n
    res = {"trace_identity": relative_residual(trace, factorial(2 * k) * S)[1]}
    return InvariantSet(k=k, R2k=r2k, S2k=S, J2k=J, lambda_est=lam, residuals=res)


def ricci_2k_formula(bundle: CurvatureBundle, k: int, mu_k):
    """C mu_k ((k-1) kappa g + (n-2k) Ric), valid under the Thorpe condition."""
    n = bundle.n
    C = float(constant_C(n, k))
    mu_k = np.asarray(mu_k)
    return C * mu_k[..., None, None] * ((k - 1) * bundle.kappa[..., None, None] * bundle.g
                                         + (n - 2 * k) * bundle.ric)


def gauss_bonnet_formula(bundle: CurvatureBundle, k: int, mu_k):
    """(n-2)!/(2 (n-2k)!) mu_k kappa."""
    n = bundle.n
    return factorial(n - 2) / (2 * factorial(n - 2 * k)) * np.asarray(mu_k) * bundle.kappa


def lambda_formula(n: int, k: int, mu_k, kappa):
    """k(n-2)/n C mu_k kappa, the 2k-Einstein constant on the class."""
    return k * (n - 2) / n * float(constant_C(n, k)) * np.asarray(mu_k) * np.asarray(kappa)


# ---------------------------------------------------------------------------
# Thorpe condition and Einstein residuals


def thorpe_check(R: DoubleForm, m: MetricAtPoint, k: int):
    """Least-squares mu_k in R^(k-1) = mu_k g^(2k-2) and the relative misfit."""
    if k < 2:
        raise ValueError("the Thorpe condition needs k >= 2")
    if 2 * k - 2 > R.n:
        raise ValueError("g^(2k-2) vanishes in this dimension")
    lhs = curvature_power(R, k - 1)
    gp = m.power(2 * k - 2)
    mu = inner_product(lhs, gp, m) / inner_product(gp, gp, m)
    diff = lhs - gp * mu
    scale = np.maximum(np.sqrt(np.abs(inner_product(lhs, lhs, m))), 1e-300)
    res = np.sqrt(np.abs(inner_product(diff, diff, m))) / scale
    res = np.where(np.sqrt(np.abs(inner_product(lhs, lhs, m))) == 0, 0.0, res)
    return mu, res


def einstein_residuals(inv: InvariantSet, bundle: CurvatureBundle):
    """(einstein_res, two_k_einstein_res, lambda) with residuals ||T - (tr T/n) g||/||g||."""
    m = bundle.metric
    n = m.n
    gnorm = np.sqrt(n)
    lam = inv.lambda_est
    two_k = np.sqrt(np.abs(inner_product(inv.R2k - m.form() * lam, inv.R2k - m.form() * lam, m))) / gnorm
    ric = bundle.Ric - m.form() * (bundle.kappa / n)
    ein = np.sqrt(np.abs(inner_product(ric, ric, m))) / gnorm
    return ein, two_k, lam


# ---------------------------------------------------------------------------
# Schouten, Weyl, sigma_k


@dataclass
class ConformalData:
    A: DoubleForm
    W: DoubleForm
    sigma: dict


def schouten(bundle: CurvatureBundle) -> DoubleForm:
    n = bundle.n
    if n <= 2:
        raise ValueError("Schouten tensor needs n >= 3")
    kap = bundle.kappa
    A = (bundle.ric - (kap / (2 * (n - 1)))[..., None, None] * bundle.g) / (n - 2)
    return from_matrix(A)


def schouten_weyl(bundle: CurvatureBundle, kmax: int | None = None) -> ConformalData:
    n = bundle.n
    if n < 4:
        raise ValueError("Schouten-Weyl decomposition used for n >= 4")
    A = schouten(bundle)
    W = bundle.R - df_product(bundle.metric.form(), A)
    kmax = n if kmax is None else kmax
    sig = {k: sigma_k(A, bundle.metric, k) for k in range(1, kmax + 1)}
    return ConformalData(A=A, W=W, sigma=sig)


def sigma_k(A: DoubleForm | np.ndarray, m: MetricAtPoint, k: int):
    """k-th elementary symmetric function of the eigenvalues of g^-1 A.

    Computed from power sums tr((g^-1 A)^j) by Newton's identities.
    """
    a = A.coeffs if isinstance(A, DoubleForm) else np.asarray(A)
    E = np.einsum("...ij,...jk->...ik", m.g_inv, a)
    n = E.shape[-1]
    if k < 0 or k > n:
        return np.zeros(E.shape[:-2])
    p = []
    Ep = np.broadcast_to(np.eye(n), E.shape).copy()
    for _ in range(k):
        Ep = Ep @ E
        p.append(np.trace(Ep, axis1=-2, axis2=-1))
    e = [np.ones(E.shape[:-2])]
    for j in range(1, k + 1):
        s = sum((-1) ** (i - 1) * e[j - i] * p[i - 1] for i in range(1, j + 1))
        e.append(s / j)
    return e[k]


def gb_sigma_constant(n: int, k: int) -> float:
    return factorial(n - k) * factorial(k) / factorial(n - 2 * k)


def gb_sigma_rhs(bundle: CurvatureBundle, k: int, weyl_terms: bool = True):
    """Right side of the Gauss-Bonnet / sigma_k identity.

    The leading term is ((n-k)! k!/(n-2k)!) sigma_k(A). With ``weyl_terms``
    the correction sum_i k!/(i!(k-i)!(n-2k)!) <* g^(n-2k+i) A^i, W^(k-i)> is
    added, using the Schouten tensor in the place of the unnamed tensor and
    the factorwise Hodge star.
    """
    n = bundle.n
    m = bundle.metric
    cd = schouten_weyl(bundle, kmax=k)
    lead = gb_sigma_constant(n, k) * cd.sigma[k]
    if not weyl_terms:
        return lead, cd
    corr = 0.0
    for i in range(k):
        left = df_product(m.power(n - 2 * k + i), curvature_power(cd.A, i))
        right = curvature_power(cd.W, k - i)
        coef = factorial(k) / (factorial(i) * factorial(k - i) * factorial(n - 2 * k))
        corr = corr + coef * inner_product(hodge_star(left, m), right, m)
    return lead + corr, cd


def gb_sigma_identity(bundle: CurvatureBundle, k: int, *, conformally_flat: bool, tolerance: float = 1e-6,
                      seed=None, check_id: str | None = None) -> VerificationReport:
    """S^(2k) against the sigma_k expression.

    On conformally flat charts the short form is asserted; otherwise the full
    identity with Weyl corrections is evaluated and reported without assertion.
    """
    with timer() as t:
        S = gauss_bonnet_2k(bundle.R, bundle.metric, k)
        rhs, cd = gb_sigma_rhs(bundle, k, weyl_terms=not conformally_flat)
    rep = VerificationReport.compare(
        check_id or f"gb-sigma[n={bundle.n},k={k}]",
        "gauss-bonnet-sigma-k" if conformally_flat else "gauss-bonnet-sigma-k-weyl",
        S, rhs, tolerance, seed=seed, duration_ms=t["ms"], inputs_digest=digest(bundle.g),
        asserted=conformally_flat,
    )
    return rep


# ---------------------------------------------------------------------------
# hypersurfaces


def shape_to_curvature(A, m: MetricAtPoint) -> DoubleForm:
    """Gauss equation: R = (1/2) A.A for a hypersurface of Euclidean space."""
    Af = from_matrix(A)
    return df_product(Af, Af) / 2.0


def newton_tensor(A, m: MetricAtPoint, r: int):
    """P_r = S_r I - P_{r-1} A as an endomorphism (P_0 = I), S_r = sigma_r(A)."""
    E = np.einsum("...ij,...jk->...ik", m.g_inv, np.asarray(A))
    n = E.shape[-1]
    P = np.broadcast_to(np.eye(n), E.shape).copy()
    for j in range(1, r + 1):
        S = sigma_k(A, m, j)
        P = S[..., None, None] * np.eye(n) - P @ E
    return P


def lower(P, m: MetricAtPoint):
    """Endomorphism to bilinear form: g P."""
    return np.einsum("...ij,...jk->...ik", m.g, P)


def ratio_spread(a, b):
    """Least-squares ratio c with a ~ c b per sample, and the relative spread of c."""
    a = np.asarray(a).reshape(len(a), -1)
    b = np.asarray(b).reshape(len(b), -1)
    # samples where both sides vanish are proportional with any ratio
    keep = (np.linalg.norm(a, axis=1) > 1e-14) | (np.linalg.norm(b, axis=1) > 1e-14)
    a, b = a[keep], b[keep]
    if len(a) == 0:
        raise ValueError("both sides vanish at every sample")
    c = np.einsum("si,si->s", a, b) / np.einsum("si,si->s", b, b)
    fit = np.max(np.linalg.norm(a - c[:, None] * b, axis=1) / np.linalg.norm(a, axis=1))
    mean = np.mean(c)
    spread = float(np.max(np.abs(c - mean)) / abs(mean))
    return c, max(spread, float(fit))


def hypersurface_lovelock_check(shapes, k: int, tolerance: float = 1e-6, seed=None) -> VerificationReport:
    """Lovelock tensor of R = A.A/2 against the Newton tensor P_2k across samples."""
    A = np.stack([np.asarray(a) for a in shapes])
    n = A.shape[-1]
    m = MetricAtPoint(np.broadcast_to(np.eye(n), A.shape).copy())
    with timer() as t:
        R = shape_to_curvature(A, m)
        J = lovelock_tensor(R, m, k).coeffs
        P = lower(newton_tensor(A, m, 2 * k), m)
        c, spread = ratio_spread(J, P)
    return VerificationReport(
        check_id=f"hypersurface-lovelock[n={n},k={k}]", anchor="lovelock-newton-proportionality",
        residual=spread, tolerance=tolerance, residual_rel=spread, residual_abs=float("nan"),
        lhs={"ratio_mean": float(np.mean(c))}, rhs={"samples": len(c)}, seed=seed,
        duration_ms=t["ms"], inputs_digest=digest(A),
    )


# ---------------------------------------------------------------------------
# Kronecker-delta route for the Lovelock tensor


@lru_cache(maxsize=None)
def _kronecker_table(n: int, k: int):
    """Nonzero terms of delta^{i I}_{j J} prod R_{I pair}^{J pair}.

    Returns (ij, sign, I_pairs, J_pairs): for every nonzero term, the flat
    output index i*n+j, the delta sign, and the ranks of the k first-factor
    and second-factor pairs (increasing pairs, sign folded in). Pair swaps and
    simultaneous pair reorderings are summed out analytically and restored by
    the factor returned as the fifth entry.
    """
    rows_ij, rows_sign, rows_I, rows_J = [], [], [], []
    p = 2 * k
    for S in combinations(range(n), p + 1):
        for i in S:
            rest_i = tuple(a for a in S if a != i)
            match_i = list(_perfect_matchings(rest_i))
            for j in S:
                rest_j = tuple(a for a in S if a != j)
                lists_j = list(_ordered_pairings(rest_j))
                for mi in match_i:
                    up = (i,) + tuple(a for pr in mi for a in pr)
                    _, s_up = sort_sign(up)
                    for lj in lists_j:
                        lo = (j,) + tuple(a for pr in lj for a in pr)
                        _, s_lo = sort_sign(lo)
                        rows_ij.append(i * n + j)
                        rows_sign.append(s_up * s_lo)
                        rows_I.append([rank(pr, n) for pr in mi])
                        rows_J.append([rank(pr, n) for pr in lj])
    factor = 2**k * 2**k * factorial(k)
    ij = np.array(rows_ij, dtype=np.intp)
    sg = np.array(rows_sign, dtype=float)
    Ip = np.array(rows_I, dtype=np.intp).reshape(-1, k)
    Jp = np.array(rows_J, dtype=np.intp).reshape(-1, k)
    return ij, sg, Ip, Jp, factor


def _perfect_matchings(items):
    """Unordered partitions into increasing pairs, listed in a canonical order."""
    if not items:
        yield ()
        return
    a = items[0]
    for idx in range(1, len(items)):
        b = items[idx]
        rest = items[1:idx] + items[idx + 1:]
        for mm in _perfect_matchings(rest):
            yield ((a, b),) + mm


def _ordered_pairings(items):
    """Ordered lists of increasing pairs partitioning ``items``."""
    for mm in _perfect_matchings(items):
        for perm in permutations(mm):
            yield perm


def lovelock_kronecker_raw(Rm, m: MetricAtPoint, k: int):
    """delta^{i i1..i2k}_{j j1..j2k} R_{i1 i2}^{j1 j2} ... in an orthonormal frame.

    ``Rm`` is the all-lower curvature table (or a (2,2) DoubleForm). The result
    is returned as coordinate components of a bilinear form.
    """
    if isinstance(Rm, DoubleForm):
        Rm = form_to_rm(Rm)
    n = m.n
    _check_k(n, k)
    if 2 * k + 1 > n:
        raise ValueError("the Kronecker expansion needs 2k+1 <= n")
    F = m.frame()
    Rf = np.einsum("...abcd,...ai,...bj,...ck,...dl->...ijkl", Rm, F, F, F, F)
    Rp = rm_to_form(Rf).coeffs
    ij, sg, Ip, Jp, factor = _kronecker_table(n, k)
    prod = np.ones(Rp.shape[:-2] + (len(sg),), dtype=Rp.dtype)
    for q in range(k):
        prod = prod * Rp[..., Ip[:, q], Jp[:, q]]
    prod = prod * sg
    flat = np.zeros(Rp.shape[:-2] + (n * n,), dtype=Rp.dtype)
    # deterministic accumulation through a dense incidence product
    inc = _incidence(n, k)
    flat = prod @ inc
    Lf = factor * flat.reshape(Rp.shape[:-2] + (n, n))
    Finv = np.linalg.inv(F)
    return np.einsum("...ai,...ij,...jb->...ab", np.swapaxes(Finv, -1, -2), Lf, Finv)


@lru_cache(maxsize=None)
def _incidence(n, k):
    ij = _kronecker_table(n, k)[0]
    inc = np.zeros((len(ij), n * n))
    inc[np.arange(len(ij)), ij] = 1.0
    return inc


_D_NK: dict = {}


def calibrate_d_nk(n: int, k: int, mu: float = 1.0, point=None) -> float:
    """d_nk with J = d * (Kronecker sum), fitted on the round sphere of curvature mu."""
    key = (n, k)
    if key in _D_NK:
        return _D_NK[key]
    from .chart import riemann
    from .models import space_form

    ch = space_form(n, mu)
    x = np.full((1, n), 0.1) if point is None else np.asarray(point)[None]
    b = riemann(ch, x)
    J = lovelock_tensor(b.R, b.metric, k).coeffs
    raw = lovelock_kronecker_raw(b.Rm, b.metric, k)
    d = float(np.sum(J * raw) / np.sum(raw * raw))
    _D_NK[key] = d
    return d


def lovelock_kronecker(Rm, m: MetricAtPoint, k: int, tolerance: float = 1e-8):
    """Calibrated Kronecker-route Lovelock tensor and d_nk.

    The route-A tensor is recomputed and proportionality is asserted; a
    mismatch beyond ``tolerance`` raises :class:`ConventionError`.
    """
    n = m.n
    d = calibrate_d_nk(n, k)
    raw = lovelock_kronecker_raw(Rm, m, k)
    L = d * raw
    R = rm_to_form(Rm) if not isinstance(Rm, DoubleForm) else Rm
    J = lovelock_tensor(R, m, k).coeffs
    ab, rel = relative_residual(L, J)
    if ab > tolerance * max(1.0, float(np.max(np.abs(J)))):
        raise ConventionError(f"Kronecker route not proportional to the double-form route (rel {rel:.2e})")
    return L, d


# ---------------------------------------------------------------------------
# rigidity certificate


def tracefree_basis(n: int) -> np.ndarray:
    """Orthonormal basis of trace-free symmetric n x n matrices (Frobenius)."""
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n))
            e[i, j] = e[j, i] = 1 / np.sqrt(2)
            basis.append(e)
    for i in range(1, n):
        # Gram-Schmidt on diagonal directions orthogonal to the identity
        d = np.zeros(n)
        d[:i] = 1.0
        d[i] = -i
        basis.append(np.diag(d / np.linalg.norm(d)))
    return np.array(basis)


def rcc_tracefree_spectrum(bundle: CurvatureBundle):
    """Eigenvalues of Rcc on g-trace-free symmetric tensors (in an orthonormal frame)."""
    n = bundle.n
    F = bundle.metric.frame()
    Rf = np.einsum("...abcd,...ai,...bj,...ck,...dl->...ijkl", bundle.Rm, F, F, F, F)
    B = tracefree_basis(n)
    img = np.einsum("...acbd,qcd->...qab", Rf, B)
    M = np.einsum("pab,...qab->...pq", B, img)
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    return np.linalg.eigvalsh(M)


@dataclass
class RigidityCertificate:
    n: int
    k: int
    kappa: np.ndarray
    a_min: np.ndarray
    a_max: np.ndarray
    alpha_lower: float
    alpha_upper: float
    lower_bound: np.ndarray
    upper_bound: np.ndarray
    satisfied: bool
    kind: str = "certificate"

    def summary(self) -> dict:
        return {
            "n": self.n, "k": self.k, "kind": self.kind,
            "a_min": float(np.min(self.a_min)), "a_max": float(np.max(self.a_max)),
            "alpha_lower_kappa": float(np.min(self.lower_bound)),
            "alpha_upper_kappa": float(np.max(self.upper_bound)),
            "hypothesis_satisfied_pointwise": bool(self.satisfied),
        }


def rigidity_certificate(bundle: CurvatureBundle, k: int) -> RigidityCertificate:
    """Pointwise spectral bounds of Rcc on trace-free tensors against alpha * kappa.

    min > alpha_lower kappa or max < alpha_upper kappa at every sampled point
    bounds the global Rayleigh quotients, certifying the hypothesis.
    """
    n = bundle.n
    if n < 5 or not 2 <= k < n / 2:
        raise ValueError("rigidity constants need n >= 5 and 2 <= k < n/2")
    ev = rcc_tracefree_spectrum(bundle)
    amin, amax = ev[..., 0], ev[..., -1]
    al, au = float(alpha_lower(n, k)), float(alpha_upper(n, k))
    kap = bundle.kappa
    lo, hi = al * kap, au * kap
    ok = bool(np.all(amin > lo)) or bool(np.all(amax < hi))
    return RigidityCertificate(n, k, kap, amin, amax, al, au, lo, hi, ok)
