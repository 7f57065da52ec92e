"""Pointwise algebra of double forms.

A double form of bidegree (r, s) in dimension n is stored densely as a table of
coefficients ``coeffs[..., I, J]`` over increasing multi-indices I (degree r)
and J (degree s), i.e. its values on coordinate basis elements
``e_I (x) e_J``. Leading axes are batch axes, so a single object can hold the
same quantity at many points.

Conventions
-----------
* The product is the tensor-exterior product with no sign between the two
  factor algebras; wedge products use the determinant normalization, so that
  for the Euclidean metric ``(g*g/2)(e0^e1, e0^e1) == 1``.
* ``contract`` uses the inverse metric on one slot of each factor.
* The inner product is the one induced on each factor by ``g``, summed over
  increasing multi-indices, so ``<g, g> == n`` and ``<h, g> == tr_g h``.
* ``hodge_star`` acts on each factor separately with the Riemannian volume.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .combinat import (
    DegreeError,
    complement_table,
    compound_matrix,
    insertion_table,
    shuffle_table,
    sort_sign,
)
from .report import VerificationReport, digest, timer


class NotPositiveDefiniteError(ValueError):
    """The metric is not symmetric positive definite at a queried point."""


class BidegreeError(ValueError):
    """Operands have incompatible bidegrees or dimensions."""


class MetricAtPoint:
    """Metric components at one point (or a batch of points).

    Holds ``g``, ``g_inv`` and ``vol_factor = sqrt(det g)``. Complex input is
    accepted for complex-step differentiation; positivity is then checked on
    the real part.
    """

    def __init__(self, g, check: bool = True):
        g = np.asarray(g)
        if g.ndim < 2 or g.shape[-1] != g.shape[-2]:
            raise ValueError(f"metric must be square, got shape {g.shape}")
        if check:
            re = g.real
            if not np.allclose(re, np.swapaxes(re, -1, -2), rtol=1e-12, atol=1e-14):
                raise NotPositiveDefiniteError("metric is not symmetric")
            try:
                np.linalg.cholesky(re)
            except np.linalg.LinAlgError as exc:
                raise NotPositiveDefiniteError("metric is not positive definite") from exc
        self.g = g
        self.g_inv = np.linalg.inv(g)
        self.vol_factor = np.sqrt(np.linalg.det(g))
        self.n = g.shape[-1]

    @classmethod
    def euclidean(cls, n: int) -> "MetricAtPoint":
        return cls(np.eye(n))

    @property
    def batch_shape(self) -> tuple:
        return self.g.shape[:-2]

    def form(self) -> "DoubleForm":
        """The metric as a (1,1) double form."""
        return DoubleForm(self.n, 1, 1, self.g)

    def power(self, p: int) -> "DoubleForm":
        """g^p as a (p,p) double form."""
        out = scalar(self.n, 1.0, dtype=self.g.dtype)
        gf = self.form()
        for _ in range(p):
            out = df_product(out, gf)
        return out

    def frame(self) -> np.ndarray:
        """Columns form a g-orthonormal frame: the inverse transpose of the Cholesky factor."""
        L = np.linalg.cholesky(self.g)
        return np.swapaxes(np.linalg.inv(L), -1, -2)


@dataclass(frozen=True, eq=False)
class DoubleForm:
    n: int
    r: int
    s: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not (0 <= self.r <= self.n and 0 <= self.s <= self.n):
            raise DegreeError(f"bidegree ({self.r},{self.s}) invalid for n={self.n}")
        c = np.asarray(self.coeffs)
        want = (comb(self.n, self.r), comb(self.n, self.s))
        if c.shape[-2:] != want:
            raise ValueError(f"coefficient table shape {c.shape[-2:]} != {want}")
        object.__setattr__(self, "coeffs", c)

    @property
    def bidegree(self) -> tuple[int, int]:
        return self.r, self.s

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[:-2]

    # -- arithmetic ---------------------------------------------------------
    def _same(self, other):
        if not isinstance(other, DoubleForm) or (other.n, other.r, other.s) != (self.n, self.r, self.s):
            raise BidegreeError("operands must share dimension and bidegree")

    def __add__(self, other):
        self._same(other)
        return DoubleForm(self.n, self.r, self.s, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._same(other)
        return DoubleForm(self.n, self.r, self.s, self.coeffs - other.coeffs)

    def __neg__(self):
        return DoubleForm(self.n, self.r, self.s, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, DoubleForm):
            return df_product(self, other)
        other = np.asarray(other)
        return DoubleForm(self.n, self.r, self.s, self.coeffs * other[..., None, None])

    def __rmul__(self, other):
        other = np.asarray(other)
        return DoubleForm(self.n, self.r, self.s, self.coeffs * other[..., None, None])

    def __truediv__(self, c):
        c = np.asarray(c)
        return DoubleForm(self.n, self.r, self.s, self.coeffs / c[..., None, None])

    # -- evaluation ---------------------------------------------------------
    def value(self, first, second):
        """Evaluate on ``e_first (x) e_second`` for arbitrary index tuples."""
        a, sa = sort_sign(first)
        b, sb = sort_sign(second)
        if len(first) != self.r or len(second) != self.s:
            raise BidegreeError("tuple lengths must match the bidegree")
        if sa == 0 or sb == 0:
            return np.zeros(self.batch_shape)
        from .combinat import rank

        return sa * sb * self.coeffs[..., rank(a, self.n), rank(b, self.n)]

    def transpose(self) -> "DoubleForm":
        """Swap the two factors."""
        return DoubleForm(self.n, self.s, self.r, np.swapaxes(self.coeffs, -1, -2))

    def is_symmetric(self, tol: float = 1e-10) -> bool:
        """Membership in the symmetric class: r == s and w(I,J) == w(J,I)."""
        if self.r != self.s:
            return False
        c = self.coeffs
        scale = max(1.0, float(np.max(np.abs(c))) if c.size else 1.0)
        return bool(np.max(np.abs(c - np.swapaxes(c, -1, -2)), initial=0.0) <= tol * scale)

    def to_tensor(self) -> np.ndarray:
        """Fully antisymmetric component array of shape (..., n^r, n^s)."""
        from itertools import product as iproduct

        n = self.n
        out = np.zeros(self.batch_shape + (n,) * (self.r + self.s), dtype=self.coeffs.dtype)
        for I in iproduct(range(n), repeat=self.r):
            for J in iproduct(range(n), repeat=self.s):
                out[(...,) + I + J] = self.value(I, J)
        return out

    @classmethod
    def from_tensor(cls, n: int, r: int, s: int, t) -> "DoubleForm":
        """Read coefficients of an antisymmetric tensor at increasing index pairs."""
        from .combinat import _enumerate

        t = np.asarray(t)
        rows, cols = _enumerate(n, r), _enumerate(n, s)
        c = np.empty(t.shape[: t.ndim - r - s] + (len(rows), len(cols)), dtype=t.dtype)
        for i, I in enumerate(rows):
            for j, J in enumerate(cols):
                c[..., i, j] = t[(...,) + tuple(I) + tuple(J)]
        return cls(n, r, s, c)


def scalar(n: int, c=1.0, dtype=float) -> DoubleForm:
    c = np.asarray(c, dtype=dtype)
    return DoubleForm(n, 0, 0, c[..., None, None])


def zeros(n: int, r: int, s: int, batch=()) -> DoubleForm:
    return DoubleForm(n, r, s, np.zeros(tuple(batch) + (comb(n, r), comb(n, s))))


def from_matrix(h) -> DoubleForm:
    """A bilinear form (n x n matrix) as a (1,1) double form."""
    h = np.asarray(h)
    return DoubleForm(h.shape[-1], 1, 1, h)


def df_product(a: DoubleForm, b: DoubleForm) -> DoubleForm:
    """Tensor-exterior product: first factors wedge together, second factors likewise."""
    if a.n != b.n:
        raise BidegreeError("dimension mismatch")
    n = a.n
    r, s = a.r + b.r, a.s + b.s
    if r > n or s > n:
        raise DegreeError(f"product bidegree ({r},{s}) overflows dimension {n}")
    if a.r == a.s == 0:
        return DoubleForm(n, b.r, b.s, a.coeffs[..., 0:1, 0:1] * b.coeffs)
    if b.r == b.s == 0:
        return DoubleForm(n, a.r, a.s, a.coeffs * b.coeffs[..., 0:1, 0:1])
    f1, f2, fs = shuffle_table(n, a.r, b.r)
    s1, s2, ss = shuffle_table(n, a.s, b.s)
    # A[..., I, m, J, m'] = a[I1(I,m), J1(J,m')]
    A = a.coeffs[..., f1[:, :, None, None], s1[None, None, :, :]]
    B = b.coeffs[..., f2[:, :, None, None], s2[None, None, :, :]]
    sign = fs[:, :, None, None] * ss[None, None, :, :]
    return DoubleForm(n, r, s, np.sum(A * B * sign, axis=(-3, -1)))


def _contract_once(w: DoubleForm, inv) -> DoubleForm:
    n = w.n
    tr, sr = insertion_table(n, w.r)
    ts, ss = insertion_table(n, w.s)
    # W[..., I', a, J', b] = sign * w[(a,I'), (b,J')]
    W = w.coeffs[..., tr[:, :, None, None], ts[None, None, :, :]]
    W = W * (sr[:, :, None, None] * ss[None, None, :, :])
    # batched matmul over the flattened (a, b) pair is much faster than einsum here
    I, J = W.shape[-4], W.shape[-2]
    Wt = np.swapaxes(W, -3, -2).reshape(W.shape[:-4] + (I * J, n * n))
    out = (Wt @ np.asarray(inv).reshape(np.shape(inv)[:-2] + (n * n, 1)))[..., 0]
    return DoubleForm(n, w.r - 1, w.s - 1, out.reshape(out.shape[:-1] + (I, J)))


def contract(w: DoubleForm, m: MetricAtPoint, times: int = 1, inv=None) -> DoubleForm:
    """Apply the metric contraction ``times`` times.

    ``inv`` overrides the inverse metric used for the slot pairing; passing
    the linearized inverse gives the derivative of the contraction operator.
    """
    if times < 0:
        raise ValueError("times must be >= 0")
    if w.r < times or w.s < times:
        raise DegreeError(f"cannot contract ({w.r},{w.s}) {times} times")
    inv = m.g_inv if inv is None else inv
    for _ in range(times):
        w = _contract_once(w, inv)
    return w


@lru_cache(maxsize=None)
def _identity_contraction(n: int, r: int, s: int) -> np.ndarray:
    """Constant matrix of the contraction pairing slot a with slot a (identity metric).

    Maps flattened (r,s) coefficients to flattened (r-1,s-1) coefficients.
    """
    tr, sr = insertion_table(n, r)
    ts, ss = insertion_table(n, s)
    nI, nJ = comb(n, r), comb(n, s)
    K = np.zeros((tr.shape[0] * ts.shape[0], nI * nJ))
    for i in range(tr.shape[0]):
        for j in range(ts.shape[0]):
            for a in range(n):
                if sr[i, a] and ss[j, a]:
                    K[i * ts.shape[0] + j, tr[i, a] * nJ + ts[j, a]] += sr[i, a] * ss[j, a]
    return K


def raise_second(w: DoubleForm, m: MetricAtPoint) -> DoubleForm:
    """Raise every index of the second factor (coefficients times the compound of g^-1)."""
    return DoubleForm(w.n, w.r, w.s, w.coeffs @ compound_matrix(m.g_inv, w.s))


def lower_second(w: DoubleForm, m: MetricAtPoint) -> DoubleForm:
    return DoubleForm(w.n, w.r, w.s, w.coeffs @ compound_matrix(m.g, w.s))


def contract_mixed(w: DoubleForm, times: int = 1) -> DoubleForm:
    """Contraction of a form whose second factor is raised: a constant linear map.

    Raising commutes with products and contraction, so
    contract(w, m) == lower_second(contract_mixed(raise_second(w, m)), m).
    """
    if w.r < times or w.s < times:
        raise DegreeError(f"cannot contract ({w.r},{w.s}) {times} times")
    for _ in range(times):
        n, r, s = w.n, w.r, w.s
        K = _identity_contraction(n, r, s)
        flat = w.coeffs.reshape(w.coeffs.shape[:-2] + (-1,)) @ K.T
        w = DoubleForm(n, r - 1, s - 1, flat.reshape(flat.shape[:-1] + (comb(n, r - 1), comb(n, s - 1))))
    return w


def metric_multiply(w: DoubleForm, m: MetricAtPoint, times: int = 1) -> DoubleForm:
    for _ in range(times):
        w = df_product(m.form(), w)
    return w


def _gram(m: MetricAtPoint, r: int):
    return compound_matrix(m.g_inv, r)


def inner_product(a: DoubleForm, b: DoubleForm, m: MetricAtPoint):
    if (a.n, a.r, a.s) != (b.n, b.r, b.s):
        raise BidegreeError("inner product needs equal bidegree")
    Gr, Gs = _gram(m, a.r), _gram(m, a.s)
    return np.einsum("...ij,...ik,...jl,...kl->...", a.coeffs, Gr, Gs, b.coeffs)


def norm(a: DoubleForm, m: MetricAtPoint):
    return np.sqrt(np.abs(inner_product(a, a, m)))


def _star_factor(n: int, r: int):
    comp, sign = complement_table(n, r)
    # P[K, I] = sign(I, K) when K is the complement of I
    P = np.zeros((comb(n, n - r), comb(n, r)))
    P[comp, np.arange(comb(n, r))] = sign
    return P


def hodge_star(w: DoubleForm, m: MetricAtPoint) -> DoubleForm:
    """Factorwise Hodge star, bidegree (r,s) -> (n-r, n-s)."""
    n = w.n
    raised = np.einsum("...ik,...kl,...jl->...ij", _gram(m, w.r), w.coeffs, _gram(m, w.s))
    Pr, Ps = _star_factor(n, w.r), _star_factor(n, w.s)
    out = np.einsum("Ki,...ij,Lj->...KL", Pr, raised, Ps)
    vol = m.vol_factor
    return DoubleForm(n, n - w.r, n - w.s, out * (vol * vol)[..., None, None])


def commutation_rhs(eta: DoubleForm, l: int, mpow: int, m: MetricAtPoint) -> DoubleForm:
    """Right side of the contraction/metric-power commutation rule.

    (1/mpow!) g^mpow c^l eta + sum_q C(l,q) prod_i (n-r-s+l-mpow-i) g^(mpow-q)/(mpow-q)! c^(l-q) eta
    """
    n, r, s = eta.n, eta.r, eta.s
    total = None
    for q in range(0, min(l, mpow) + 1):
        if eta.r < l - q or eta.s < l - q:
            continue
        fall = 1
        for i in range(q):
            fall *= n - r - s + l - mpow - i
        coef = comb(l, q) * fall / factorial(mpow - q)
        if coef == 0:
            continue
        term = metric_multiply(contract(eta, m, l - q), m, mpow - q) * coef
        total = term if total is None else total + term
    if total is None:
        total = zeros(n, r + mpow - l, s + mpow - l, eta.batch_shape)
    return total


def commutation_check(eta: DoubleForm, l: int, mpow: int, m: MetricAtPoint,
                      tolerance: float = 1e-10, seed=None) -> VerificationReport:
    """Compare (1/mpow!) c^l(g^mpow eta) with the commutation-rule expansion."""
    if l < 1 or mpow < 1:
        raise ValueError("l and mpow must be >= 1")
    if eta.r + mpow > eta.n or eta.s + mpow > eta.n:
        raise DegreeError("g^mpow eta overflows the dimension")
    if eta.r + mpow < l or eta.s + mpow < l:
        raise DegreeError("too many contractions")
    with timer() as t:
        lhs = contract(metric_multiply(eta, m, mpow), m, l) / factorial(mpow)
        rhs = commutation_rhs(eta, l, mpow, m)
    return VerificationReport.compare(
        f"commutation[n={eta.n},r={eta.r},s={eta.s},l={l},m={mpow}]",
        "contraction-metric-power-commutation",
        lhs.coeffs, rhs.coeffs, tolerance,
        inputs_digest=digest(eta.coeffs, l, mpow), seed=seed, duration_ms=t["ms"],
    )


def random_form(rng: np.random.Generator, n: int, r: int, s: int, symmetric: bool = False,
                batch=()) -> DoubleForm:
    c = rng.standard_normal(tuple(batch) + (comb(n, r), comb(n, s)))
    if symmetric:
        if r != s:
            raise BidegreeError("symmetric forms need r == s")
        c = 0.5 * (c + np.swapaxes(c, -1, -2))
    return DoubleForm(n, r, s, c)


def random_metric(rng: np.random.Generator, n: int, spread: float = 0.3) -> MetricAtPoint:
    a = rng.standard_normal((n, n)) * spread
    return MetricAtPoint(np.eye(n) + a @ a.T)
