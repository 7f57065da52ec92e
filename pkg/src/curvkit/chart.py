"""Metric charts, tensor fields with jets, and the curvature pipeline.

Conventions (all index tables carry leading batch axes for points):

* ``dg[..., i, j, a] = d_a g_ij``; derivative axes are appended in order.
* ``Gamma[..., k, i, j]`` is the Levi-Civita symbol Gamma^k_ij and
  ``dGamma[..., k, i, j, a]`` its partial in direction a.
* ``Rm[..., a, b, c, d]`` is the curvature with all indices lowered,
  normalized so that a space form of curvature mu has
  ``Rm_abcd = mu (g_ac g_bd - g_ad g_bc)``, i.e. ``R = (mu/2) g^2`` as a
  double form. The curvature double form takes the value ``Rm_abcd`` on
  ``(e_a ^ e_b) (x) (e_c ^ e_d)``.
* ``H[..., l, i, j, k]`` is the second covariant derivative
  ``(nabla^2_{e_l, e_i} h)(e_j, e_k)``.
* Delta on functions and the divergence carry the geometer's sign:
  ``Delta f = -g^ij (nabla^2 f)_ij`` and ``(delta T)_j = -g^ik nabla_i T_kj``.

The pointwise maps from metric jets to curvature use only operations that
are analytic in their inputs, so they can be fed complex jets; this is how
derivatives of curvature quantities along the chart are obtained
(complex-step differentiation, see :func:`complex_step_gradient`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations_with_replacement

import numpy as np

from .combinat import _enumerate
from .dform import DoubleForm, MetricAtPoint, NotPositiveDefiniteError, contract
from .jets import Jet


class DomainError(ValueError):
    """A queried point lies outside the chart domain."""


class JetOrderError(ValueError):
    """A computation needs more derivatives than the field provides."""


# ---------------------------------------------------------------------------
# finite-difference jets

# central stencils of order 4: offsets -> weights (before dividing by step^k)
_STENCILS = {
    1: {-2: 1 / 12, -1: -8 / 12, 1: 8 / 12, 2: -1 / 12},
    2: {-2: -1 / 12, -1: 16 / 12, 0: -30 / 12, 1: 16 / 12, 2: -1 / 12},
    3: {-3: 1 / 8, -2: -1.0, -1: 13 / 8, 1: -13 / 8, 2: 1.0, 3: -1 / 8},
}


def _multi_stencil(n: int, counts: dict):
    """Tensor-product stencil for the mixed partial with the given axis multiplicities."""
    pts = [(np.zeros(n), 1.0, 0)]
    for axis, k in counts.items():
        nxt = []
        for off, w, deg in pts:
            for o, wk in _STENCILS[k].items():
                p = off.copy()
                p[axis] += o
                nxt.append((p, w * wk, deg + k))
        pts = nxt
    offs = np.array([p for p, _, _ in pts])
    wts = np.array([w for _, w, _ in pts])
    return offs, wts


def _fd_plan(n: int, order: int):
    """All stencils needed for partials up to ``order``; one flat offset list."""
    entries = []
    for k in range(1, order + 1):
        for combo in combinations_with_replacement(range(n), k):
            counts = {}
            for a in combo:
                counts[a] = counts.get(a, 0) + 1
            offs, wts = _multi_stencil(n, counts)
            entries.append((k, combo, offs, wts))
    return entries


def fd_derivatives(values, x, order: int, step: float):
    """Partials of ``values`` (points (..., n) -> array (..., *S)) by order-4 stencils.

    Returns ``[val, d1, d2, d3][:order+1]``; mixed partials are filled
    symmetrically from a single evaluation per unordered index multiset.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    plan = _fd_plan(n, order)
    offsets = np.concatenate([np.zeros((1, n))] + [e[2] for e in plan])
    pts = x[..., None, :] + step * offsets
    v = np.asarray(values(pts))
    batch = x.shape[:-1]
    S = v.shape[len(batch) + 1:]
    out = [v[(...,) + (0,) + (slice(None),) * len(S)]]
    for k in range(1, order + 1):
        out.append(np.zeros(batch + S + (n,) * k, dtype=v.dtype))
    pos = 1
    for k, combo, offs, wts in plan:
        m = len(wts)
        blk = v[(slice(None),) * len(batch) + (slice(pos, pos + m),)]
        d = np.tensordot(wts, np.moveaxis(blk, len(batch), 0), axes=(0, 0)) / step**k
        pos += m
        for perm in set(_perms(combo)):
            out[k][(...,) + perm] = d
    return out


def _perms(combo):
    from itertools import permutations

    return permutations(combo)


def fd_derivatives_richardson(values, x, order: int, step: float):
    """Richardson combination of step and step/2 (removes the h^4 error term).

    Returns ``(jets, discrepancy)`` where discrepancy is the largest gap between
    the plain and the extrapolated estimate over all derivative orders.
    """
    a = fd_derivatives(values, x, order, step)
    b = fd_derivatives(values, x, order, step / 2)
    out, gap = [b[0]], 0.0
    for k in range(1, order + 1):
        r = (16 * b[k] - a[k]) / 15
        gap = max(gap, float(np.max(np.abs(r - b[k]), initial=0.0)))
        out.append(r)
    return out, gap


# ---------------------------------------------------------------------------
# fields


def _assemble(expr, shape, batch, n, order, dtype=float):
    """Turn nested lists of Jet/numbers into derivative arrays [val, d1, ...]."""
    flat = []

    def walk(e, depth):
        if depth == len(shape):
            flat.append(e)
        else:
            for sub in e:
                walk(sub, depth + 1)

    walk(expr, 0)
    vals = np.zeros(batch + (len(flat),), dtype=dtype)
    ds = [np.zeros(batch + (len(flat),) + (n,) * k, dtype=dtype) for k in range(1, order + 1)]
    for i, e in enumerate(flat):
        if isinstance(e, Jet):
            vals[..., i] = e.val
            for k in range(1, order + 1):
                dk = (e.d1, e.d2, e.d3)[k - 1]
                if dk is None:
                    raise JetOrderError(f"expression provides derivatives only up to order {e.order}")
                ds[k - 1][(Ellipsis, i) + (slice(None),) * k] = dk
        else:
            vals[..., i] = e
    out = [vals.reshape(batch + tuple(shape))]
    for k in range(1, order + 1):
        out.append(ds[k - 1].reshape(batch + tuple(shape) + (n,) * k))
    return out


def _eval_plain(expr_fn, pts, shape):
    n = pts.shape[-1]
    X = [pts[..., i] for i in range(n)]
    e = expr_fn(X)
    return np.asarray(_broadcast_nested(e, pts.shape[:-1], shape))


def _broadcast_nested(e, batch, shape):
    if len(shape) == 0:
        return np.broadcast_to(np.asarray(e, dtype=float), batch)
    return np.stack([_broadcast_nested(s, batch, shape[1:]) for s in e], axis=len(batch))


class JetField:
    """A tensor-valued function of the coordinates with partials up to order 3.

    ``expr_fn`` maps the list of coordinate functions to a nested list of
    entries of the given ``shape``. With ``jets="analytic"`` it is evaluated on
    :class:`Jet` coordinates; with ``jets="fd"`` only values are computed and
    the partials come from Richardson-extrapolated order-4 central stencils.
    """

    shape: tuple = ()

    def __init__(self, n: int, expr_fn, *, jets: str = "analytic", step: float = 1e-3,
                 name: str = "", max_order: int = 3):
        if jets not in ("analytic", "fd"):
            raise ValueError(f"unknown jet mode {jets!r}")
        self.n = n
        self.expr_fn = expr_fn
        self.jet_mode = jets
        self.step = step
        self.name = name
        self.max_order = max_order
        self.last_fd_gap = 0.0

    def values(self, x):
        x = np.asarray(x, dtype=float)
        return _eval_plain(self.expr_fn, x, self.shape)

    def jets(self, x, order: int = 2):
        """``[val, d1, ..., d_order]`` at points ``x`` of shape (..., n)."""
        if order > self.max_order:
            raise JetOrderError(f"{self.name or type(self).__name__} supports order <= {self.max_order}")
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"points must have last axis {self.n}")
        if self.jet_mode == "fd" and order > 0:
            out, gap = fd_derivatives_richardson(self.values, x, order, self.step)
            self.last_fd_gap = gap
            return out
        if order == 0:
            return [_eval_plain(self.expr_fn, x, self.shape)]
        X = Jet.coordinates(x, order)
        return _assemble(self.expr_fn(X), self.shape, x.shape[:-1], self.n, order)

    def with_jets(self, jets: str, step: float | None = None):
        out = object.__new__(type(self))
        out.__dict__.update(self.__dict__)
        out.jet_mode = jets
        if step is not None:
            out.step = step
        return out


class ScalarField(JetField):
    shape = ()


class OneFormField(JetField):
    def __init__(self, n, expr_fn, **kw):
        super().__init__(n, expr_fn, **kw)
        self.shape = (n,)


class SymTensorField(JetField):
    """Symmetric (0,2) tensor field; ``expr_fn`` returns an n x n nested list."""

    def __init__(self, n, expr_fn, **kw):
        super().__init__(n, expr_fn, **kw)
        self.shape = (n, n)

    def jets(self, x, order: int = 2):
        out = super().jets(x, order)
        v = out[0]
        if np.max(np.abs(v - np.swapaxes(v, -1, -2)), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(v))):
            raise ValueError(f"field {self.name} is not symmetric")
        return out

    def scaled(self, c: float) -> "SymTensorField":
        return _LinearCombination([(c, self)])

    def __add__(self, other):
        return _LinearCombination([(1.0, self), (1.0, other)])

    def __rmul__(self, c):
        return self.scaled(c)


class _LinearCombination(SymTensorField):
    def __init__(self, terms):
        f0 = terms[0][1]
        super().__init__(f0.n, None, jets=f0.jet_mode, step=f0.step, name="combination")
        self.terms = terms

    def values(self, x):
        return sum(c * f.values(x) for c, f in self.terms)

    def jets(self, x, order: int = 2):
        parts = [f.jets(x, order) for _, f in self.terms]
        return [sum(c * p[k] for (c, _), p in zip(self.terms, parts)) for k in range(order + 1)]


class MetricChart(SymTensorField):
    """A coordinate patch carrying a Riemannian metric.

    ``domain`` is a pair of arrays (low, high); ``periodic`` flags axes that
    wrap (the box is then a fundamental domain of a torus factor).
    """

    def __init__(self, n, expr_fn, *, domain=None, periodic=None, params=None, **kw):
        super().__init__(n, expr_fn, **kw)
        if domain is None:
            domain = (np.full(n, -np.inf), np.full(n, np.inf))
        self.domain = (np.asarray(domain[0], dtype=float), np.asarray(domain[1], dtype=float))
        self.periodic = np.zeros(n, bool) if periodic is None else np.asarray(periodic, bool)
        self.params = dict(params or {})

    def check_points(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        inside = (x >= lo) & (x <= hi) | self.periodic
        if not np.all(inside):
            raise DomainError(f"points outside the domain of chart {self.name!r}")
        return x

    def jets(self, x, order: int = 2):
        x = self.check_points(x)
        out = super().jets(x, order)
        try:
            np.linalg.cholesky(out[0])
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(f"metric of {self.name!r} not positive definite at a queried point") from exc
        return out

    def perturbed(self, h: SymTensorField, t: float) -> "MetricChart":
        """The chart with metric g + t h (same domain)."""
        return _PerturbedChart(self, h, t)


class _PerturbedChart(MetricChart):
    def __init__(self, base: MetricChart, h: SymTensorField, t: float):
        super().__init__(base.n, None, domain=base.domain, periodic=base.periodic,
                         params=base.params, jets=base.jet_mode, step=base.step,
                         name=f"{base.name}+{t:g}h", max_order=min(base.max_order, h.max_order))
        self.base, self.h, self.t = base, h, t

    def values(self, x):
        return self.base.values(x) + self.t * self.h.values(x)

    def jets(self, x, order: int = 2):
        x = self.check_points(x)
        a = self.base.jets(x, order)
        b = self.h.jets(x, order)
        out = [ak + self.t * bk for ak, bk in zip(a, b)]
        try:
            np.linalg.cholesky(out[0])
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("perturbed metric left the positive cone") from exc
        return out


# ---------------------------------------------------------------------------
# pointwise curvature from jets (complex-safe)

_PAIR_CACHE: dict = {}


def _pairs(n):
    if n not in _PAIR_CACHE:
        _PAIR_CACHE[n] = np.array(_enumerate(n, 2), dtype=np.intp).reshape(-1, 2)
    return _PAIR_CACHE[n]


def christoffel_from_jets(g, dg, d2g=None):
    """Gamma^k_ij and (if d2g is given) its partials, from metric jets."""
    n = g.shape[-1]
    B = g.shape[:-2]
    ginv = np.linalg.inv(g)
    # lowered symbol G[l,i,j] = (d_i g_jl + d_j g_il - d_l g_ij)/2
    Gl = 0.5 * (np.einsum("...jli->...lij", dg) + np.einsum("...ilj->...lij", dg)
                - np.einsum("...ijl->...lij", dg))
    # contractions as batched matmuls over flattened trailing axes
    Gamma = (ginv @ Gl.reshape(B + (n, n * n))).reshape(B + (n, n, n))
    if d2g is None:
        return Gamma, None
    dGl = 0.5 * (np.einsum("...jlia->...lija", d2g) + np.einsum("...ilja->...lija", d2g)
                 - np.einsum("...ijla->...lija", d2g))
    dgA = np.moveaxis(dg, -1, -3)  # [..., a, p, q]
    gi = ginv[..., None, :, :]
    dginvA = -(gi @ dgA @ gi)  # [..., a, k, l]
    t1 = dginvA @ Gl[..., None, :, :, :].reshape(B + (1, n, n * n))  # [..., a, k, ij]
    t1 = np.moveaxis(t1.reshape(B + (n, n, n, n)), -4, -1)
    t2 = (ginv @ dGl.reshape(B + (n, n ** 3))).reshape(B + (n, n, n, n))
    return Gamma, t1 + t2


def riemann_from_christoffel(g, Gamma, dGamma):
    """All-lower curvature tensor Rm_abcd from the connection and its partials."""
    # R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb
    n = g.shape[-1]
    B = g.shape[:-2]
    t = np.einsum("...adbc->...abcd", dGamma)
    # q[a,c,d,b] = Gamma^a_ce Gamma^e_db
    q = (Gamma.reshape(B + (n * n, n)) @ Gamma.reshape(B + (n, n * n))).reshape(B + (n,) * 4)
    q = np.einsum("...acdb->...abcd", q)
    Rup = t - np.swapaxes(t, -1, -2) + q - np.swapaxes(q, -1, -2)
    return (g @ Rup.reshape(B + (n, n ** 3))).reshape(B + (n,) * 4)


def rm_to_form(Rm) -> DoubleForm:
    n = Rm.shape[-1]
    p = _pairs(n)
    c = Rm[..., p[:, 0][:, None], p[:, 1][:, None], p[:, 0][None, :], p[:, 1][None, :]]
    return DoubleForm(n, 2, 2, c)


def form_to_rm(R: DoubleForm):
    """Full antisymmetric 4-index table of a (2,2) form."""
    n = R.n
    p = _pairs(n)
    out = np.zeros(R.batch_shape + (n, n, n, n), dtype=R.coeffs.dtype)
    a, b = p[:, 0], p[:, 1]
    c = R.coeffs
    for (x, y, sx) in ((a, b, 1), (b, a, -1)):
        for (z, w, sz) in ((a, b, 1), (b, a, -1)):
            out[..., x[:, None], y[:, None], z[None, :], w[None, :]] = (sx * sz) * c
    return out


@dataclass
class CurvatureBundle:
    x: np.ndarray
    metric: MetricAtPoint
    Gamma: np.ndarray
    dGamma: np.ndarray
    Rm: np.ndarray
    jets: list = field(repr=False, default_factory=list)

    @cached_property
    def R(self) -> DoubleForm:
        return rm_to_form(self.Rm)

    @cached_property
    def Ric(self) -> DoubleForm:
        return contract(self.R, self.metric)

    @property
    def ric(self) -> np.ndarray:
        return self.Ric.coeffs

    @cached_property
    def kappa(self):
        return contract(self.Ric, self.metric).coeffs[..., 0, 0]

    @property
    def g(self):
        return self.metric.g

    @property
    def g_inv(self):
        return self.metric.g_inv

    @property
    def n(self):
        return self.metric.n


def bundle_from_jets(x, g, dg, d2g, check=True, extra=None) -> CurvatureBundle:
    m = MetricAtPoint(g, check=check)
    Gamma, dGamma = christoffel_from_jets(g, dg, d2g)
    Rm = riemann_from_christoffel(g, Gamma, dGamma)
    return CurvatureBundle(x=x, metric=m, Gamma=Gamma, dGamma=dGamma, Rm=Rm,
                           jets=[g, dg, d2g] + (extra or []))


def christoffel(chart: MetricChart, x):
    """(Gamma, dGamma) at points x."""
    g, dg, d2g = chart.jets(x, 2)
    return christoffel_from_jets(g, dg, d2g)


def riemann(chart: MetricChart, x, order: int = 2) -> CurvatureBundle:
    j = chart.jets(x, order)
    return bundle_from_jets(np.asarray(x), j[0], j[1], j[2], extra=j[3:])


def ricci_scalar(bundle: CurvatureBundle):
    return bundle.Ric, bundle.kappa


def metric_compatibility(chart: MetricChart, x):
    """max |nabla g| at x: d_a g_bc - Gamma^e_ab g_ec - Gamma^e_ac g_be."""
    g, dg, d2g = chart.jets(x, 2)
    Gamma, _ = christoffel_from_jets(g, dg)
    t = np.einsum("...bca->...abc", dg)
    t = t - np.einsum("...eab,...ec->...abc", Gamma, g) - np.einsum("...eac,...be->...abc", Gamma, g)
    return float(np.max(np.abs(t)))


def first_bianchi(bundle: CurvatureBundle) -> float:
    """Relative size of the cyclic sum Rm_abcd + Rm_acdb + Rm_adbc."""
    Rm = bundle.Rm
    cyc = Rm + np.einsum("...acdb->...abcd", Rm) + np.einsum("...adbc->...abcd", Rm)
    return float(np.max(np.abs(cyc)) / max(1.0, np.max(np.abs(Rm))))


def pair_symmetry(bundle: CurvatureBundle) -> float:
    c = bundle.R.coeffs
    return float(np.max(np.abs(c - np.swapaxes(c, -1, -2))) / max(1.0, np.max(np.abs(c))))


def complex_step_gradient(fn, jets, eps: float = 1e-20):
    """Partials along the chart of a pointwise function of metric jets.

    ``fn(g, dg, d2g)`` must be analytic in its inputs; ``jets`` supplies
    ``[g, dg, d2g, d3g]``. Returns ``d_a fn`` with the derivative axis last.
    """
    g, dg, d2g, d3g = jets[:4]
    # move a new axis for the direction a in front of the tensor axes
    gz = g[..., None, :, :] + 1j * eps * np.moveaxis(dg, -1, -3)
    dgz = dg[..., None, :, :, :] + 1j * eps * np.moveaxis(d2g, -1, -4)
    d2gz = d2g[..., None, :, :, :, :] + 1j * eps * np.moveaxis(d3g, -1, -5)
    out = np.asarray(fn(gz, dgz, d2gz))
    base_nd = g.ndim - 2
    d = out.imag / eps
    # derivative axis sits right after the batch axes
    return np.moveaxis(d, base_nd, -1)


# ---------------------------------------------------------------------------
# covariant calculus on symmetric 2-tensors


class SymTensorCalculus:
    """Covariant derivatives of one symmetric 2-tensor at a batch of points.

    Built from a curvature bundle and the jets ``[h, dh, d2h]`` of the field.
    """

    def __init__(self, bundle: CurvatureBundle, hj):
        self.b = bundle
        self.h = hj[0]
        self.dh = hj[1] if len(hj) > 1 else None
        self.d2h = hj[2] if len(hj) > 2 else None

    @cached_property
    def nabla(self):
        """T[a,b,c] = (nabla_a h)_bc."""
        if self.dh is None:
            raise JetOrderError("first partials of h needed")
        G, h = self.b.Gamma, self.h
        t = np.einsum("...bca->...abc", self.dh)
        return t - np.einsum("...eab,...ec->...abc", G, h) - np.einsum("...eac,...be->...abc", G, h)

    @cached_property
    def hessian(self):
        """H[l,i,j,k] = (nabla^2_{l,i} h)_jk."""
        if self.d2h is None:
            raise JetOrderError("second partials of h needed")
        G, dG, h, dh = self.b.Gamma, self.b.dGamma, self.h, self.dh
        d2 = np.einsum("...jkil->...lijk", self.d2h)
        # d_l (nabla_i h_jk)
        dT = (d2
              - np.einsum("...eijl,...ek->...lijk", dG, h) - np.einsum("...eij,...ekl->...lijk", G, dh)
              - np.einsum("...eikl,...je->...lijk", dG, h) - np.einsum("...eik,...jel->...lijk", G, dh))
        T = self.nabla
        return (dT - np.einsum("...eli,...ejk->...lijk", G, T)
                - np.einsum("...elj,...iek->...lijk", G, T) - np.einsum("...elk,...ije->...lijk", G, T))

    @property
    def ginv(self):
        return self.b.g_inv

    @cached_property
    def trace(self):
        return np.einsum("...ij,...ij->...", self.ginv, self.h)

    @cached_property
    def d_trace(self):
        return np.einsum("...ij,...aij->...a", self.ginv, self.nabla)

    @cached_property
    def hess_trace(self):
        """nabla^2 tr h as a symmetric matrix."""
        return np.einsum("...ij,...abij->...ab", self.ginv, self.hessian)

    @cached_property
    def laplacian_trace(self):
        return -np.einsum("...ab,...ab->...", self.ginv, self.hess_trace)

    @cached_property
    def delta(self):
        """(delta h)_j = -g^ik nabla_i h_kj."""
        return -np.einsum("...ik,...ikj->...j", self.ginv, self.nabla)

    @cached_property
    def nabla_delta(self):
        """(nabla_a delta h)_b."""
        return -np.einsum("...ij,...aijb->...ab", self.ginv, self.hessian)

    @cached_property
    def delta_delta(self):
        return -np.einsum("...ab,...ab->...", self.ginv, self.nabla_delta)

    @cached_property
    def bochner(self):
        return -np.einsum("...ij,...ijab->...ab", self.ginv, self.hessian)

    def delta_star_delta(self):
        s = self.nabla_delta
        return 0.5 * (s + np.swapaxes(s, -1, -2))

    def bianchi(self, k: int = 1):
        """delta h + (1/(2k)) d tr h; k=1 is the ordinary Bianchi operator."""
        return self.delta + self.d_trace / (2 * k)

    def nabla_bianchi(self, k: int = 1):
        return self.nabla_delta + self.hess_trace / (2 * k)

    def delta_star_bianchi(self, k: int = 1):
        s = self.nabla_bianchi(k)
        return 0.5 * (s + np.swapaxes(s, -1, -2))

    def rcc(self):
        return rcc_action(self.b, self.h)

    def lichnerowicz(self):
        ric = self.b.ric
        return (self.bochner + compose(ric, self.h, self.ginv) + compose(self.h, ric, self.ginv)
                - 2 * self.rcc())

    def s2_star_s2(self):
        H = self.hessian
        t = H + np.einsum("...ixjy->...ijxy", H) + np.einsum("...iyxj->...ijxy", H)
        return -np.einsum("...ij,...ijxy->...xy", self.ginv, t)

    def s1_s1_star(self):
        return 2 * self.delta_star_delta()


def rcc_action(bundle: CurvatureBundle, h):
    """(Rcc h)_ab = Rm_acbd h^cd with indices raised by g."""
    hup = np.einsum("...ci,...ij,...dj->...cd", bundle.g_inv, h, bundle.g_inv)
    return np.einsum("...acbd,...cd->...ab", bundle.Rm, hup)


def compose(h, k, g_inv):
    """(h o k)_ab = h_ac g^cd k_db."""
    return np.einsum("...ac,...cd,...db->...ab", h, g_inv, k)


def _calc(field_: SymTensorField, chart: MetricChart, x, bundle=None, order: int = 2):
    b = bundle if bundle is not None else riemann(chart, x)
    return SymTensorCalculus(b, field_.jets(x, order))


def covariant_derivative(field_, chart, x, bundle=None):
    return _calc(field_, chart, x, bundle, 1).nabla


def covariant_hessian(field_, chart, x, bundle=None):
    return _calc(field_, chart, x, bundle).hessian


def divergence(field_, chart, x, bundle=None):
    return _calc(field_, chart, x, bundle, 1).delta


def bochner_laplacian(field_, chart, x, bundle=None):
    return _calc(field_, chart, x, bundle).bochner


def lichnerowicz_laplacian(field_, chart, x, bundle=None):
    return _calc(field_, chart, x, bundle).lichnerowicz()


def bianchi_operator(field_, chart, x, k: int = 1, bundle=None):
    return _calc(field_, chart, x, bundle, 1).bianchi(k)


def s_operators(field_, chart, x, bundle=None):
    """(S2* S2 h, S1 S1* h, S1* h) at x."""
    c = _calc(field_, chart, x, bundle)
    return c.s2_star_s2(), c.s1_s1_star(), c.delta


def one_form_nabla(omega: OneFormField, chart, x, bundle=None):
    b = bundle if bundle is not None else riemann(chart, x)
    w, dw = omega.jets(x, 1)
    return np.einsum("...ji->...ij", dw) - np.einsum("...kij,...k->...ij", b.Gamma, w)


def delta_star(omega: OneFormField, chart, x, bundle=None):
    """(delta* w)_ij = (nabla_i w_j + nabla_j w_i)/2."""
    t = one_form_nabla(omega, chart, x, bundle)
    return 0.5 * (t + np.swapaxes(t, -1, -2))


def one_form_divergence(omega: OneFormField, chart, x, bundle=None):
    b = bundle if bundle is not None else riemann(chart, x)
    return -np.einsum("...ij,...ij->...", b.g_inv, one_form_nabla(omega, chart, x, b))


def scalar_hessian(f: ScalarField, chart, x, bundle=None):
    b = bundle if bundle is not None else riemann(chart, x)
    v, d1, d2 = f.jets(x, 2)
    return d2 - np.einsum("...kij,...k->...ij", b.Gamma, d1)


def scalar_laplacian(f: ScalarField, chart, x, bundle=None):
    """Positive Laplacian Delta f = -g^ij (nabla^2 f)_ij."""
    b = bundle if bundle is not None else riemann(chart, x)
    return -np.einsum("...ij,...ij->...", b.g_inv, scalar_hessian(f, chart, x, b))


def tensor_divergence(T, dT, bundle: CurvatureBundle):
    """Divergence of a (not necessarily symmetric) 2-tensor from its partials.

    ``dT[..., k, j, a] = d_a T_kj``; returns -g^ik nabla_i T_kj.
    """
    G = bundle.Gamma
    nab = (np.einsum("...kji->...ikj", dT) - np.einsum("...eik,...ej->...ikj", G, T)
           - np.einsum("...eij,...ke->...ikj", G, T))
    return -np.einsum("...ik,...ikj->...j", bundle.g_inv, nab)
