"""Truncated Taylor jets (value plus partials up to order 3) with arithmetic.

A :class:`Jet` carries ``val`` of some shape S and derivative arrays
``d1``: S+(n,), ``d2``: S+(n,n), ``d3``: S+(n,n,n). Arithmetic propagates
the partials exactly, so model metrics written as closed-form expressions of
coordinate jets get analytic jets for free. Missing orders are ``None``; an
order-0 jet is just a value and the same model code then evaluates plain
arrays (used by the finite-difference jet path).
"""
from __future__ import annotations

import numpy as np


def _e(v, k):
    """Append k trailing singleton axes."""
    return v[(...,) + (None,) * k]


def _sym3(p):
    # p[..., i, j, k] = f_ij g_k  ->  f_ij g_k + f_ik g_j + f_jk g_i
    return p + np.swapaxes(p, -1, -2) + np.moveaxis(p, -1, -3)


class Jet:
    __slots__ = ("val", "d1", "d2", "d3")
    __array_ufunc__ = None  # numpy defers to the reflected operators below

    def __init__(self, val, d1=None, d2=None, d3=None):
        self.val = np.asarray(val)
        self.d1, self.d2, self.d3 = d1, d2, d3

    @property
    def order(self) -> int:
        for k, d in ((3, self.d3), (2, self.d2), (1, self.d1)):
            if d is not None:
                return k
        return 0

    @property
    def shape(self):
        return self.val.shape

    @classmethod
    def constant(cls, val, n: int, order: int) -> "Jet":
        val = np.asarray(val, dtype=float)
        ds = [np.zeros(val.shape + (n,) * k) if k <= order else None for k in (1, 2, 3)]
        return cls(val, *ds)

    @classmethod
    def coordinates(cls, x, order: int) -> list["Jet"]:
        """Coordinate functions x_0..x_{n-1} as jets at points ``x`` (shape (..., n))."""
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        out = []
        for i in range(n):
            v = x[..., i]
            d1 = d2 = d3 = None
            if order >= 1:
                d1 = np.zeros(v.shape + (n,))
                d1[..., i] = 1.0
            if order >= 2:
                d2 = np.zeros(v.shape + (n, n))
            if order >= 3:
                d3 = np.zeros(v.shape + (n, n, n))
            out.append(cls(v, d1, d2, d3))
        return out

    def truncate(self, order: int) -> "Jet":
        ds = [d if k <= order else None for k, d in zip((1, 2, 3), (self.d1, self.d2, self.d3))]
        return Jet(self.val, *ds)

    # -- arithmetic ---------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return Jet(np.asarray(other))

    def _common(self, o):
        # a plain value acts as a constant; otherwise both sides drop to the lower order
        if o.order == 0:
            return self, o
        if self.order == 0:
            return self, o
        k = min(self.order, o.order)
        return self.truncate(k), o.truncate(k)

    def __add__(self, other):
        f, g = self._common(self._lift(other))
        if g.order == 0:
            return Jet(f.val + g.val, f.d1, f.d2, f.d3)
        if f.order == 0:
            return Jet(f.val + g.val, g.d1, g.d2, g.d3)
        return Jet(f.val + g.val, f.d1 + g.d1, _add(f.d2, g.d2), _add(f.d3, g.d3))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, *(None if d is None else -d for d in (self.d1, self.d2, self.d3)))

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        f, g = self._common(self._lift(other))
        val = f.val * g.val
        if g.order == 0 or f.order == 0:
            c, j = (g.val, f) if g.order == 0 else (f.val, g)
            return Jet(val, *(None if d is None else _e(c, k) * d
                              for k, d in zip((1, 2, 3), (j.d1, j.d2, j.d3))))
        d1 = f.d1 * _e(g.val, 1) + _e(f.val, 1) * g.d1
        d2 = d3 = None
        if f.d2 is not None:
            c = f.d1[..., :, None] * g.d1[..., None, :]
            d2 = f.d2 * _e(g.val, 2) + _e(f.val, 2) * g.d2 + c + np.swapaxes(c, -1, -2)
        if f.d3 is not None:
            d3 = (f.d3 * _e(g.val, 3) + _e(f.val, 3) * g.d3
                  + _sym3(f.d2[..., :, :, None] * g.d1[..., None, None, :])
                  + _sym3(g.d2[..., :, :, None] * f.d1[..., None, None, :]))
        return Jet(val, d1, d2, d3)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        return self.power(p)

    def _pairs(self, o):
        return zip((self.d1, self.d2, self.d3), (o.d1, o.d2, o.d3))

    # -- univariate functions ---------------------------------------------
    def apply(self, p0, p1, p2, p3) -> "Jet":
        """Compose with a scalar function given its value and first three derivatives at val."""
        f1, f2, f3 = self.d1, self.d2, self.d3
        d1 = d2 = d3 = None
        if f1 is not None:
            d1 = _e(p1, 1) * f1
        if f2 is not None:
            d2 = _e(p2, 2) * f1[..., :, None] * f1[..., None, :] + _e(p1, 2) * f2
        if f3 is not None:
            t = f1[..., :, None, None] * f1[..., None, :, None] * f1[..., None, None, :]
            d3 = (_e(p3, 3) * t + _e(p2, 3) * _sym3(f2[..., :, :, None] * f1[..., None, None, :])
                  + _e(p1, 3) * f3)
        return Jet(p0, d1, d2, d3)

    def reciprocal(self):
        v = self.val
        return self.apply(1 / v, -1 / v**2, 2 / v**3, -6 / v**4)

    def power(self, p: float):
        v = self.val
        return self.apply(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2),
                          p * (p - 1) * (p - 2) * v ** (p - 3))

    def sqrt(self):
        return self.power(0.5)

    def exp(self):
        e = np.exp(self.val)
        return self.apply(e, e, e, e)

    def log(self):
        v = self.val
        return self.apply(np.log(v), 1 / v, -1 / v**2, 2 / v**3)

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self.apply(s, c, -s, -c)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self.apply(c, -s, -c, s)

    # -- assembly -------------------------------------------------------------
    @staticmethod
    def stack(entries, shape) -> "Jet":
        """Stack scalar jets (flat list, row-major) into a jet with trailing shape ``shape``."""
        n_ord = min(e.order for e in entries)
        ref = max(entries, key=lambda e: e.val.ndim)
        base = ref.val.shape

        def gather(attr, extra):
            arrs = []
            for e in entries:
                a = getattr(e, attr) if attr != "val" else e.val
                arrs.append(np.broadcast_to(a, base + extra))
            arr = np.stack(arrs, axis=len(base))
            return arr.reshape(base + tuple(shape) + extra)

        n = None
        for e in entries:
            if e.d1 is not None:
                n = e.d1.shape[-1]
        val = gather("val", ())
        ds = []
        for k, attr in ((1, "d1"), (2, "d2"), (3, "d3")):
            ds.append(gather(attr, (n,) * k) if k <= n_ord else None)
        return Jet(val, *ds)

    def __getitem__(self, idx):
        # index into the value shape only
        if not isinstance(idx, tuple):
            idx = (idx,)
        pad = lambda k: idx + (slice(None),) * k  # noqa: E731
        ds = [None if d is None else d[pad(k)] for k, d in zip((1, 2, 3), (self.d1, self.d2, self.d3))]
        return Jet(self.val[idx], *ds)

    def derivatives(self):
        return self.val, self.d1, self.d2, self.d3


def _add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def sin(x):
    return x.sin() if isinstance(x, Jet) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Jet) else np.cos(x)


def exp(x):
    return x.exp() if isinstance(x, Jet) else np.exp(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, Jet) else np.sqrt(x)


def log(x):
    return x.log() if isinstance(x, Jet) else np.log(x)


def power(x, p):
    return x.power(p) if isinstance(x, Jet) else np.asarray(x) ** p
