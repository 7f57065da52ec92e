"""Catalog of model metrics and test fields.

Every builder returns a :class:`~curvkit.chart.MetricChart` (or a field)
whose expression is written once with the jet-aware helpers from
:mod:`curvkit.jets`, so the same code yields analytic jets or plain values
for the finite-difference path. Random constructions take a seed and use a
counter-based generator, so they are reproducible from the recorded seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from . import jets as J
from .chart import MetricChart, OneFormField, ScalarField, SymTensorField


class ModelError(ValueError):
    """Invalid model parameters (style mismatch, dimension, horizon, SPD)."""


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _diag(n, entry, off=0.0):
    return [[entry if i == j else off for j in range(n)] for i in range(n)]


def _sq_norm(X):
    out = X[0] * X[0]
    for c in X[1:]:
        out = out + c * c
    return out


# ---------------------------------------------------------------------------
# constant curvature


def space_form(n: int, mu: float = 1.0, chart_style: str | None = None, *, jets: str = "analytic",
               step: float = 1e-3) -> MetricChart:
    """Constant curvature mu: g = 4|dx|^2 / (1 + mu |x|^2)^2 (flat when mu = 0)."""
    if chart_style is None:
        chart_style = "stereographic" if mu > 0 else "poincare_ball" if mu < 0 else "euclidean"
    want = {"stereographic": mu > 0, "poincare_ball": mu < 0, "euclidean": mu == 0}
    if chart_style not in want:
        raise ModelError(f"unknown chart style {chart_style!r}")
    if not want[chart_style]:
        raise ModelError(f"chart style {chart_style} does not match mu={mu}")
    if chart_style == "euclidean":
        return MetricChart(n, lambda X: _diag(n, 1.0), jets=jets, step=step, name=f"flat{n}",
                           params={"n": n, "mu": 0.0})

    def expr(X):
        return _diag(n, 4.0 * J.power(1.0 + mu * _sq_norm(X), -2.0))

    # a box inside the ball of radius 1/sqrt|mu| (and away from the far pole for mu > 0)
    a = 0.9 / np.sqrt(n * abs(mu))
    name = f"sphere{n}" if mu > 0 else f"hyperbolic{n}"
    return MetricChart(n, expr, domain=(-a * np.ones(n), a * np.ones(n)), jets=jets, step=step,
                       name=name, params={"n": n, "mu": mu})


def flat_torus(n: int, **kw) -> MetricChart:
    c = space_form(n, 0.0, "euclidean", **kw)
    c.domain = (np.zeros(n), 2 * np.pi * np.ones(n))
    c.periodic = np.ones(n, bool)
    c.name = f"flat-torus{n}"
    return c


def sample_points(chart: MetricChart, count: int = 10, seed: int = 0) -> np.ndarray:
    """Fixed interior sample points: a seeded draw from the middle of the domain box."""
    lo, hi = chart.domain
    lo = np.where(np.isfinite(lo), lo, -1.0)
    hi = np.where(np.isfinite(hi), hi, 1.0)
    u = make_rng(seed).uniform(0.1, 0.9, size=(count, chart.n))
    return lo + u * (hi - lo)


# ---------------------------------------------------------------------------
# products, warped and conformal metrics


def product_with_torus(base: MetricChart, m_torus: int) -> MetricChart:
    """Riemannian product of ``base`` with a flat m-torus (block-diagonal metric)."""
    r = base.n
    n = r + m_torus
    if m_torus < 0:
        raise ModelError("torus dimension must be non-negative")

    def expr(X):
        gb = base.expr_fn(X[:r])
        out = [[0.0] * n for _ in range(n)]
        for i in range(r):
            for j in range(r):
                out[i][j] = gb[i][j]
        for i in range(r, n):
            out[i][i] = 1.0
        return out

    lo = np.concatenate([base.domain[0], np.zeros(m_torus)])
    hi = np.concatenate([base.domain[1], 2 * np.pi * np.ones(m_torus)])
    per = np.concatenate([base.periodic, np.ones(m_torus, bool)])
    return MetricChart(n, expr, domain=(lo, hi), periodic=per, jets=base.jet_mode, step=base.step,
                       name=f"{base.name}xT{m_torus}", params={**base.params, "base_dim": r, "torus_dim": m_torus})


def lovelock_slice(n: int, k: int, eps: float, mass: float, r_window=None, *, jets: str = "analytic",
                   step: float = 1e-3, profile: str = "standard") -> MetricChart:
    """Spatial slice F(r)^-1 dr^2 + r^2 dTheta^2 of the Lovelock black hole.

    Coordinates (r, y_1..y_{n-1}) with the round sphere factor in a
    stereographic chart. The standard profile is
    F(r) = 1 + eps r^2 - 2 mass r^(2 - n/k).

    With ``profile="pure"`` the profile is instead
    F(r) = 1 + eps r^2 (1 + 2 mass r^-n)^(1/k) for eps != 0 (and the standard
    one for eps = 0). Writing F = 1 - r^2 psi, the 2k-Gauss-Bonnet curvature of
    the slice is proportional to (r^n psi^k)' / r^(n-1), which is constant
    exactly when psi^k = c + c' r^-n; the pure profile has that form while the
    standard one only does when eps = 0 or mass = 0.
    """
    if eps not in (-1, 0, 1):
        raise ModelError("eps must be -1, 0 or 1")
    if profile not in ("standard", "pure"):
        raise ModelError(f"unknown profile {profile!r}")
    if r_window is None:
        r_window = (1.2, 3.0) if eps >= 0 else (0.3, 0.7)
    r0, r1 = r_window
    rs = np.linspace(r0, r1, 401)
    if np.any(_lovelock_F(rs, eps, mass, n, k, profile) <= 0):
        raise ModelError(f"F(r) <= 0 inside [{r0}, {r1}] (horizon crossing)")
    p = 2.0 - n / k
    pure = profile == "pure" and eps != 0

    def expr(X):
        r, Y = X[0], X[1:]
        if pure:
            F = 1.0 + eps * r * r * J.power(1.0 + 2.0 * mass * J.power(r, -float(n)), 1.0 / k)
        else:
            F = 1.0 + eps * r * r - 2.0 * mass * J.power(r, p)
        grr = 1.0 / F
        w = r * r * 4.0 * J.power(1.0 + _sq_norm(Y), -2.0)
        out = [[0.0] * n for _ in range(n)]
        out[0][0] = grr
        for i in range(1, n):
            out[i][i] = w
        return out

    a = 0.5
    lo = np.array([r0] + [-a] * (n - 1))
    hi = np.array([r1] + [a] * (n - 1))
    return MetricChart(n, expr, domain=(lo, hi), jets=jets, step=step, name=f"lovelock{n},{k}",
                       params={"n": n, "k": k, "eps": eps, "mass": mass, "profile": profile})


def _lovelock_F(r, eps, mass, n, k, profile="standard"):
    if profile == "pure" and eps != 0:
        return 1.0 + eps * r * r * (1.0 + 2.0 * mass * r ** (-float(n))) ** (1.0 / k)
    return 1.0 + eps * r * r - 2.0 * mass * r ** (2.0 - n / k)


def radial_points(chart: MetricChart, count: int = 9, y=None) -> np.ndarray:
    """Points along the radial window at a fixed sphere coordinate."""
    lo, hi = chart.domain
    rs = np.linspace(lo[0], hi[0], count)
    y = np.full(chart.n - 1, 0.1) if y is None else np.asarray(y, float)
    return np.column_stack([rs, np.tile(y, (count, 1))])


@dataclass(frozen=True)
class TrigSpec:
    """Sum of cosine modes: sum_m amp_m cos(q_m . x + phase_m)."""

    amps: tuple
    waves: tuple
    phases: tuple

    def expr(self, X):
        out = 0.0
        for a, q, ph in zip(self.amps, self.waves, self.phases):
            arg = ph
            for qi, xi in zip(q, X):
                if qi:
                    arg = arg + qi * xi
            out = out + a * J.cos(arg)
        return out


def random_trig(n: int, seed: int, amplitude: float = 0.3, modes: int = 3, max_wave: int = 1) -> TrigSpec:
    rng = make_rng(seed)
    waves = []
    while len(waves) < modes:
        q = tuple(int(v) for v in rng.integers(-max_wave, max_wave + 1, size=n))
        if any(q):
            waves.append(q)
    amps = rng.standard_normal(modes)
    amps = amplitude * amps / np.sum(np.abs(amps))
    phases = rng.uniform(0, 2 * np.pi, size=modes)
    return TrigSpec(tuple(float(a) for a in amps), tuple(waves), tuple(float(p) for p in phases))


def conformally_flat(n: int, f_spec: TrigSpec | None = None, *, seed: int | None = None,
                     amplitude: float = 0.3, jets: str = "analytic", step: float = 1e-3) -> MetricChart:
    """e^{2f} times the flat metric, f a trigonometric polynomial (periodic)."""
    if f_spec is None:
        if seed is None:
            f_spec = TrigSpec((amplitude,), (tuple([1] + [0] * (n - 1)),), (-np.pi / 2,))  # amplitude*sin(x0)
        else:
            f_spec = random_trig(n, seed, amplitude)

    def expr(X):
        return _diag(n, J.exp(2.0 * f_spec.expr(X)))

    return MetricChart(n, expr, domain=(np.zeros(n), 2 * np.pi * np.ones(n)), periodic=np.ones(n, bool),
                       jets=jets, step=step, name=f"conformal{n}", params={"n": n, "seed": seed})


def random_sym_trig_field(n: int, seed: int, amplitude: float = 1.0, modes: int = 3,
                          max_wave: int = 1, name: str = "h", jets: str = "analytic") -> SymTensorField:
    """Periodic symmetric field sum_m c_m cos(q_m . x + phase_m) with sum_m ||c_m||_2 = amplitude."""
    rng = make_rng(seed)
    waves, coefs = [], []
    while len(waves) < modes:
        q = tuple(int(v) for v in rng.integers(-max_wave, max_wave + 1, size=n))
        if any(q):
            waves.append(q)
            c = rng.standard_normal((n, n))
            coefs.append(0.5 * (c + c.T))
    total = sum(np.linalg.norm(c, 2) for c in coefs)
    coefs = [amplitude * c / total for c in coefs]
    phases = rng.uniform(0, 2 * np.pi, size=modes)
    return _wave_field(n, coefs, waves, phases, name, jets)


def _wave_field(n, coefs, waves, phases, name, jets, weight=None):
    coefs = [np.asarray(c, float) for c in coefs]

    def expr(X):
        cosines = []
        for q, ph in zip(waves, phases):
            arg = float(ph)
            for qi, xi in zip(q, X):
                if qi:
                    arg = arg + float(qi) * xi
            cosines.append(J.cos(arg))
        w = weight(X) if weight is not None else 1.0
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                e = 0.0
                for c, cs in zip(coefs, cosines):
                    if c[i, j] != 0.0:
                        e = e + c[i, j] * cs
                e = w * e
                out[i][j] = out[j][i] = e
        return out

    return SymTensorField(n, expr, name=name, jets=jets)


def overlap_field(n: int, torus_seed: int = 42, seed: int = 7, amplitude: float = 0.5, modes: int = 3,
                  max_wave: int = 1, name: str = "h", jets: str = "analytic") -> SymTensorField:
    """Periodic test direction sharing the Fourier modes of ``perturbed_torus(n, torus_seed)``.

    Adds a constant mode and the sums of pairs of torus modes, so that the
    pairing with curvature quantities of the torus (linear or quadratic in
    its perturbation) does not vanish by orthogonality of modes.
    """
    rng = make_rng(torus_seed)
    base = []
    while len(base) < modes:
        q = tuple(int(v) for v in rng.integers(-max_wave, max_wave + 1, size=n))
        if any(q):
            base.append(q)
            rng.standard_normal((n, n))
    waves = [tuple([0] * n)] + base
    waves += [tuple(a + b for a, b in zip(p, q)) for i, p in enumerate(base) for q in base[i + 1:]]
    waves = [w for i, w in enumerate(waves) if w not in waves[:i]]
    rng2 = make_rng(seed)
    coefs = []
    for _ in waves:
        c = rng2.standard_normal((n, n))
        coefs.append(0.5 * (c + c.T))
    total = sum(np.linalg.norm(c, 2) for c in coefs)
    coefs = [amplitude * c / total for c in coefs]
    phases = rng2.uniform(0, 2 * np.pi, size=len(waves))
    return _wave_field(n, coefs, waves, phases, name, jets)


def perturbed_torus(n: int, seed: int = 42, amplitude: float = 0.05, *, modes: int = 3,
                    jets: str = "analytic", step: float = 1e-3) -> MetricChart:
    """Flat metric plus amplitude times a periodic trigonometric symmetric field."""
    if not 0 < amplitude < 1:
        raise ModelError("amplitude must lie in (0, 1) to keep the metric positive definite")
    h = random_sym_trig_field(n, seed, amplitude, modes)

    def expr(X):
        e = h.expr_fn(X)
        return [[(1.0 if i == j else 0.0) + e[i][j] for j in range(n)] for i in range(n)]

    return MetricChart(n, expr, domain=(np.zeros(n), 2 * np.pi * np.ones(n)), periodic=np.ones(n, bool),
                       jets=jets, step=step, name=f"perturbed-torus{n}",
                       params={"n": n, "seed": seed, "amplitude": amplitude})


# ---------------------------------------------------------------------------
# test fields on charts


def transverse_traceless_field(chart: MetricChart, seed: int, modes: int = 2, amplitude: float = 1.0,
                               max_wave: int = 1) -> SymTensorField:
    """Trace-free, divergence-free symmetric field on a conformally flat chart.

    For g = e^{2 phi} dx^2 the field e^{(2-n) phi} h0 is transverse-traceless
    whenever h0 is so for the flat metric. h0 is a sum of plane waves
    e cos(q.x + phase) with e q = 0 and tr e = 0. The chart must be one of the
    conformal models of this module (space forms or ``conformally_flat``).
    """
    n = chart.n
    rng = make_rng(seed)
    waves, coefs = [], []
    while len(waves) < modes:
        q = rng.integers(-max_wave, max_wave + 1, size=n)
        if not q.any():
            continue
        P = np.eye(n) - np.outer(q, q) / float(q @ q)
        M = rng.standard_normal((n, n))
        M = 0.5 * (M + M.T)
        e = P @ M @ P
        e = e - np.trace(e) / (n - 1) * P
        waves.append(tuple(int(v) for v in q))
        coefs.append(e)
    total = sum(np.linalg.norm(c, 2) for c in coefs)
    coefs = [amplitude * c / total for c in coefs]
    phases = rng.uniform(0, 2 * np.pi, size=modes)

    def weight(X):
        g00 = chart.expr_fn(X)[0][0]   # e^{2 phi}
        return J.power(g00, (2.0 - n) / 2.0)

    return _wave_field(n, coefs, waves, phases, f"tt{seed}", chart.jet_mode, weight)


def metric_as_field(chart: MetricChart) -> SymTensorField:
    return SymTensorField(chart.n, chart.expr_fn, name=f"g[{chart.name}]", jets=chart.jet_mode, step=chart.step)


def scalar_times_metric(f: ScalarField, chart: MetricChart) -> SymTensorField:
    n = chart.n

    def expr(X):
        fx = f.expr_fn(X)
        g = chart.expr_fn(X)
        return [[fx * g[i][j] if not (isinstance(g[i][j], float) and g[i][j] == 0.0) else 0.0
                 for j in range(n)] for i in range(n)]

    return SymTensorField(n, expr, name=f"{f.name}*g", jets=chart.jet_mode, step=chart.step)


def trig_scalar(n: int, seed: int, amplitude: float = 1.0, modes: int = 3, name: str = "f") -> ScalarField:
    spec = random_trig(n, seed, amplitude, modes)
    return ScalarField(n, spec.expr, name=name)


def killing_one_form(chart: MetricChart, i: int = 0, j: int = 1) -> OneFormField:
    """Metric dual of the rotation generator x_i d_j - x_j d_i (Killing on radial conformal charts)."""
    n = chart.n

    def expr(X):
        g = chart.expr_fn(X)
        V = [0.0] * n
        V[j] = X[i]
        V[i] = -1.0 * X[j]
        return [sum_terms(g[a][b] * V[b] for b in range(n) if not _is_zero(V[b])) for a in range(n)]

    return OneFormField(n, expr, name=f"killing{i}{j}", jets=chart.jet_mode)


def gradient_one_form(f: ScalarField) -> OneFormField:
    """df for a trigonometric scalar built by :func:`trig_scalar` (analytic jets)."""
    n = f.n

    def expr(X):
        from .jets import Jet

        v = f.expr_fn(X)
        if isinstance(v, Jet):
            return [Jet(v.d1[..., a], None if v.d2 is None else v.d2[..., a, :],
                        None if v.d3 is None else v.d3[..., a, :, :]) for a in range(n)]
        raise TypeError("gradient_one_form needs jet evaluation")

    return OneFormField(n, expr, name=f"d{f.name}", max_order=2)


def sum_terms(it):
    out = 0.0
    for t in it:
        out = out + t
    return out


def _is_zero(v):
    return isinstance(v, float) and v == 0.0


# ---------------------------------------------------------------------------
# hypersurfaces


def ellipsoid_shape(n: int, semi_axes, count: int = 10, seed: int = 0):
    """Shape operators of the ellipsoid sum x_i^2/a_i^2 = 1 in R^{n+1}.

    Returns a list of n x n symmetric matrices, each the second fundamental
    form in an orthonormal basis of the tangent space at a sample point (so
    the induced metric there is the identity).
    """
    a = np.asarray(semi_axes, dtype=float)
    if a.shape != (n + 1,):
        raise ModelError(f"an n-dimensional ellipsoid in R^(n+1) needs {n + 1} semi-axes")
    if np.any(a <= 0):
        raise ModelError("semi-axes must be positive")
    rng = make_rng(seed)
    out = []
    for _ in range(count):
        u = rng.standard_normal(n + 1)
        u /= np.linalg.norm(u)
        p = a * u
        grad = 2 * p / a**2
        nu = grad / np.linalg.norm(grad)
        # tangent basis: orthonormal complement of the normal
        q, _ = np.linalg.qr(np.column_stack([nu, np.eye(n + 1)[:, :n]]))
        T = q[:, 1:n + 1]
        hess = np.diag(2 / a**2)
        out.append(T.T @ hess @ T / np.linalg.norm(grad))
    return out


def random_shape_operators(n: int, count: int, seed: int):
    rng = make_rng(seed)
    out = []
    for _ in range(count):
        c = rng.standard_normal((n, n))
        out.append(0.5 * (c + c.T))
    return out


# ---------------------------------------------------------------------------
# catalog


@dataclass
class ModelSpec:
    name: str
    n: int
    params: dict = field(default_factory=dict)
    periodic: bool = False
    analytic: bool = True


def _build_sphere(n, mu=1.0, **_):
    if mu <= 0:
        raise ModelError("sphere needs mu > 0")
    return space_form(n, mu, "stereographic")


def _build_hyperbolic(n, mu=-1.0, **_):
    mu = -abs(mu)
    return space_form(n, mu, "poincare_ball")


def _build_flat(n, **_):
    return flat_torus(n)


def _build_lovelock(n, k=2, eps=1.0, mass=0.1, profile="standard", **_):
    return lovelock_slice(n, k, int(eps), mass, profile=profile)


def _build_perturbed(n, seed=42, amplitude=0.05, jets="analytic", **_):
    return perturbed_torus(n, seed, amplitude, jets=jets)


def _build_conformal(n, seed=None, amplitude=0.3, **_):
    return conformally_flat(n, seed=seed, amplitude=amplitude)


def _build_product(n, base_dim=2, mu=1.0, **_):
    return product_with_torus(space_form(base_dim, mu, "stereographic"), n - base_dim)


CATALOG = {
    "sphere": _build_sphere,
    "hyperbolic": _build_hyperbolic,
    "flat": _build_flat,
    "lovelock": _build_lovelock,
    "perturbed-torus": _build_perturbed,
    "conformal": _build_conformal,
    "product": _build_product,
}

PERIODIC = {"flat", "perturbed-torus", "conformal"}


def build(name: str, n: int, **params) -> MetricChart:
    """Build a catalog model by name; unknown names raise :class:`ModelError`."""
    if name not in CATALOG:
        raise ModelError(f"unknown model {name!r}; choose from {sorted(CATALOG)}")
    return CATALOG[name](n, **params)

