"""Verification suites run by the command line front end.

Each suite takes a :class:`RunConfig` and returns a list of reports. Sample
counts shrink under ``quick``; every tolerance is multiplied by ``tol_scale``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from . import functional as fn
from . import invariants as inv
from . import linearize as lin
from . import models
from .chart import (
    SymTensorCalculus,
    first_bianchi,
    metric_compatibility,
    pair_symmetry,
    riemann,
)
from .dform import (
    commutation_check,
    contract,
    df_product,
    inner_product,
    metric_multiply,
    random_form,
    random_metric,
)
from .report import VerificationReport, digest, relative_residual, timer

SUITES = ("algebra", "curvature", "linearization", "functional", "all")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    suite: str = "all"
    model: str | None = None
    n: list = field(default_factory=list)
    k: list = field(default_factory=list)
    mu: float | None = None
    eps: float | None = None
    mass: float | None = None
    res: int | None = None
    seed: int = 0
    tol_scale: float = 1.0
    quick: bool = False
    out: str | None = None

    def validate(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {SUITES}")
        if self.model is not None and self.model not in models.CATALOG:
            raise ConfigError(f"unknown model {self.model!r}; choose from {sorted(models.CATALOG)}")
        if self.tol_scale <= 0:
            raise ConfigError("--tol-scale must be positive")
        if any(v < 2 for v in self.n) or any(v < 1 for v in self.k):
            raise ConfigError("dimensions must be >= 2 and k >= 1")
        if self.res is not None and self.res < 2:
            raise ConfigError("--res must be at least 2")
        return self

    def model_params(self) -> dict:
        p = {}
        if self.mu is not None:
            p["mu"] = self.mu
        if self.eps is not None:
            p["eps"] = self.eps
        if self.mass is not None:
            p["mass"] = self.mass
        return p

    def as_meta(self) -> dict:
        return {k: getattr(self, k) for k in ("suite", "model", "n", "k", "mu", "eps", "mass", "res", "seed",
                                               "tol_scale", "quick")}


def _tol(cfg, t):
    return t * cfg.tol_scale


def _build(cfg: RunConfig, name: str, n: int, k: int | None = None):
    params = cfg.model_params()
    if name == "lovelock":
        params["k"] = k or 2
    if name in ("perturbed-torus",):
        params.setdefault("seed", 42)
    try:
        return models.build(name, n, **params)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _points(chart, cfg, count):
    if chart.name.startswith("lovelock"):
        return models.radial_points(chart, count)
    return models.sample_points(chart, count, cfg.seed)


# ---------------------------------------------------------------------------
# algebra


def algebra_suite(cfg: RunConfig) -> list[VerificationReport]:
    ns = cfg.n or [6]
    per = 2 if cfg.quick else 4
    out = []
    rng = models.make_rng(cfg.seed)
    for n in ns:
        m = random_metric(rng, n)
        worst_k, worst_a, worst_c = 0.0, 0.0, 0.0
        with timer() as t:
            for r in range(0, n):
                for s in range(0, n):
                    for _ in range(per):
                        w = random_form(rng, n, r, s)
                        if r >= 1 and s >= 1 and r < n and s < n:
                            lhs = contract(metric_multiply(w, m), m)
                            rhs = metric_multiply(contract(w, m), m) + w * float(n - r - s)
                            worst_k = max(worst_k, relative_residual(lhs.coeffs, rhs.coeffs)[1])
                        if r < n and s < n:
                            th = random_form(rng, n, r + 1, s + 1)
                            a = inner_product(metric_multiply(w, m), th, m)
                            b = inner_product(w, contract(th, m), m)
                            worst_a = max(worst_a, abs(a - b) / max(1.0, abs(a)))
            for r in range(0, n + 1):
                for s in range(0, n + 1):
                    for mp in range(1, min(4, n - max(r, s)) + 1):
                        for l in range(1, min(4, r + mp, s + mp) + 1):
                            rep = commutation_check(random_form(rng, n, r, s), l, mp, m)
                            worst_c = max(worst_c, rep.residual)
        tol = _tol(cfg, 1e-10)
        out.append(VerificationReport(f"kulkarni[n={n}]", "contraction-metric-commutator", worst_k, tol,
                                      residual_abs=float("nan"), residual_rel=worst_k, seed=cfg.seed,
                                      duration_ms=t["ms"]))
        out.append(VerificationReport(f"adjointness[n={n}]", "contraction-adjoint", worst_a, tol,
                                      residual_abs=float("nan"), residual_rel=worst_a, seed=cfg.seed))
        out.append(VerificationReport(f"commutation[n={n}]", "contraction-commutation-rule", worst_c, tol,
                                      residual_abs=float("nan"), residual_rel=worst_c, seed=cfg.seed))
    return out


# ---------------------------------------------------------------------------
# curvature and invariants


def curvature_suite(cfg: RunConfig) -> list[VerificationReport]:
    name = cfg.model or "sphere"
    ns = cfg.n or [5]
    ks = cfg.k or [2]
    count = 3 if cfg.quick else 8
    out = []
    for n in ns:
        chart = _build(cfg, name, n, ks[0])
        x = _points(chart, cfg, count)
        with timer() as t:
            b = riemann(chart, x)
        base = dict(seed=cfg.seed, inputs_digest=digest(chart.name, x))
        out.append(VerificationReport(f"first-bianchi[{chart.name}]", "algebraic-bianchi", first_bianchi(b),
                                      _tol(cfg, 1e-10), residual_abs=first_bianchi(b), residual_rel=float("nan"),
                                      duration_ms=t["ms"], **base))
        ps = pair_symmetry(b)
        out.append(VerificationReport(f"pair-symmetry[{chart.name}]", "curvature-pair-symmetry", ps,
                                      _tol(cfg, 1e-10), residual_abs=ps, residual_rel=float("nan"), **base))
        mc = metric_compatibility(chart, x)
        out.append(VerificationReport(f"metric-compatibility[{chart.name}]", "levi-civita", mc,
                                      _tol(cfg, 1e-8), residual_abs=mc, residual_rel=float("nan"), **base))
        if name in ("sphere", "hyperbolic"):
            mu = chart.params.get("mu", 1.0)
            out.append(VerificationReport.compare(
                f"space-form[{chart.name}]", "space-form-curvature", b.R.coeffs,
                (b.metric.power(2) * (mu / 2)).coeffs, _tol(cfg, 1e-8), **base))
            out.append(VerificationReport.compare(
                f"scalar-curvature[{chart.name}]", "space-form-scalar", b.kappa,
                np.full(len(x), n * (n - 1) * mu), _tol(cfg, 1e-8), **base))
        for k in ks:
            if 2 * k > n:
                continue
            iv = inv.invariant_set(b, k)
            out.append(VerificationReport(f"trace-identity[{chart.name},k={k}]", "gauss-bonnet-trace",
                                          iv.residuals["trace_identity"], _tol(cfg, 1e-10),
                                          residual_abs=float("nan"), residual_rel=iv.residuals["trace_identity"],
                                          **base))
            if k >= 2 and 2 * k < n:
                mu_k, tres = inv.thorpe_check(b.R, b.metric, k)
                if np.max(tres) < 1e-6:
                    out.append(VerificationReport.compare(
                        f"ricci-2k-formula[{chart.name},k={k}]", "2k-ricci-thorpe", iv.R2k.coeffs,
                        inv.ricci_2k_formula(b, k, mu_k), _tol(cfg, 1e-6), **base))
                    out.append(VerificationReport.compare(
                        f"gauss-bonnet-formula[{chart.name},k={k}]", "2k-scalar-thorpe", iv.S2k,
                        inv.gauss_bonnet_formula(b, k, mu_k), _tol(cfg, 1e-6), **base))
                if 2 * k + 1 <= n and n <= 7:
                    with timer() as t:
                        raw = inv.lovelock_kronecker_raw(b.Rm, b.metric, k)
                        c, spread = inv.ratio_spread(iv.J2k.coeffs, raw)
                    out.append(VerificationReport(
                        f"kronecker-route[{chart.name},k={k}]", "lovelock-kronecker-expansion", spread,
                        _tol(cfg, 1e-8), residual_abs=float("nan"), residual_rel=spread,
                        lhs={"d_nk": float(np.mean(c))}, duration_ms=t["ms"], **base))
            if name == "lovelock":
                S = iv.S2k
                spread = float(np.ptp(S) / max(abs(np.mean(S)), 1e-300))
                out.append(VerificationReport(
                    f"lovelock-constancy[{chart.name},eps={chart.params['eps']},m={chart.params['mass']}]",
                    "lovelock-slice-constant-gb", spread, _tol(cfg, 1e-6), residual_abs=float(np.ptp(S)),
                    residual_rel=spread, lhs={"mean": float(np.mean(S))}, **base))
            if name in ("conformal",) and n >= 4 and 2 * k <= n:
                out.append(inv.gb_sigma_identity(b, k, conformally_flat=True, tolerance=_tol(cfg, 1e-6),
                                                 seed=cfg.seed))
            if n >= 5 and 2 <= k < n / 2 and name in ("sphere", "hyperbolic"):
                cert = inv.rigidity_certificate(b, k)
                flag = 0.0 if cert.satisfied else 1.0
                out.append(VerificationReport(f"rigidity-certificate[{chart.name},k={k}]", "rigidity-pinching",
                                              flag, 0.5, residual_abs=flag, residual_rel=float("nan"),
                                              lhs=cert.summary(), **base))
        if name == "sphere" and n >= 3:
            out.append(weitzenboeck_report(cfg, n, count))
    if not cfg.quick:
        out.append(hypersurface_report(cfg, ns[0], ks[0]))
    return out


def weitzenboeck_report(cfg: RunConfig, n: int, count: int, jets: str = "analytic") -> VerificationReport:
    ch = models.space_form(n, 1.0, jets=jets)
    x = models.sample_points(ch, count, cfg.seed)
    h = models.transverse_traceless_field(ch, cfg.seed + 1)
    with timer() as t:
        b = riemann(ch, x)
        c = SymTensorCalculus(b, h.jets(x, 2))
        lhs = c.s2_star_s2() - c.s1_s1_star()
        ric, gi = b.ric, b.g_inv
        from .chart import compose
        rhs = c.bochner + 2 * c.rcc() - 2 * compose(c.h, ric, gi)
    return VerificationReport.compare(f"weitzenboeck[{ch.name},{jets}]", "weitzenboeck-s-operators", lhs, rhs,
                                      _tol(cfg, 1e-3 if jets == "fd" else 1e-8), seed=cfg.seed,
                                      duration_ms=t["ms"], inputs_digest=digest(ch.name, x))


def hypersurface_report(cfg: RunConfig, n: int, k: int) -> VerificationReport:
    n = max(n, 2 * k + 1)
    shapes = models.ellipsoid_shape(n, np.linspace(1.0, 2.0, n + 1), count=6, seed=cfg.seed)
    return inv.hypersurface_lovelock_check(shapes, k, _tol(cfg, 1e-6), seed=cfg.seed)


# ---------------------------------------------------------------------------
# linearization


def linearization_suite(cfg: RunConfig) -> list[VerificationReport]:
    name = cfg.model or "sphere"
    ns = cfg.n or [5]
    ks = cfg.k or [2]
    count = 2 if cfg.quick else 4
    out = []
    for n in ns:
        chart = _build(cfg, name, n, ks[0])
        x = _points(chart, cfg, count)
        h = models.random_sym_trig_field(n, cfg.seed + 3, 0.3)
        b = riemann(chart, x)
        base = dict(seed=cfg.seed, inputs_digest=digest(chart.name, x))
        mt = lin.contraction_identity_terms(h, chart, x, b)
        for key, val in mt.residuals().items():
            out.append(VerificationReport(f"contraction-identity-{key}[{chart.name}]", "linearized-contraction-identities",
                                          val, _tol(cfg, 1e-6), residual_abs=float("nan"), residual_rel=val,
                                          **base))
        closed = {
            "R": lambda: lin.riemann_linearization_closed(h, chart, x, b).coeffs,
            "Ric": lambda: lin.ricci_linearization_closed(h, chart, x, b),
            "kappa": lambda: lin.scalar_linearization_closed(h, chart, x, b),
        }
        for key, f in closed.items():
            with timer() as t:
                r = lin.fd_linearize(lin.LinearizationRequest(chart, h, x, key), closed=f())
            out.append(VerificationReport(f"linearization-{key}[{chart.name}]", f"linearized-{key}", r.residual,
                                          _tol(cfg, 1e-4), residual_abs=float("nan"), residual_rel=r.residual,
                                          lhs={"order": r.order}, duration_ms=t["ms"], **base))
        for k in ks:
            if not (n >= 5 and 2 <= k < n / 2):
                continue
            try:
                lin.h_class_data(b, k)
            except lin.HClassError:
                continue
            for key, f in (("ricci2k", lin.ricci2k_linearization_closed), ("gb2k", lin.gb2k_linearization_closed)):
                with timer() as t:
                    r = lin.fd_linearize(lin.LinearizationRequest(chart, h, x, key, k), closed=f(h, chart, x, k, b))
                out.append(VerificationReport(f"linearization-{key}[{chart.name},k={k}]", f"linearized-{key}",
                                              r.residual, _tol(cfg, 1e-3), residual_abs=float("nan"),
                                              residual_rel=r.residual, lhs={"order": r.order},
                                              duration_ms=t["ms"], **base))
            f = models.trig_scalar(n, cfg.seed + 5, 0.5)
            hf = models.scalar_times_metric(f, chart)
            r = lin.fd_linearize(lin.LinearizationRequest(chart, hf, x, "gb2k", k),
                                 closed=lin.conformal_operator(f, chart, x, k, b))
            out.append(VerificationReport(f"conformal-operator[{chart.name},k={k}]", "conformal-linearization",
                                          r.residual, _tol(cfg, 1e-3), residual_abs=float("nan"),
                                          residual_rel=r.residual, **base))
    return out


# ---------------------------------------------------------------------------
# functional


def functional_suite(cfg: RunConfig) -> list[VerificationReport]:
    name = cfg.model or "perturbed-torus"
    if name not in models.PERIODIC:
        raise ConfigError(f"model {name!r} is not periodic; the functional suite needs a torus chart")
    ns = cfg.n or [5]
    ks = cfg.k or [2]
    res = cfg.res or (4 if cfg.quick else 8)
    out = []
    for n in ns:
        chart = _build(cfg, name, n)
        grid = fn.PeriodicGrid.for_chart(chart, res)
        if name == "perturbed-torus":
            h = models.overlap_field(n, chart.params.get("seed", 42), cfg.seed + 7)
        else:
            h = models.random_sym_trig_field(n, cfg.seed + 7, 0.5)
        for k in ks:
            if n <= 2 * k:
                continue
            tol = None if not cfg.quick else 1e-1
            rep = fn.gradient_identity_check(grid, chart, k, h, seed=cfg.seed,
                                             tolerance=None if tol is None else tol)
            rep.tolerance *= cfg.tol_scale
            rep.passed = rep.residual <= rep.tolerance
            out.append(rep)
            pts = models.sample_points(chart, 4 if cfg.quick else 10, cfg.seed)
            out.append(fn.divergence_free_check(pts, chart, k, tolerance=_tol(cfg, 1e-4), seed=cfg.seed))
        out.append(fn.volume_derivative_check(grid, chart, h, tolerance=_tol(cfg, 1e-6), seed=cfg.seed))
    return out


RUNNERS = {
    "algebra": algebra_suite,
    "curvature": curvature_suite,
    "linearization": linearization_suite,
    "functional": functional_suite,
}


def run_suite(cfg: RunConfig) -> list[VerificationReport]:
    names = list(RUNNERS) if cfg.suite == "all" else [cfg.suite]
    out = []
    for s in names:
        sub = cfg
        if cfg.suite == "all" and s == "functional" and (cfg.model and cfg.model not in models.PERIODIC):
            continue
        out.extend(RUNNERS[s](sub))
    return out


# ---------------------------------------------------------------------------
# invariants report


def invariants_data(cfg: RunConfig):
    name = cfg.model or "sphere"
    ns = cfg.n or [5]
    ks = cfg.k or [2]
    records, data = [], {}
    for n in ns:
        chart = _build(cfg, name, n, ks[0])
        x = _points(chart, cfg, 3 if cfg.quick else 6)
        b = riemann(chart, x)
        base = dict(seed=cfg.seed, inputs_digest=digest(chart.name, x))
        entry = {"points": x.tolist(), "kappa": b.kappa.tolist(), "per_k": {}}
        for k in ks:
            if 2 * k > n:
                continue
            iv = inv.invariant_set(b, k)
            ein, two_k, lam = inv.einstein_residuals(iv, b)
            row = {"S2k": iv.S2k.tolist(), "lambda": lam.tolist(), "einstein_res": ein.tolist(),
                   "two_k_einstein_res": two_k.tolist(), "R2k": iv.R2k.coeffs.tolist()}
            records.append(VerificationReport(f"trace-identity[{chart.name},k={k}]", "gauss-bonnet-trace",
                                              iv.residuals["trace_identity"], _tol(cfg, 1e-10),
                                              residual_abs=float("nan"),
                                              residual_rel=iv.residuals["trace_identity"], **base))
            if k >= 2 and 2 * k - 2 <= n:
                mu_k, tres = inv.thorpe_check(b.R, b.metric, k)
                row["thorpe_mu_k"] = mu_k.tolist()
                row["thorpe_res"] = tres.tolist()
            if n >= 5 and 2 <= k < n / 2:
                cert = inv.rigidity_certificate(b, k)
                row["rigidity"] = cert.summary()
                row["constants"] = inv.structure_constants(n, k).as_floats()
            if name == "lovelock":
                S = iv.S2k
                spread = float(np.ptp(S) / max(abs(np.mean(S)), 1e-300))
                records.append(VerificationReport(
                    f"lovelock-constancy[{chart.name},eps={chart.params['eps']},m={chart.params['mass']}]",
                    "lovelock-slice-constant-gb", spread, _tol(cfg, 1e-6), residual_abs=float(np.ptp(S)),
                    residual_rel=spread, lhs={"mean": float(np.mean(S))}, **base))
            entry["per_k"][str(k)] = row
        if n >= 4:
            cd = inv.schouten_weyl(b, kmax=min(n, 3))
            entry["conformal"] = {"sigma": {str(k): v.tolist() for k, v in cd.sigma.items()},
                                  "weyl_norm": np.sqrt(np.abs(inner_product(cd.W, cd.W, b.metric))).tolist()}
        data[f"{chart.name}"] = entry
    return records, data
