"""Gauss-Bonnet curvatures of round spheres and hyperbolic spaces.

On a space form every 2k-invariant is a constant multiple of the metric, so
the printed 2k-Ricci tensors should equal lambda * g and S^(2k) should match
n!/(2^k (n-2k)!) mu^k.
"""
from math import factorial

import numpy as np

from curvkit import models
from curvkit.chart import riemann
from curvkit.invariants import invariant_set, rigidity_certificate, thorpe_check

for n, k, mu in [(5, 2, 1.0), (7, 3, 1.0), (5, 2, -1.0)]:
    chart = models.space_form(n, mu)
    b = riemann(chart, models.sample_points(chart, 4, 0))
    inv = invariant_set(b, k)
    mu_k, res = thorpe_check(b.R, b.metric, k)
    expect = factorial(n) / (2**k * factorial(n - 2 * k)) * mu**k
    print(f"{chart.name}  k={k}")
    print(f"  S^(2k)   = {inv.S2k[0]:.10g}  (closed form {expect:.10g})")
    print(f"  lambda   = {inv.lambda_est[0]:.10g}")
    print(f"  mu_k     = {mu_k[0]:.6g}  Thorpe residual {np.max(res):.1e}")
    if 2 * k < n:
        # trace-free spectrum of Rcc against the pinching window
        print("  rigidity", rigidity_certificate(b, k).summary())
