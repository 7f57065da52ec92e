"""Radial Lovelock-type metrics and the constancy of S^(2k).

The standard profile F = 1 + eps r^2 - 2m r^(2-n/k) only keeps S^(2k)
constant when eps or m vanishes. The pure profile
F = 1 + eps r^2 (1 + 2m r^-n)^(1/k) keeps it constant for every m.
"""
import numpy as np

from curvkit import models
from curvkit.chart import riemann
from curvkit.invariants import gauss_bonnet_2k

n, k = 5, 2
for profile in ("standard", "pure"):
    print(f"profile={profile}")
    for eps in (1, -1):
        for mass in (0.0, 0.05, 0.1):
            ch = models.lovelock_slice(n, k, eps, mass, profile=profile)
            b = riemann(ch, models.radial_points(ch, 7))
            S = gauss_bonnet_2k(b.R, b.metric, k)
            print(f"  eps={eps:+d} m={mass:.2f}  mean S={np.mean(S):10.5f}  spread/mean={np.ptp(S) / abs(np.mean(S)):.2e}")
