"""Gradient of the integrated Gauss-Bonnet curvature on a perturbed torus.

The derivative of the functional along h is estimated by central
differences and compared with minus the pairing of the Lovelock tensor with
h. At 4 points per axis the k = 2 check misses its tolerance; at 6 it is
already well inside, since the quadrature converges spectrally.
"""
from curvkit import functional as fn
from curvkit import models

chart = models.perturbed_torus(5)
h = models.overlap_field(5)
for res in (4, 6):
    grid = fn.PeriodicGrid.for_chart(chart, res)
    for k in (1, 2):
        rep = fn.gradient_identity_check(grid, chart, k, h)
        print(rep.line(), " lhs", rep.lhs["value"], " rhs", rep.rhs["value"])
