"""Closed-form linearizations against central differences.

Each closed form is compared with the Richardson limit of the difference
quotients of the full curvature pipeline along g + t h. The observed order
should sit near 2.
"""
from curvkit import linearize as lin
from curvkit import models

chart = models.space_form(5)
x = models.sample_points(chart, 3, 0)
h = models.random_sym_trig_field(5, 4, 0.3)

cases = {
    "kappa": lin.scalar_linearization_closed(h, chart, x),
    "Ric": lin.ricci_linearization_closed(h, chart, x),
}
for key, closed in cases.items():
    r = lin.fd_linearize(lin.LinearizationRequest(chart, h, x, key), closed=closed)
    print(f"{key:8s} residual {r.residual:.2e}  order {r.order:.2f}")

for key, f in (("ricci2k", lin.ricci2k_linearization_closed), ("gb2k", lin.gb2k_linearization_closed)):
    r = lin.fd_linearize(lin.LinearizationRequest(chart, h, x, key, 2), closed=f(h, chart, x, 2))
    print(f"{key:8s} residual {r.residual:.2e}  order {r.order:.2f}")

# the conformal direction f g
f = models.trig_scalar(5, 1, 0.5)
r = lin.fd_linearize(lin.LinearizationRequest(chart, models.scalar_times_metric(f, chart), x, "gb2k", 2),
                     closed=lin.conformal_operator(f, chart, x, 2))
print(f"conformal residual {r.residual:.2e}")
