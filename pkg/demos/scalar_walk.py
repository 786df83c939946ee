"""Walk through the analysis of the scalar reference model M1.

Run with ``python3 demos/scalar_walk.py``. Prints the region geometry, the
optimal exponents with their case labels, a few directional rates, and the
slopes the truncated oracle measures along the same rays.
"""

import math

from qbd2d.decay import full_analysis
from qbd2d.model import model_m1
from qbd2d.oracle import build_truncated, empirical_decay, occupation_measure
from qbd2d.regions import geometry

m = model_m1()
geo = geometry(m)
lo1, hi1, lo2, hi2 = geo.extremes
print("Gamma12 bounding box: theta1 in (%.6f, %.6f), theta2 in (%.6f, %.6f)" % (lo1, hi1, lo2, hi2))
print("Gamma0 on axis 1: (%.6f, %.6f)" % (geo.gamma0(1).lo, geo.gamma0(1).hi))
print("upper boundary at theta1 = 0: %.6f (closed form log(2 + sqrt 2) = %.6f)"
      % (geo.eta(1, 0.0, "upper"), math.log(2 + math.sqrt(2))))

directions = ((1, 0), (0, 1), (1, 1), (2, 1))
sol = full_analysis(m, directions)
print("\ns* = (%.10f, %.10f), cases %s/%s"
      % (sol.s1_star, sol.s2_star, sol.case_axis1, sol.case_axis2))
print("hitting measure s_R* = (%.10f, %.10f)" % sol.dual.s_star)

nu = occupation_measure(build_truncated(m, 200))
print("\n%-8s %-12s %-12s %-10s %s" % ("c", "xi_c", "slope", "error", "form"))
for rate in sol.directions:
    est = empirical_decay(nu, rate.c)
    err = abs(-est.pooled_slope - rate.xi) / rate.xi
    print("%-8s %-12.6f %-12.6f %-10.2e %s" % (rate.c, rate.xi, est.pooled_slope, err,
                                                 rate.form.describe()))
