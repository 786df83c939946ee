"""Two-phase model M2: matrix-valued blocks, phase independence of the rates.

Run with ``python3 demos/two_phase_model.py`` (about 15 seconds). The oracle
fits one slope per (origin phase, target phase) pair; they agree with each
other and with the analytic rate.
"""

import numpy as np

from qbd2d.decay import full_analysis
from qbd2d.gmatrix import solve_G
from qbd2d.model import model_m2
from qbd2d.oracle import build_truncated, empirical_decay, occupation_measure

np.set_printoptions(precision=5, suppress=True)

m = model_m2()
g = solve_G(m, 1, 1.0)
print("G1(1) =\n%s\nresidual %.1e via %s, spr %.6f" % (g.G, g.residual, g.method, g.spr_G))

sol = full_analysis(m)
print("\ns* = (%.6f, %.6f), cases %s/%s"
      % (sol.s1_star, sol.s2_star, sol.case_axis1, sol.case_axis2))
for flag in sol.h10.flags:
    print("  note:", flag)

nu = occupation_measure(build_truncated(m, 200))
for rate in sol.directions:
    est = empirical_decay(nu, rate.c)
    print("\nc = %s: predicted slope %.5f, pooled fit %.5f (r^2 %.6f)"
          % (rate.c, -rate.xi, est.pooled_slope, est.r2))
    print("per-phase slopes [j0, j]:\n%s" % est.phase_slopes)
