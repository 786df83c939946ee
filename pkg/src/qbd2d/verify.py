"""Cross-checks of the analytic predictions against the truncated-lattice oracle."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .decay import DEFAULT_TOL, full_analysis, global_sup, xi_direction
from .oracle import (
    build_truncated,
    compensation_residual,
    domain_probe,
    duality_gap,
    empirical_decay,
    hitting_measure,
    occupation_measure,
)
from .regions import geometry

SLOPE_RTOL = 0.05
PHASE_RTOL = 0.01
COMPENSATION_RTOL = 1e-5
DUALITY_ATOL = 1e-10
UPPER_BOUND_ATOL = 1e-9
PROBE_SIZES = (40, 80, 120)
DUALITY_N = 40
COMPENSATION_K = 60
INSIDE_MARGIN = 0.1
OUTSIDE_MARGIN = 0.2
DIRECTIONS = ((1, 0), (0, 1), (1, 1))
BOUND_DIRECTIONS = ((1, 0), (0, 1), (1, 1), (2, 1), (1, 2))


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: dict = field(default_factory=dict)


@dataclass
class VerifyReport:
    N: int
    tol: float
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def max_slope_error(self) -> float:
        errs = [c.value for c in self.checks if c.name.startswith(("slope", "hitting_slope"))]
        return max(errs) if errs else math.nan

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "N": self.N,
            "tol": self.tol,
            "max_relative_slope_error": self.max_slope_error(),
            "checks": [asdict(c) for c in self.checks],
        }


def sample_domain_points(geo, n: int = 5, seed: int = 0, inside_margin: float = INSIDE_MARGIN,
                         outside_margin: float = OUTSIDE_MARGIN, max_draws: int = 100_000):
    """Seeded samples strictly inside and well outside the convergence domain.

    A point counts as inside when it stays in the domain after a shift by
    ``inside_margin`` towards ``(+inf, +inf)``, and as outside when a shift by
    ``outside_margin`` towards ``(-inf, -inf)`` still misses the closure.
    Because the domain is a down-set, the latter puts the point at sup-norm
    distance at least ``outside_margin`` from it.
    """
    rng = np.random.default_rng(seed)
    lo1, hi1, lo2, hi2 = geo.extremes
    box = np.array([[lo1 - 1.0, hi1 + 0.5], [lo2 - 1.0, hi2 + 0.5]])
    inside, outside = [], []
    for _ in range(max_draws):
        if len(inside) >= n and len(outside) >= n:
            break
        t = rng.uniform(box[:, 0], box[:, 1])
        if len(inside) < n and geo.domain_score(t + inside_margin) > 0.0:
            inside.append(tuple(float(v) for v in t))
        elif len(outside) < n and geo.domain_score(t - outside_margin) < 0.0:
            outside.append(tuple(float(v) for v in t))
    if len(inside) < n or len(outside) < n:
        raise RuntimeError("could not draw enough domain samples")
    return inside, outside


def _rel(a, b):
    return abs(a - b) / abs(b)


def _slope_check(name, field_, c, target, extra=None):
    est = empirical_decay(field_, c)
    err = _rel(-est.pooled_slope, target)
    detail = {"c": list(c), "slope": est.pooled_slope, "predicted": -target, "r2": est.r2,
              "window": list(est.window)}
    detail.update(extra or {})
    return Check(name, err <= SLOPE_RTOL, err, SLOPE_RTOL, detail), est


def verify(m, N: int = 200, tol: float = DEFAULT_TOL, method: str = "neumann",
           perturb=None, seed: int = 0) -> VerifyReport:
    """Run the comparison suite on model ``m`` with an ``N`` truncation.

    ``perturb`` is an optional callable applied to the analytic
    :class:`~qbd2d.decay.DecaySolution` before any comparison; it exists so
    that tests can inject a wrong prediction and watch the suite fail.
    """
    if N < max(PROBE_SIZES):
        raise ValueError("verify needs N >= %d for the domain probe" % max(PROBE_SIZES))
    sol = full_analysis(m, DIRECTIONS, tol)
    if perturb is not None:
        perturb(sol)
    checks = []

    op = build_truncated(m, N)
    nu = occupation_measure(op, tol, method)
    g = hitting_measure(op, tol, method)
    for name, f in (("occupation_residual", nu), ("hitting_residual", g)):
        checks.append(Check(name, f.residual <= 10 * tol, f.residual, 10 * tol,
                            {"terms": f.terms, "method": f.method}))

    xi = {tuple(r.c): r.xi for r in sol.directions}
    targets = {(1, 0): sol.s1_star, (0, 1): sol.s2_star, (1, 1): xi[(1, 1)]}
    for c in DIRECTIONS:
        chk, est = _slope_check("slope_%d_%d" % c, nu, c, targets[c])
        checks.append(chk)
        if m.s0 > 1:
            spread = est.max_phase_spread
            checks.append(Check("phase_invariance_%d_%d" % c, spread <= PHASE_RTOL, spread,
                                PHASE_RTOL, {"phase_slopes": est.phase_slopes.tolist()}))
    for c, target in (((1, 0), sol.dual.s1_star), ((0, 1), sol.dual.s2_star)):
        checks.append(_slope_check("hitting_slope_%d_%d" % c, g, c, target)[0])

    for axis, s in ((1, sol.s1_star), (2, sol.s2_star)):
        z = math.exp(0.3 * s)
        K = min(COMPENSATION_K, N)
        res = compensation_residual(m, nu, axis, z, K, tol)
        checks.append(Check("compensation_axis%d" % axis, res <= COMPENSATION_RTOL, res,
                            COMPENSATION_RTOL, {"z": z, "K": K}))

    gap = duality_gap(m, DUALITY_N, tol, method)
    checks.append(Check("duality", gap <= DUALITY_ATOL, gap, DUALITY_ATOL, {"N": DUALITY_N}))

    geo = geometry(m)
    inside, outside = sample_domain_points(geo, seed=seed)
    for expected, pts in (("inside", inside), ("outside", outside)):
        verdicts = [domain_probe(nu, t, PROBE_SIZES).verdict for t in pts]
        bad = sum(v != expected for v in verdicts)
        checks.append(Check("domain_probe_%s" % expected, bad == 0, float(bad), 0.0,
                            {"points": [list(t) for t in pts], "verdicts": verdicts}))

    # analytic consistency of the predictions being compared
    for c in BOUND_DIRECTIONS:
        rate = xi_direction(m, sol, c)
        bound = global_sup(m, c)
        excess = rate.xi - bound
        checks.append(Check("upper_bound_%d_%d" % c, excess <= UPPER_BOUND_ATOL, excess,
                            UPPER_BOUND_ATOL, {"xi": rate.xi, "sup": bound}))
    return VerifyReport(N, tol, checks)
