"""Optimal exponents, directional decay rates and decay-function forms.

The axis exponents ``(s1*, s2*)`` solve

    maximize s1 + s2
    s.t. s1 <= f1(s2),  s2 <= f2(s1),

where ``f1(s)`` is the largest ``theta1`` of a point of ``Gamma12`` with
``theta1`` in ``Gamma0_1`` and ``theta2 < s`` (``f2`` symmetric). The
solution is found by the monotone iteration ``s <- f1(f2(s))`` and checked
against the closed form ``s1* = f1(sup Gamma0_2)``.

All functions take either a model (anything :func:`regions.geometry`
accepts) or a prepared :class:`regions.Geometry`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from . import _optimize as opt
from .errors import ConvergenceError, DomainError, InfeasibleError
from .regions import Geometry, geometry

DEFAULT_TOL = 1e-12
EPS_CLS = 1e-7
TIE_TOL = 1e-9
MAX_FIXED_POINT = 10_000

NONE, LINEAR, HALF, UNRESOLVED = "none", "n", "n^-1/2", "n^-l/2"


def _geo(m) -> Geometry:
    return m if isinstance(m, Geometry) else geometry(m)


def _other(axis):
    return 3 - axis


# ---------------------------------------------------------------------------
# the boundary functions f1, f2


def bottom_point(geo: Geometry, axis: int) -> float:
    """``theta_axis`` coordinate where the other coordinate of Gamma12 is smallest."""
    lo_other = geo.projection(_other(axis)).lo
    arg, _ = geo.section(_other(axis), lo_other)
    return arg


def sublevel_range(geo: Geometry, axis: int, s: float):
    """``(inf, sup)`` of ``{theta_axis : eta_lower(theta_axis) < s}``; ``None`` if empty.

    This is the projection on ``axis`` of ``Gamma12`` cut by the half-plane
    ``theta_other < s``.
    """
    proj = geo.projection(axis)
    if s <= geo.projection(_other(axis)).lo:
        return None
    b = bottom_point(geo, axis)
    lower = lambda t: geo.eta(axis, t, "lower") - s  # noqa: E731
    hi = proj.hi if lower(proj.hi) < 0 else opt.root(lower, b, proj.hi)
    lo = proj.lo if lower(proj.lo) < 0 else opt.root(lower, proj.lo, b)
    return lo, hi


def f_axis(m, axis: int, s: float, tol: float = DEFAULT_TOL) -> float:
    """``f1(s)`` (``axis=1``) or ``f2(s)``; ``-inf`` when the constraint set is empty."""
    geo = _geo(m)
    rng = sublevel_range(geo, axis, s)
    if rng is None:
        return -math.inf
    g0 = geo.gamma0(axis)
    lo, hi = rng
    if hi <= g0.lo or lo >= g0.hi:
        return -math.inf
    return min(g0.hi, hi)


def theta_star(m, axis: int, tol: float = DEFAULT_TOL) -> float:
    """Largest ``theta_axis`` in Gamma12 below the other axis' Gamma0 bound."""
    geo = _geo(m)
    rng = sublevel_range(geo, axis, geo.gamma0(_other(axis)).hi)
    if rng is None:
        raise InfeasibleError("Gamma12 lies entirely above the Gamma0 bound on axis %d"
                              % _other(axis))
    return rng[1]


def direct_optimum(m, axis: int) -> float:
    """Closed form ``s_axis* = min(sup Gamma0_axis, theta_star(axis))``."""
    geo = _geo(m)
    return f_axis(geo, axis, geo.gamma0(_other(axis)).hi)


def feasibility_witness(m, tol: float = 1e-10):
    """Minimiser of ``log chi`` over the box ``Gamma0_1 x Gamma0_2``.

    The box meets Gamma12 (the nonemptiness condition on the three regions)
    iff the returned value is negative.
    """
    geo = _geo(m)
    g1, g2 = geo.gamma0(1), geo.gamma0(2)

    def inner(t1):
        return opt.golden_min(lambda t2: geo.log_chi(t1, t2), g2.lo, g2.hi, tol=tol)

    t1, val = opt.golden_min(lambda t: inner(t)[1], g1.lo, g1.hi, tol=tol)
    t2, _ = inner(t1)
    return (t1, t2), val


# ---------------------------------------------------------------------------
# solution object


@dataclass
class DecayForm:
    rate: float
    polynomial_factor: str = NONE
    flags: list = field(default_factory=list)

    def describe(self) -> str:
        base = "exp(-%.10g n)" % self.rate
        pref = {NONE: "", LINEAR: "n ", HALF: "n^(-1/2) ", UNRESOLVED: "n^(-l/2) "}
        return pref[self.polynomial_factor] + base


@dataclass
class DirectionRate:
    c: tuple
    xi: float
    argmax_point: tuple
    binding_constraint: str
    sup_axis1: float
    sup_axis2: float
    form: DecayForm | None = None


@dataclass
class DecaySolution:
    s1_star: float
    s2_star: float
    theta1_star: float
    theta2_star: float
    case_axis1: str
    case_axis2: str
    h10: DecayForm
    h01: DecayForm
    fixed_point_residual: tuple
    direct: tuple
    iterations: int
    witness: tuple
    flags: list = field(default_factory=list)
    directions: list = field(default_factory=list)
    dual: "DecaySolution | None" = None

    @property
    def s_star(self):
        return (self.s1_star, self.s2_star)

    def to_dict(self) -> dict:
        d = {
            "s1_star": self.s1_star,
            "s2_star": self.s2_star,
            "theta1_star": self.theta1_star,
            "theta2_star": self.theta2_star,
            "cases": [self.case_axis1, self.case_axis2],
            "h10": asdict(self.h10),
            "h01": asdict(self.h01),
            "fixed_point_residual": list(self.fixed_point_residual),
            "direct_formula": list(self.direct),
            "iterations": self.iterations,
            "witness": list(self.witness),
            "flags": list(self.flags),
            "directions": [
                {
                    "c": list(r.c),
                    "xi": r.xi,
                    "form": asdict(r.form) if r.form else None,
                    "binding": r.binding_constraint,
                    "argmax": list(r.argmax_point),
                }
                for r in self.directions
            ],
        }
        if self.dual is not None:
            d["dual"] = self.dual.to_dict()
        return d


# ---------------------------------------------------------------------------
# optimisation


def solve_optimal(m, tol: float = DEFAULT_TOL, start: float | None = None):
    """``(s1*, s2*, iterations, witness)`` by monotone fixed-point iteration.

    The iteration starts at the ``theta1`` of a point of the feasible box, which
    lies below ``s1*``; each step ``s <- f1(f2(s))`` is nondecreasing.
    """
    geo = _geo(m)
    witness, val = feasibility_witness(geo)
    if val >= 0.0:
        raise InfeasibleError(
            "Gamma0_1 x Gamma0_2 does not meet Gamma12 (min chi on the box = %.12g)"
            % math.exp(val)
        )
    s = witness[0] if start is None else start
    for it in range(1, MAX_FIXED_POINT + 1):
        s2 = f_axis(geo, 2, s)
        s_new = f_axis(geo, 1, s2)
        if not math.isfinite(s_new):
            raise InfeasibleError("fixed-point iteration left the feasible set")
        step = s_new - s
        s = max(s, s_new)
        if abs(step) <= tol:
            return s, f_axis(geo, 2, s), it, witness
    raise ConvergenceError("s <- f1(f2(s)) did not settle in %d steps" % MAX_FIXED_POINT)


def _case(s, hi12, hi0, tstar, eps):
    if abs(s - hi12) <= eps:
        return "C1"
    on0 = abs(s - hi0) <= eps
    on_star = abs(s - tstar) <= eps
    if on0 and on_star:
        return "C3"
    if on0 and hi0 < tstar:
        return "C2"
    if on_star and tstar < hi0:
        return "C4"
    return None


def classify_axis(m, s_star: float, axis: int, eps: float = EPS_CLS):
    """``(case, DecayForm)`` for the decay function along a coordinate axis."""
    geo = _geo(m)
    hi12 = geo.projection(axis).hi
    hi0 = geo.gamma0(axis).hi
    tstar = theta_star(geo, axis)
    case = _case(s_star, hi12, hi0, tstar, eps)
    coarse = _case(s_star, hi12, hi0, tstar, 10 * eps)
    flags = []
    if case is None:
        case = coarse
    if case is None:
        raise InfeasibleError(
            "axis %d: s* = %.12g matches none of the extreme values (%.12g, %.12g, %.12g)"
            % (axis, s_star, hi12, hi0, tstar)
        )
    if coarse != case:
        flags.append("near-degenerate: %s at eps, %s at 10*eps" % (case, coarse))
    factor = {"C1": UNRESOLVED, "C3": LINEAR}.get(case, NONE)
    if case == "C1":
        flags.append("exponent l unresolved (one of 0, 1, 3, 5, ...)")
    return case, DecayForm(rate=s_star, polynomial_factor=factor, flags=flags)


def analyse(m, tol: float = DEFAULT_TOL, directions=(), eps: float = EPS_CLS) -> DecaySolution:
    """Full occupation-measure analysis of a model (or geometry)."""
    geo = _geo(m)
    s1, s2, iters, witness = solve_optimal(geo, tol)
    r1 = abs(s1 - f_axis(geo, 1, f_axis(geo, 2, s1)))
    r2 = abs(s2 - f_axis(geo, 2, f_axis(geo, 1, s2)))
    d1, d2 = direct_optimum(geo, 1), direct_optimum(geo, 2)
    flags = []
    if abs(d1 - s1) > 1e-7 or abs(d2 - s2) > 1e-7:
        flags.append("fixed point and closed form disagree; the nonemptiness "
                     "surrogate may be too weak for this model")
    c1, h10 = classify_axis(geo, s1, 1, eps)
    c2, h01 = classify_axis(geo, s2, 2, eps)
    sol = DecaySolution(
        s1_star=s1,
        s2_star=s2,
        theta1_star=theta_star(geo, 1),
        theta2_star=theta_star(geo, 2),
        case_axis1=c1,
        case_axis2=c2,
        h10=h10,
        h01=h01,
        fixed_point_residual=(r1, r2),
        direct=(d1, d2),
        iterations=iters,
        witness=witness,
        flags=flags,
    )
    for c in directions:
        rate = xi_direction(geo, sol, c)
        rate.form = classify_direction(geo, sol, c, rate)
        sol.directions.append(rate)
    return sol


# ---------------------------------------------------------------------------
# directions


def _clipped_sup(geo: Geometry, c, axis: int, s_clip: float, tol: float):
    """max of <c, theta> over Gamma12 with theta_axis <= s_clip, along the upper curve."""
    ca, co = (c[0], c[1]) if axis == 1 else (c[1], c[0])
    proj = geo.projection(axis)
    hi = min(s_clip, proj.hi)

    def g(t):
        return ca * t + co * geo.eta(axis, t, "upper")

    t, val = opt.golden_max(g, proj.lo, hi, tol=tol)
    clipped = s_clip < proj.hi and abs(t - hi) <= 1e-6 * max(1.0, proj.width)
    other = geo.eta(axis, t, "upper")
    point = (t, other) if axis == 1 else (other, t)
    return val, point, clipped


def xi_direction(m, sol: DecaySolution, c, tol: float = 1e-10) -> DirectionRate:
    """Decay rate of the measure along the lattice direction ``c``."""
    c = tuple(int(v) for v in c)
    if len(c) != 2 or min(c) < 0 or c == (0, 0):
        raise ValueError("direction must be a nonzero vector of nonnegative integers")
    geo = _geo(m)
    if c[1] == 0:
        xi = c[0] * sol.s1_star
        return DirectionRate(c, xi, (sol.s1_star, math.nan), "axis1-domain", xi, math.inf)
    if c[0] == 0:
        xi = c[1] * sol.s2_star
        return DirectionRate(c, xi, (math.nan, sol.s2_star), "axis2-domain", math.inf, xi)
    v1, p1, clip1 = _clipped_sup(geo, c, 1, sol.s1_star, tol)
    v2, p2, clip2 = _clipped_sup(geo, c, 2, sol.s2_star, tol)
    if abs(v1 - v2) <= TIE_TOL:
        binding = "interior" if not (clip1 or clip2) else "tie"
        xi, point = min(v1, v2), p1 if v1 <= v2 else p2
    elif v1 < v2:
        xi, point = v1, p1
        binding = "axis1-domain" if clip1 else "interior"
    else:
        xi, point = v2, p2
        binding = "axis2-domain" if clip2 else "interior"
    return DirectionRate(c, xi, point, binding, v1, v2)


def global_sup(m, c, tol: float = 1e-10) -> float:
    """``sup <c, theta>`` over all of Gamma12 (no axis clipping)."""
    geo = _geo(m)
    return _clipped_sup(geo, c, 1, math.inf, tol)[0]


def classify_direction(m, sol: DecaySolution, c, rate: DirectionRate | None = None,
                       tol: float = 1e-10) -> DecayForm:
    """Decay-function form along a direction with both components positive."""
    geo = _geo(m)
    if rate is None:
        rate = xi_direction(geo, sol, c, tol)
    c1, c2 = c
    if c1 == 0 or c2 == 0:
        return sol.h10 if c2 == 0 else sol.h01
    s1, s2 = sol.s1_star, sol.s2_star
    flags = []
    try:
        up2 = geo.eta(1, s1, "upper")
        up1 = geo.eta(2, s2, "upper")
        below = up2 < s2 and up1 < s1
        d2 = geo.eta_derivative(1, s1, "upper")
        d1 = geo.eta_derivative(2, s2, "upper")
    except DomainError:
        flags.append("condition unevaluable at branch point")
        return DecayForm(rate.xi, NONE, flags)
    slope = -c1 / c2
    # for a nonnegative d1 the right-hand bound 1/d1 is positive (or infinite)
    window = d2 < slope and (d1 >= 0 or slope < 1.0 / d1)
    if below and window:
        return DecayForm(rate.xi, HALF, flags)
    return DecayForm(rate.xi, NONE, flags)


def hitting_rates(m, directions=(), tol: float = DEFAULT_TOL, eps: float = EPS_CLS):
    """Decay analysis of the hitting measure (the reflected geometry)."""
    geo = _geo(m).reflected()
    return analyse(geo, tol, directions, eps)


def full_analysis(m, directions=((1, 0), (0, 1), (1, 1)), tol: float = DEFAULT_TOL,
                  eps: float = EPS_CLS) -> DecaySolution:
    """Occupation analysis with the hitting-measure counterpart attached as ``dual``."""
    sol = analyse(m, tol, directions, eps)
    sol.dual = hitting_rates(m, directions, tol, eps)
    return sol
