"""Geometry of the convergence regions.

``Gamma12`` is the open sublevel set ``{theta : chi(theta) < 1}`` of the
log-convex function ``chi``. Its boundary is traced by the eta-curves: for
``theta1`` in the projection ``(lo1, hi1)`` the vertical section is the open
interval ``(eta2_lower(theta1), eta2_upper(theta1))``, and symmetrically for
the other axis. The boundary intervals ``Gamma0`` are characterised through
the spectral radius of the boundary kernel built from the G-matrix.

Everything here is a function of the interior family plus the two
``Gamma0`` intervals, bundled as a :class:`Geometry`. The hitting-measure
geometry is the point reflection of the occupation one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _optimize as opt
from .errors import DomainError, InfeasibleError
from .gmatrix import TANGENCY, kernel_spr, log_chi, section_min
from .model import BlockModel, ReversedModel

ROOT_TOL = 1e-13
DEFAULT_SAMPLES = 257
GAMMA0_GRID = 33


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_open: bool = True
    hi_open: bool = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("interval with lo > hi")

    def __contains__(self, t: float) -> bool:
        above = t > self.lo if self.lo_open else t >= self.lo
        below = t < self.hi if self.hi_open else t <= self.hi
        return above and below

    def reflect(self) -> "Interval":
        return Interval(-self.hi, -self.lo, self.hi_open, self.lo_open)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "lo_open": self.lo_open, "hi_open": self.hi_open}


def reflect_family(fam: np.ndarray) -> np.ndarray:
    """Interior family of the transpose: ``B[i, j] = A[-i, -j]^T``."""
    return np.ascontiguousarray(np.transpose(fam[::-1, ::-1], (0, 1, 3, 2)))


class Geometry:
    """Region machinery for one interior family and a pair of Gamma0 intervals.

    ``gamma0`` may be omitted when only ``Gamma12`` quantities are needed.
    Results are memoised per instance; instances are cheap to build.
    """

    def __init__(self, fam: np.ndarray, gamma0=None, tol: float = ROOT_TOL):
        self.fam = np.asarray(fam, dtype=float)
        self.tol = tol
        self._gamma0 = gamma0
        self._extremes = None
        self._eta_cache = {}

    # --- chi -------------------------------------------------------------
    def log_chi(self, t1: float, t2: float) -> float:
        return log_chi(self.fam, t1, t2)

    def chi(self, t1: float, t2: float) -> float:
        return math.exp(self.log_chi(t1, t2))

    def section(self, axis: int, theta: float):
        return section_min(self.fam, axis, theta)

    # --- extremes ----------------------------------------------------------
    def _axis_extremes(self, axis):
        s = lambda t: self.section(axis, t)[1]  # noqa: E731
        a, _, b = opt.bracket_min(s, 0.0)
        c, smin = opt.golden_min(s, a, b)
        if smin >= 0.0:
            raise InfeasibleError(
                "Gamma12 is empty: min chi = %.12g >= 1" % math.exp(smin)
            )
        right = opt.expand_until(s, c, +1)
        left = opt.expand_until(s, c, -1)
        return opt.root(s, left, c, ROOT_TOL), opt.root(s, c, right, ROOT_TOL)

    @property
    def extremes(self):
        """``(lo1, hi1, lo2, hi2)``: the bounding box of ``Gamma12``."""
        if self._extremes is None:
            lo1, hi1 = self._axis_extremes(1)
            lo2, hi2 = self._axis_extremes(2)
            self._extremes = (lo1, hi1, lo2, hi2)
        return self._extremes

    def projection(self, axis: int) -> Interval:
        lo1, hi1, lo2, hi2 = self.extremes
        return Interval(lo1, hi1) if axis == 1 else Interval(lo2, hi2)

    # --- eta curves --------------------------------------------------------
    def eta_eval(self, axis: int, theta: float, branch: str):
        """``(value, degenerate)`` for the eta-curve through ``theta_axis = theta``."""
        key = (axis, float(theta), branch)
        hit = self._eta_cache.get(key)
        if hit is not None:
            return hit
        if branch not in ("lower", "upper"):
            raise ValueError("branch must be 'lower' or 'upper'")
        t0, v = self.section(axis, theta)
        if v > TANGENCY:
            raise DomainError(
                "theta = %.12g lies outside the projection of Gamma12 on axis %d" % (theta, axis),
                value=math.exp(v),
            )
        if v > -TANGENCY or not math.isfinite(t0):
            out = (t0, True)
        else:
            if axis == 1:
                f = lambda t: self.log_chi(theta, t)  # noqa: E731
            else:
                f = lambda t: self.log_chi(t, theta)  # noqa: E731
            if branch == "lower":
                far = opt.expand_until(f, t0, -1)
                out = (opt.root(f, far, t0, ROOT_TOL), False)
            else:
                far = opt.expand_until(f, t0, +1)
                out = (opt.root(f, t0, far, ROOT_TOL), False)
        self._eta_cache[key] = out
        return out

    def eta(self, axis: int, theta: float, branch: str) -> float:
        return self.eta_eval(axis, theta, branch)[0]

    def eta_derivative(self, axis: int, theta: float, branch: str, step: float | None = None):
        proj = self.projection(axis)
        if step is None:
            step = 1e-4 * proj.width
        if theta - 2 * step <= proj.lo or theta + 2 * step >= proj.hi:
            raise DomainError(
                "theta = %.12g is within 2*step of an endpoint; the eta-curve is vertical there"
                % theta
            )
        return (self.eta(axis, theta + step, branch) - self.eta(axis, theta - step, branch)) / (
            2 * step
        )

    # --- Gamma0 ------------------------------------------------------------
    @property
    def has_gamma0(self) -> bool:
        return self._gamma0 is not None

    def gamma0(self, axis: int) -> Interval:
        if self._gamma0 is None:
            raise ValueError("this geometry carries no Gamma0 intervals")
        return self._gamma0[axis - 1]

    # --- convergence domain ------------------------------------------------
    def domain_score(self, theta) -> float:
        """Signed membership score for the domain ``[Gamma]^ex``.

        ``Gamma`` is ``Gamma12`` cut by ``theta1 < sup Gamma0_1`` and
        ``theta2 < sup Gamma0_2``; ``[S]^ex`` collects the points lying
        strictly below some point of ``S``. The score is the largest vertical
        gap ``min(eta2_upper, sup Gamma0_2) - max(theta2, eta2_lower)`` over
        admissible ``theta1' > theta1``; it is concave in ``theta1'`` and
        positive exactly on the domain. Returns ``-inf`` when no ``theta1'``
        is admissible.
        """
        t1, t2 = float(theta[0]), float(theta[1])
        proj = self.projection(1)
        cap2 = self.gamma0(2).hi
        a = max(t1, proj.lo)
        b = min(self.gamma0(1).hi, proj.hi)
        if b <= a:
            return -math.inf

        def gap(u):
            return min(self.eta(1, u, "upper"), cap2) - max(t2, self.eta(1, u, "lower"))

        return opt.golden_max(gap, a, b, tol=1e-10)[1]

    def in_domain(self, theta) -> bool:
        return self.domain_score(theta) > 0.0

    def reflected(self) -> "Geometry":
        g0 = None
        if self._gamma0 is not None:
            g0 = tuple(iv.reflect() for iv in self._gamma0)
        geo = Geometry(reflect_family(self.fam), g0, self.tol)
        if self._extremes is not None:
            lo1, hi1, lo2, hi2 = self._extremes
            geo._extremes = (-hi1, -lo1, -hi2, -lo2)
        return geo

    def boundary_samples(self, axis: int = 1, samples: int = DEFAULT_SAMPLES):
        """``(theta, eta_lower, eta_upper)`` on a uniform grid of the projection."""
        proj = self.projection(axis)
        out = []
        for t in np.linspace(proj.lo, proj.hi, samples):
            out.append((float(t), self.eta(axis, t, "lower"), self.eta(axis, t, "upper")))
        return out


# ---------------------------------------------------------------------------
# Gamma0 by bisection of the boundary kernel


def _gamma0_interval(m: BlockModel, axis: int, proj: Interval) -> Interval:
    def k(t):
        try:
            return kernel_spr(m, axis, math.exp(t)) - 1.0
        except DomainError:
            return math.inf

    grid = np.linspace(proj.lo, proj.hi, GAMMA0_GRID)
    vals = [k(t) for t in grid]
    best = int(np.argmin(vals))
    lo_b = grid[max(best - 1, 0)]
    hi_b = grid[min(best + 1, len(grid) - 1)]
    c, kc = opt.golden_min(k, lo_b, hi_b, tol=1e-10)
    if kc >= 0.0:
        raise InfeasibleError(
            "Gamma0 on axis %d is empty: boundary kernel spr >= 1 on the whole projection" % axis
        )

    def end(target):
        if k(target) < 0.0:
            return target
        if target > c:
            return opt.root(k, c, target, ROOT_TOL)
        return opt.root(k, target, c, ROOT_TOL)

    return Interval(end(proj.lo), end(proj.hi))


def _as_block_model(m):
    if isinstance(m, BlockModel):
        return m
    raise TypeError("Gamma0 needs a BlockModel (boundary families), got %r" % (m,))


@lru_cache(maxsize=64)
def geometry(m) -> Geometry:
    """Full occupation-measure geometry of a model, memoised per model.

    For a :class:`ReversedModel` the hitting-measure geometry is returned:
    the point reflection of the source model's geometry.
    """
    if isinstance(m, ReversedModel):
        return geometry(m.source).reflected()
    m = _as_block_model(m)
    geo = Geometry(m.interior)
    g0 = tuple(_gamma0_interval(m, axis, geo.projection(axis)) for axis in (1, 2))
    geo._gamma0 = g0
    return geo


def _geo(m) -> Geometry:
    if isinstance(m, Geometry):
        return m
    if isinstance(m, np.ndarray):
        return Geometry(m)
    return _interior_geometry(m)


@lru_cache(maxsize=64)
def _interior_geometry(m) -> Geometry:
    return Geometry(m.interior)


# ---------------------------------------------------------------------------
# functional interface


def gamma12_extremes(m, tol: float = ROOT_TOL):
    """``(lo1, hi1, lo2, hi2)`` extreme coordinates of ``Gamma12``."""
    return _geo(m).extremes


def eta(m, axis: int, theta: float, branch: str = "lower", tol: float = ROOT_TOL) -> float:
    """Other coordinate of the boundary of ``Gamma12`` through ``theta_axis = theta``."""
    return _geo(m).eta(axis, theta, branch)


def eta_derivative(m, axis: int, theta: float, branch: str = "upper", step: float | None = None):
    return _geo(m).eta_derivative(axis, theta, branch, step)


def gamma0(m, axis: int, tol: float = ROOT_TOL) -> Interval:
    """Interval where the axis boundary kernel has spectral radius below one."""
    if isinstance(m, Geometry):
        return m.gamma0(axis)
    return geometry(m).gamma0(axis)


@dataclass
class RegionReport:
    extremes: tuple
    gamma0_1: Interval
    gamma0_2: Interval
    samples: list
    tolerance: float

    def to_dict(self, with_samples: bool = False) -> dict:
        lo1, hi1, lo2, hi2 = self.extremes
        out = {
            "theta1_lower": lo1,
            "theta1_upper": hi1,
            "theta2_lower": lo2,
            "theta2_upper": hi2,
            "gamma0_1": self.gamma0_1.to_dict(),
            "gamma0_2": self.gamma0_2.to_dict(),
            "tolerance": self.tolerance,
            "n_samples": len(self.samples),
        }
        if with_samples:
            out["samples"] = [list(s) for s in self.samples]
        return out


def region_report(m, samples: int = DEFAULT_SAMPLES) -> RegionReport:
    geo = geometry(m)
    return RegionReport(
        extremes=geo.extremes,
        gamma0_1=geo.gamma0(1),
        gamma0_2=geo.gamma0(2),
        samples=geo.boundary_samples(1, samples),
        tolerance=geo.tol,
    )
