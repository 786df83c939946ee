"""Scalar search helpers: bracketing, golden-section, bracketed roots."""

import math

import numpy as np
from scipy.optimize import brentq

from .errors import InfeasibleError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

# exp() overflows past ~709; nothing meaningful lives beyond this in theta.
THETA_LIMIT = 600.0


def bracket_min(f, x0=0.0, step=0.5, limit=THETA_LIMIT):
    """Expand geometrically from ``x0`` until ``(a, c, b)`` brackets a
    minimum of the convex function ``f``: ``f(c) <= f(a)`` and ``f(c) <= f(b)``.
    """
    a, c, b = x0 - step, x0, x0 + step
    fa, fc, fb = f(a), f(c), f(b)
    while not (fc <= fa and fc <= fb):
        step *= 2.0
        if fa < fb:
            b, fb, c, fc = c, fc, a, fa
            a = c - step
            fa = f(a)
        else:
            a, fa, c, fc = c, fc, b, fb
            b = c + step
            fb = f(b)
        if max(abs(a), abs(b)) > limit:
            raise InfeasibleError("no minimum found within |theta| <= %g" % limit)
    return a, c, b


def golden_min(f, a, b, tol=1e-10, maxiter=200):
    """Golden-section minimization of a unimodal ``f`` on ``[a, b]``.

    Returns ``(x, f(x))``. The endpoints are compared explicitly so that a
    minimum sitting on the boundary of the interval is not missed.
    """
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1 = f(x1)
    f2 = f(x2)
    it = 0
    while b - a > tol and it < maxiter:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        it += 1
    x, fx = (x1, f1) if f1 <= f2 else (x2, f2)
    for xe in (a, b):
        fe = f(xe)
        if fe < fx:
            x, fx = xe, fe
    return x, fx


def golden_max(f, a, b, tol=1e-10, maxiter=200):
    x, fx = golden_min(lambda t: -f(t), a, b, tol=tol, maxiter=maxiter)
    return x, -fx


def root(f, a, b, xtol=1e-13):
    """Bracketed root of ``f`` on ``[a, b]`` (sign change required)."""
    return brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)


def expand_until(f, x0, direction, step=0.5, limit=THETA_LIMIT):
    """Walk from ``x0`` in ``direction`` until ``f`` turns positive.

    Returns the first point with ``f > 0``; used to find the outer end of a
    root bracket for a convex function that grows without bound.
    """
    x = x0
    while True:
        x = x + direction * step
        if abs(x) > limit:
            raise InfeasibleError("function stays nonpositive up to |theta| = %g" % limit)
        if f(x) > 0:
            return x
        step *= 2.0
