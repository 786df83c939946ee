"""Generating functions of the blocks, G-matrix functions and boundary series.

For the interior family ``A`` and a positive argument ``x`` the axis-1
G-matrix is the minimal nonnegative solution of

    A_{*,-1}(x) + A_{*,0}(x) G + A_{*,1}(x) G^2 = G,    A_{*,j}(x) = sum_i x^i A_{i,j},

and the axis-2 one uses the column sums ``A_{i,*}(x) = sum_j x^j A_{i,j}``.
``G`` is finite exactly when the section ``min_t chi`` through ``log x`` is at
most one, which is how the solver decides whether ``x`` is admissible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import _optimize as opt
from .errors import ConvergenceError, DomainError, InfeasibleError
from .spectral import perron, spr

DEFAULT_TOL = 1e-12
# Log-chi slack below which a section minimum counts as touching 1.
TANGENCY = 1e-9
LR_MAX_ITER = 200
NEWTON_MAX_ITER = 60
FP_MAX_ITER = 1_000_000
SERIES_MAX = 18  # explicit enumeration only; the height recursion has no limit


def _family(m) -> np.ndarray:
    if isinstance(m, np.ndarray):
        return m
    return m.interior


def _boundary_family(m, axis):
    return m.family("b1" if axis == 1 else "b2")


# ---------------------------------------------------------------------------
# generating functions


def full_gf(fam: np.ndarray, z: float, w: float) -> np.ndarray:
    """``sum_{i,j} z^i w^j fam[i, j]``."""
    zp = np.array([1.0 / z, 1.0, z])
    wp = np.array([1.0 / w, 1.0, w])
    return np.einsum("i,j,ijab->ab", zp, wp, fam)


def row_gf(fam: np.ndarray, j: int, z: float) -> np.ndarray:
    """``sum_i z^i fam[i, j]`` (displacement ``j`` fixed in coordinate 2)."""
    zp = np.array([1.0 / z, 1.0, z])
    return np.einsum("i,iab->ab", zp, fam[:, j + 1])


def col_gf(fam: np.ndarray, i: int, w: float) -> np.ndarray:
    """``sum_j w^j fam[i, j]`` (displacement ``i`` fixed in coordinate 1)."""
    wp = np.array([1.0 / w, 1.0, w])
    return np.einsum("j,jab->ab", wp, fam[i + 1])


def axis_triplet(fam: np.ndarray, axis: int, x: float):
    """``(down, local, up)`` blocks of the one-dimensional QBD along ``axis``."""
    if axis == 1:
        return tuple(row_gf(fam, j, x) for j in (-1, 0, 1))
    if axis == 2:
        return tuple(col_gf(fam, i, x) for i in (-1, 0, 1))
    raise ValueError("axis must be 1 or 2")


@dataclass(frozen=True)
class GfEval:
    argument: tuple
    matrix: np.ndarray


def eval_gf(m, family: str, slice_=("full",), z: float = 1.0, w: float = 1.0) -> GfEval:
    """Evaluate a block generating function.

    ``slice_`` is ``("full",)``, ``("row", j)`` for ``sum_i z^i A_{i,j}`` or
    ``("col", i)`` for ``sum_j w^j A_{i,j}``.
    """
    if z <= 0 or w <= 0:
        raise ValueError("generating-function arguments must be positive")
    fam = m.family(family) if family != "b12" else _family(m)
    kind = slice_[0]
    if kind == "full":
        mat = full_gf(fam, z, w)
    elif kind == "row":
        mat = row_gf(fam, slice_[1], z)
    elif kind == "col":
        mat = col_gf(fam, slice_[1], w)
    else:
        raise ValueError("unknown slice %r" % (slice_,))
    return GfEval((z, w), mat)


def chi(m, theta1: float, theta2: float) -> float:
    """Spectral radius of the interior generating function at ``(e^theta1, e^theta2)``."""
    return spr(full_gf(_family(m), math.exp(theta1), math.exp(theta2)))


def log_chi(fam: np.ndarray, theta1: float, theta2: float) -> float:
    v = spr(full_gf(fam, math.exp(theta1), math.exp(theta2)))
    return math.log(v) if v > 0 else -math.inf


def section_min(fam: np.ndarray, axis: int, theta: float, tol: float = 1e-10):
    """Minimum over the other coordinate of ``log chi`` with ``theta_axis = theta``.

    Returns ``(argmin, value)``. When ``log chi`` keeps decreasing towards an
    infinite coordinate (an up or down block vanishes), the infimum is the
    limit ``log spr(local)`` and ``argmin`` is the corresponding infinity.
    """
    if axis == 1:
        f = lambda t: log_chi(fam, theta, t)  # noqa: E731
    else:
        f = lambda t: log_chi(fam, t, theta)  # noqa: E731
    try:
        a, _, b = opt.bracket_min(f, 0.0)
    except InfeasibleError:
        _, local, _ = axis_triplet(fam, axis, math.exp(theta))
        lim = spr(local)
        value = math.log(lim) if lim > 0 else -math.inf
        side = math.inf if f(1.0) < f(-1.0) else -math.inf
        return side, value
    return opt.golden_min(f, a, b, tol=tol)


# ---------------------------------------------------------------------------
# G-matrix


@dataclass(frozen=True)
class GMatrixEval:
    """Minimal nonnegative solution of the axis quadratic at one argument.

    ``endpoint`` marks arguments on the tangency of the section (a branch
    point), where convergence is sublinear and the looser tolerance
    ``sqrt(tol)`` applies.
    """

    axis: int
    argument: float
    G: np.ndarray
    residual: float
    spr_G: float
    iterations: int
    method: str
    endpoint: bool = False


def quadratic_residual(down, local, up, G) -> float:
    R = down + local @ G + up @ G @ G - G
    return float(np.abs(R).sum(axis=1).max())


def _log_reduction(down, local, up, tol):
    """Logarithmic reduction; returns the last finite iterate (a lower bound).

    At a branch point the doubling steps become ill-conditioned; the loop
    then stops early and the caller finishes with the natural iteration.
    """
    n = down.shape[0]
    eye = np.eye(n)
    inv = np.linalg.inv(eye - local)
    b0 = inv @ down
    b2 = inv @ up
    G = b0.copy()
    T = b2.copy()
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for it in range(1, LR_MAX_ITER + 1):
            U = b0 @ b2 + b2 @ b0
            try:
                M = np.linalg.inv(eye - U)
            except np.linalg.LinAlgError:
                return G, it
            b0 = M @ (b0 @ b0)
            b2 = M @ (b2 @ b2)
            inc = T @ b0
            Gn = G + inc
            if not np.isfinite(Gn).all() or (inc < 0).any() or (M < 0).any():
                return G, it
            G = Gn
            T = T @ b2
            if np.abs(inc).max() <= tol * max(1.0, np.abs(G).max()):
                return G, it
    return G, LR_MAX_ITER


def _newton(down, local, up, G0, tol, maxiter=NEWTON_MAX_ITER):
    """Newton steps for the quadratic, started from a lower bound ``G0``.

    Each step solves ``X - local X - up G X - up X G = F(G) - G`` (row-major
    Kronecker form). From below the iterates increase to the minimal
    solution; near a branch point the rate drops from quadratic to one half.
    Returns the best iterate found.
    """
    n = down.shape[0]
    eye = np.eye(n)
    G = G0
    best, best_res = G0, quadratic_residual(down, local, up, G0)
    for _ in range(maxiter):
        if best_res <= 0.5 * tol:
            break
        R = down + local @ G + up @ G @ G - G
        L = np.kron(eye, eye) - np.kron(local + up @ G, eye) - np.kron(up, G.T)
        try:
            X = np.linalg.solve(L, R.ravel()).reshape(n, n)
        except np.linalg.LinAlgError:
            break
        G = np.maximum(G + X, 0.0)
        res = quadratic_residual(down, local, up, G)
        if not np.isfinite(res) or res >= best_res:
            break
        best, best_res = G, res
    return best


def _fixed_point(down, local, up, G0, tol, maxiter):
    # The increment F(G) - G is the quadratic residual of G, measured in the
    # same row-sum norm; from below the increments shrink, so stopping at
    # tol / 2 leaves the returned iterate below tol.
    G = G0
    for it in range(1, maxiter + 1):
        Gn = down + local @ G + up @ G @ G
        if not np.isfinite(Gn).all() or np.abs(Gn).max() > 1e100:
            raise DomainError("G iteration diverged")
        delta = float(np.abs(Gn - G).sum(axis=1).max())
        G = Gn
        if delta <= 0.5 * tol:
            return G, it
    raise ConvergenceError("G fixed-point iteration hit the cap of %d steps" % maxiter)


def solve_G(m, axis: int, x: float, tol: float = DEFAULT_TOL, method: str = "auto",
            maxiter: int = FP_MAX_ITER) -> GMatrixEval:
    """Minimal nonnegative solution of the axis-``axis`` quadratic at ``x``.

    ``method="auto"`` runs logarithmic reduction, polishes its output (a lower
    bound) with Newton steps if the residual is above ``tol``, and falls back
    to the natural fixed-point iteration if that still misses the tolerance.
    ``method="fixed_point"`` runs the natural iteration from the zero matrix.
    """
    if x <= 0:
        raise ValueError("argument must be positive")
    fam = _family(m)
    _, gap = section_min(fam, axis, math.log(x))
    if gap > TANGENCY:
        raise DomainError(
            "log x = %.6g lies outside the projection of the region on axis %d"
            % (math.log(x), axis),
            value=math.exp(gap),
        )
    endpoint = gap > -TANGENCY
    down, local, up = axis_triplet(fam, axis, x)
    eff_tol = math.sqrt(tol) if endpoint else tol
    iters = 0
    if method == "auto":
        used = "log-reduction"
        try:
            G, iters = _log_reduction(down, local, up, tol)
        except np.linalg.LinAlgError:
            G, used = np.zeros_like(down), "fixed-point"
        if quadratic_residual(down, local, up, G) > tol:
            G = _newton(down, local, up, G, tol)
            used += "+newton"
        if quadratic_residual(down, local, up, G) > eff_tol:
            G, extra = _fixed_point(down, local, up, G, eff_tol, maxiter)
            iters += extra
            used += "+fixed-point"
    elif method == "fixed_point":
        used = "fixed-point"
        G, iters = _fixed_point(down, local, up, np.zeros_like(down), eff_tol, maxiter)
    else:
        raise ValueError("unknown method %r" % method)
    G = np.maximum(G, 0.0)
    res = quadratic_residual(down, local, up, G)
    if res > eff_tol and not endpoint:
        raise ConvergenceError("G residual %.3g above tolerance %.3g" % (res, eff_tol))
    return GMatrixEval(
        axis=axis,
        argument=float(x),
        G=G,
        residual=res,
        spr_G=perron(G, tol=tol).value,
        iterations=iters,
        method=used,
        endpoint=endpoint,
    )


def g_series_oracle(m, axis: int, x: float, n_max: int) -> np.ndarray:
    """Partial sum of the first-passage series for ``G`` up to path length ``n_max``.

    Terms are products of ``down/local/up`` blocks along index sequences whose
    running sum stays nonnegative and first reaches -1 at the last step. The
    sum is accumulated by a dynamic program over the running height; every
    such sequence is counted exactly once.
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    down, local, up = axis_triplet(_family(m), axis, x)
    s0 = down.shape[0]
    heights = [np.eye(s0)]  # heights[h]: prefix sums ending at height h
    total = np.zeros((s0, s0))
    for _ in range(n_max):
        total = total + heights[0] @ down
        nxt = [np.zeros((s0, s0)) for _ in range(len(heights) + 1)]
        for h, P in enumerate(heights):
            if h > 0:
                nxt[h - 1] += P @ down
            nxt[h] += P @ local
            nxt[h + 1] += P @ up
        heights = nxt
    return total


def g_series_bruteforce(m, axis: int, x: float, n_max: int) -> np.ndarray:
    """Same partial sum by explicit enumeration of index sequences (small ``n_max``)."""
    if n_max > SERIES_MAX:
        raise ValueError("explicit enumeration is limited to n_max <= %d" % SERIES_MAX)

    blocks = dict(zip((-1, 0, 1), axis_triplet(_family(m), axis, x)))
    s0 = blocks[0].shape[0]
    total = np.zeros((s0, s0))
    for n in range(1, n_max + 1):
        for seq in product((-1, 0, 1), repeat=n):
            partial = np.cumsum(seq)
            if partial[-1] != -1 or (partial[:-1] < 0).any():
                continue
            P = np.eye(s0)
            for i in seq:
                P = P @ blocks[i]
            total += P
    return total


# ---------------------------------------------------------------------------
# boundary series


@dataclass(frozen=True)
class PhiStarEval:
    axis: int
    argument: float
    matrix: np.ndarray
    kernel: np.ndarray
    kernel_spr: float


def phi_kernel(m, axis: int, x: float, G: np.ndarray) -> np.ndarray:
    fam = _boundary_family(m, axis)
    if axis == 1:
        return row_gf(fam, 0, x) + row_gf(fam, 1, x) @ G
    return col_gf(fam, 0, x) + col_gf(fam, 1, x) @ G


def phi_star(m, axis: int, x: float, tol: float = DEFAULT_TOL, g: GMatrixEval | None = None):
    """Geometric series of the boundary kernel at ``x``; finite iff its spr < 1."""
    if g is None:
        g = solve_G(m, axis, x, tol=tol)
    K = phi_kernel(m, axis, x, g.G)
    rho = spr(K)
    if rho >= 1.0:
        raise DomainError("boundary kernel spectral radius %.12g >= 1" % rho, value=rho)
    n = K.shape[0]
    mat = np.linalg.solve(np.eye(n) - K, np.eye(n))
    return PhiStarEval(axis=axis, argument=float(x), matrix=mat, kernel=K, kernel_spr=rho)


def kernel_spr(m, axis: int, x: float, tol: float = DEFAULT_TOL) -> float:
    g = solve_G(m, axis, x, tol=tol)
    return spr(phi_kernel(m, axis, x, g.G))
