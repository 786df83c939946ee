"""Exact desk-scale ground truth on a truncated lattice.

The grid is ``{0..N}^2`` with the origin removed. Transitions that leave the
grid are dropped (absorbing truncation), so every computed measure is an
entry-wise lower bound of the infinite one and increases with ``N``.

Layout: level ``(x1, x2) != (0, 0)`` with phase ``j`` has index
``(x1*(N+1) + x2 - 1) * s0 + j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.special import logsumexp

from .errors import ConvergenceError, DomainError, QBDError
from .gmatrix import col_gf, phi_star, row_gf, solve_G
from .model import STEPS, BlockModel, ReversedModel

MAX_WEIGHTS = 60_000_000
DIVERGENCE_WINDOW = 1000
NEUMANN_MAX_ITER = 2_000_000
DEFAULT_TOL = 1e-12


# ---------------------------------------------------------------------------
# truncated operator


@dataclass
class TruncatedOperator:
    N: int
    s0: int
    T: sp.csr_matrix          # rows/cols: grid states without the origin
    t01: np.ndarray           # (s0, n): origin -> grid
    t10: np.ndarray           # (n, s0): grid -> origin
    policy: str = "absorbing"

    @property
    def n_states(self) -> int:
        return self.T.shape[0]

    def level_index(self, x1: int, x2: int) -> int:
        k = x1 * (self.N + 1) + x2
        if k == 0:
            raise IndexError("the origin is not part of the truncated operator")
        return k - 1

    def block(self, x, y) -> np.ndarray:
        """Dense block ``T[x, y]`` between two non-origin levels."""
        i = self.level_index(*x) * self.s0
        j = self.level_index(*y) * self.s0
        return self.T[i:i + self.s0, j:j + self.s0].toarray()


def _levels(N):
    x1, x2 = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    return x1.ravel(), x2.ravel()


def build_truncated(m, N: int) -> TruncatedOperator:
    """Absorbing truncation of the operator of ``m`` on ``{0..N}^2``."""
    if N < 4:
        raise ValueError("N must be at least 4")
    s0 = m.s0
    if (N + 1) ** 2 * 9 * s0 * s0 > MAX_WEIGHTS:
        raise MemoryError("truncation N=%d with s0=%d exceeds the weight budget" % (N, s0))
    x1, x2 = _levels(N)
    cls1, cls2 = np.minimum(x1, 2), np.minimum(x2, 2)
    flat = x1 * (N + 1) + x2
    rows, cols, vals = [], [], []
    t01 = np.zeros((s0, (N + 1) ** 2 * s0))
    t10 = np.zeros(((N + 1) ** 2 * s0, s0))
    for c1 in range(3):
        for c2 in range(3):
            in_cls = (cls1 == c1) & (cls2 == c2)
            for d1 in STEPS:
                for d2 in STEPS:
                    b = np.asarray(m.row_block(c1, c2, d1, d2))
                    if not b.any():
                        continue
                    y1, y2 = x1 + d1, x2 + d2
                    ok = in_cls & (y1 >= 0) & (y1 <= N) & (y2 >= 0) & (y2 <= N)
                    src = flat[ok]
                    tgt = (y1 * (N + 1) + y2)[ok]
                    jj, kk = np.nonzero(b)
                    r = (src[:, None] * s0 + jj[None, :]).ravel()
                    c = (tgt[:, None] * s0 + kk[None, :]).ravel()
                    v = np.broadcast_to(b[jj, kk], (len(src), len(jj))).ravel()
                    rows.append(r)
                    cols.append(c)
                    vals.append(v)
    rows = np.concatenate(rows) if rows else np.zeros(0, int)
    cols = np.concatenate(cols) if cols else np.zeros(0, int)
    vals = np.concatenate(vals) if vals else np.zeros(0)
    full = sp.csr_matrix((vals, (rows, cols)), shape=((N + 1) ** 2 * s0,) * 2)
    keep = np.arange(s0, full.shape[0])
    origin = np.arange(s0)
    t01 = full[origin][:, keep].toarray()
    t10 = full[keep][:, origin].toarray()
    T = full[keep][:, keep].tocsr()
    T.eliminate_zeros()
    return TruncatedOperator(N=N, s0=s0, T=T, t01=t01, t10=t10)


# ---------------------------------------------------------------------------
# measures


@dataclass
class OccupationField:
    """Occupation (``nu``) or hitting (``g``) measure on the truncated grid.

    ``values[x1, x2]`` is an ``s0 x s0`` matrix indexed ``[j0, j]`` for both
    kinds (the hitting measure is stored transposed so that the origin phase
    ``j0`` is always the row index); ``values[0, 0]`` is zero.
    """

    kind: str
    N: int
    s0: int
    values: np.ndarray            # (N+1, N+1, s0, s0)
    tol: float
    terms: int
    method: str
    residual: float
    extra: dict = dc_field(default_factory=dict)

    def at(self, x1: int, x2: int) -> np.ndarray:
        """The block in its natural orientation: ``nu_x[j0, j]`` or ``g_x[j, j0]``."""
        v = self.values[x1, x2]
        return v if self.kind == "occupation" else v.T

    def pooled(self) -> np.ndarray:
        return self.values.sum(axis=(2, 3))


def _neumann(apply, start, tol, maxiter=NEUMANN_MAX_ITER):
    """Sum ``start + apply(start) + apply^2(start) + ...``.

    Stops once the newest term is below ``tol`` times the accumulated value in
    every entry the term touches (so far tails converge to relative accuracy,
    not just the bulk), or the term vanishes.
    """
    acc = start.copy()
    term = start
    best = math.inf
    stale = 0
    for k in range(1, maxiter + 1):
        term = apply(term)
        tmax = np.abs(term).max() if term.size else 0.0
        if tmax == 0.0:
            return acc, k
        acc += term
        nz = term > 0
        if (term[nz] <= tol * acc[nz]).all():
            return acc, k
        if tmax < best:
            best, stale = tmax, 0
        else:
            stale += 1
            if stale >= DIVERGENCE_WINDOW:
                raise DomainError(
                    "Neumann series terms stopped decreasing; the potential matrix of "
                    "the truncation looks infinite"
                )
        if not np.isfinite(tmax):
            raise DomainError("Neumann series overflowed")
    raise ConvergenceError("Neumann series did not converge in %d terms" % maxiter)


def _direct(T, rhs, transpose):
    n = T.shape[0]
    A = (sp.identity(n, format="csc") - (T.T if transpose else T)).tocsc()
    lu = splu(A)
    sol = lu.solve(np.ascontiguousarray(rhs))
    if not np.isfinite(sol).all():
        raise DomainError("direct solve produced non-finite values")
    return sol


def _field(op, kind, vec, tol, terms, method, residual):
    N, s0 = op.N, op.s0
    full = np.zeros(((N + 1) ** 2, s0, s0))
    # vec: (n, s0) with [state, j0]
    blocks = vec.reshape(-1, s0, s0)  # [level, j, j0]
    full[1:] = np.transpose(blocks, (0, 2, 1))
    values = full.reshape(N + 1, N + 1, s0, s0)
    return OccupationField(kind, N, s0, values, tol, terms, method, residual)


def _residual(T, vec, src, transpose):
    applied = T.T @ vec if transpose else T @ vec
    return float(np.abs(vec - applied - src).max())


def occupation_measure(op: TruncatedOperator, tol: float = DEFAULT_TOL,
                       method: str = "neumann") -> OccupationField:
    """``nu = t01 sum_n T^n`` on the truncation (row-vector recursion)."""
    src = op.t01.T.copy()  # (n, s0): column j0 is the row vector t01[j0]
    TT = op.T.T.tocsr()
    if method == "neumann":
        vec, terms = _neumann(lambda v: TT @ v, src, tol)
    elif method == "direct":
        vec, terms = _direct(op.T, src, transpose=True), 0
    else:
        raise ValueError("method must be 'neumann' or 'direct'")
    res = _residual(op.T, vec, src, transpose=True)
    return _field(op, "occupation", vec, tol, terms, method, res)


def hitting_measure(op: TruncatedOperator, tol: float = DEFAULT_TOL,
                    method: str = "neumann") -> OccupationField:
    """``g = sum_n T^n t10`` on the truncation (column-vector recursion)."""
    src = op.t10.copy()
    if method == "neumann":
        vec, terms = _neumann(lambda v: op.T @ v, src, tol)
    elif method == "direct":
        vec, terms = _direct(op.T, src, transpose=False), 0
    else:
        raise ValueError("method must be 'neumann' or 'direct'")
    res = _residual(op.T, vec, src, transpose=False)
    return _field(op, "hitting", vec, tol, terms, method, res)


# ---------------------------------------------------------------------------
# empirical slopes


class UnreachableRayError(QBDError):
    """A ray passes through zero values, so its log-slope is undefined."""


@dataclass
class RayEstimate:
    c: tuple
    offset: tuple
    window: tuple
    n: np.ndarray
    pooled_slope: float
    r2: float
    phase_slopes: np.ndarray      # [j0, j]
    pooled_values: np.ndarray

    @property
    def max_phase_spread(self) -> float:
        """Largest relative deviation of a per-phase slope from the pooled one."""
        return float(np.abs(self.phase_slopes - self.pooled_slope).max() / abs(self.pooled_slope))


def _ols(n, y):
    A = np.vstack([n, np.ones_like(n)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    ss_res = float(((y - fit) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


def default_window(N: int, c) -> tuple:
    """Steps ``[0.3 L, 0.7 L]`` where ``L`` is the ray length to the grid edge."""
    L = N // max(c)
    return int(math.ceil(0.3 * L)), int(0.7 * L)


def empirical_decay(field: OccupationField, c, window=None, margin=None, offset=(0, 0)):
    """Least-squares slope of ``log`` values at ``offset + n c`` over ``n`` in ``window``."""
    c = tuple(int(v) for v in c)
    if min(c) < 0 or c == (0, 0):
        raise ValueError("direction must be a nonzero vector of nonnegative integers")
    N = field.N
    if window is None:
        window = default_window(N, c)
    if margin is None:
        margin = max(3, int(0.15 * N))
    n0, n1 = window
    n = np.arange(n0, n1 + 1)
    px = offset[0] + n * c[0]
    py = offset[1] + n * c[1]
    if px.max() > N - margin or py.max() > N - margin or n0 < 0 or n1 <= n0:
        raise ValueError(
            "window %s along %s leaves the grid or its margin %d" % (window, c, margin)
        )
    blocks = field.values[px, py]  # (len, s0, s0)
    pooled = blocks.sum(axis=(1, 2))
    if (blocks <= 0).any():
        raise UnreachableRayError("zero values on the ray %s in window %s" % (c, window))
    slope, r2 = _ols(n.astype(float), np.log(pooled))
    s0 = field.s0
    phase = np.empty((s0, s0))
    for a in range(s0):
        for b in range(s0):
            phase[a, b] = _ols(n.astype(float), np.log(blocks[:, a, b]))[0]
    return RayEstimate(c, tuple(offset), (n0, n1), n, slope, r2, phase, pooled)


def ray_values(field: OccupationField, c, offset=(0, 0)):
    """``n`` and blocks along ``offset + n c`` up to the grid edge."""
    c = tuple(int(v) for v in c)
    L = (field.N - max(offset)) // max(c)
    n = np.arange(0, L + 1)
    return n, field.values[offset[0] + n * c[0], offset[1] + n * c[1]]


# ---------------------------------------------------------------------------
# compensation identity


def compensation_terms(m: BlockModel, field: OccupationField, axis: int, z: float, K: int,
                       tol: float = DEFAULT_TOL):
    """Both sides of the boundary generating-function identity along ``axis``.

    For axis 1 the left side is ``sum_{x1 >= 1} z^x1 nu_(x1,0)`` and the right
    side is

        [ t01 terms + sum_{k=1}^{K} nu_(0,k) (A2hat(z, G) - G) G^(k-1)
          - nu_(1,0) A1[-1,0] - nu_(0,1) A2[0,-1] - nu_(1,1) A12[-1,-1] ] Phi1*(z)

    where the t01 terms are ``z A0[1,0] + A0[0,1] G + z A0[1,1] G`` (the
    contribution of the first jump out of the origin). Axis 2 is the mirror.
    Returns ``(left, right)`` as ``s0 x s0`` arrays.
    """
    if field.kind != "occupation":
        raise ValueError("the compensation identity is stated for the occupation measure")
    g = solve_G(m, axis, z, tol=tol)
    G = g.G
    phi = phi_star(m, axis, z, tol=tol, g=g).matrix
    nu = field.values
    N = field.N
    if K > N:
        raise ValueError("boundary cutoff K exceeds the truncation size")
    e = m.family("empty")
    b1, b2, b12 = m.family("b1"), m.family("b2"), m.family("b12")

    def blk(fam, i1, i2):
        return fam[i1 + 1, i2 + 1]

    if axis == 1:
        xs = np.arange(1, N + 1)
        left = np.einsum("k,kab->ab", z ** xs.astype(float), nu[1:, 0])
        other = b2
        hat = row_gf(other, -1, z) + row_gf(other, 0, z) @ G + row_gf(other, 1, z) @ G @ G
        source = z * blk(e, 1, 0) + blk(e, 0, 1) @ G + z * blk(e, 1, 1) @ G
        wall = [nu[0, k] for k in range(1, K + 1)]
    else:
        xs = np.arange(1, N + 1)
        left = np.einsum("k,kab->ab", z ** xs.astype(float), nu[0, 1:])
        other = b1
        hat = col_gf(other, -1, z) + col_gf(other, 0, z) @ G + col_gf(other, 1, z) @ G @ G
        source = z * blk(e, 0, 1) + blk(e, 1, 0) @ G + z * blk(e, 1, 1) @ G
        wall = [nu[k, 0] for k in range(1, K + 1)]
    corr = -(nu[1, 0] @ blk(b1, -1, 0) + nu[0, 1] @ blk(b2, 0, -1) + nu[1, 1] @ blk(b12, -1, -1))
    D = hat - G
    acc = np.zeros_like(G)
    P = np.eye(G.shape[0])
    for v in wall:
        acc += v @ D @ P
        P = P @ G
    right = (source + corr + acc) @ phi
    return left, right


def compensation_residual(m: BlockModel, field: OccupationField, axis: int, z: float, K: int,
                          tol: float = DEFAULT_TOL, relative: bool = True) -> float:
    """``|left - right|_inf`` (divided by ``|left|_inf`` when ``relative``)."""
    left, right = compensation_terms(m, field, axis, z, K, tol)
    err = float(np.abs(left - right).sum(axis=1).max())
    if relative:
        scale = float(np.abs(left).sum(axis=1).max())
        return err / scale if scale > 0 else err
    return err


# ---------------------------------------------------------------------------
# domain probe


@dataclass
class ProbeResult:
    verdict: str
    sizes: tuple
    log_partial_sums: list
    log_increments: list
    ratios: list


def domain_probe(field: OccupationField, theta, sizes=(40, 80, 120),
                 shrink: float = 0.5, grow: float = 2.0) -> ProbeResult:
    """Classify ``theta`` by the growth of ``sum e^<theta,x> |nu_x|`` over boxes.

    The box of size ``n`` is ``max(x1, x2) <= n``. With increments between
    successive boxes, the verdict is ``inside`` if every increment ratio is at
    most ``shrink``, ``outside`` if every ratio is at least ``grow``, and
    ``inconclusive`` otherwise.
    """
    sizes = tuple(int(s) for s in sizes)
    if list(sizes) != sorted(set(sizes)):
        raise ValueError("sizes must be strictly increasing")
    if sizes[-1] > field.N:
        raise ValueError("largest size exceeds the field's truncation")
    N = field.N
    x1, x2 = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    mass = np.abs(field.values).sum(axis=(2, 3))
    with np.errstate(divide="ignore"):
        logw = np.log(mass) + theta[0] * x1 + theta[1] * x2
    ring = np.maximum(x1, x2)
    logs, incs = [], []
    prev = 0
    for s in sizes:
        sel = (ring > prev) & (ring <= s) if prev else (ring <= s)
        incs.append(float(logsumexp(logw[sel])))
        logs.append(float(logsumexp(logw[ring <= s])))
        prev = s
    ratios = [math.exp(b - a) for a, b in zip(incs, incs[1:])]
    if all(r <= shrink for r in ratios):
        verdict = "inside"
    elif all(r >= grow for r in ratios):
        verdict = "outside"
    else:
        verdict = "inconclusive"
    return ProbeResult(verdict, sizes, logs, incs, ratios)


def duality_gap(m, N: int, tol: float = DEFAULT_TOL, method: str = "neumann") -> float:
    """Max entry-wise gap between ``g(m)`` and the occupation measure of the transpose."""
    g = hitting_measure(build_truncated(m, N), tol, method)
    rev = ReversedModel(m) if isinstance(m, BlockModel) else m.source
    nu_r = occupation_measure(build_truncated(rev, N), tol, method)
    return float(np.abs(g.values - nu_r.values).max())
