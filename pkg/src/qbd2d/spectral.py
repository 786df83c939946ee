"""Perron-Frobenius quantities of finite nonnegative matrices."""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError

DEFAULT_TOL = 1e-12
MAX_ITER = 100_000


@dataclass(frozen=True)
class PerronResult:
    """Dominant eigenpair of a nonnegative matrix.

    Attributes:
        value: Spectral radius estimate.
        right: Right Perron vector, unit 1-norm.
        left: Left Perron vector, unit 1-norm.
        iterations: Power-iteration steps taken (right and left combined).
        residual: ``max(|M right - value right|_inf, |left M - value left|_inf)``.
    """

    value: float
    right: np.ndarray
    left: np.ndarray
    iterations: int
    residual: float


def _power(M, tol, shift, maxiter):
    n = M.shape[0]
    S = M + shift * np.eye(n)
    v = np.full(n, 1.0 / n)
    lam = 0.0
    for it in range(1, maxiter + 1):
        w = S @ v
        s = w.sum()
        if s == 0.0:
            # nilpotent along v: the spectral radius is zero on this subspace
            return 0.0, v, it, float(np.abs(M @ v).max())
        w /= s
        lam = s - shift
        res = float(np.abs(M @ w - lam * w).max())
        if res <= tol * max(1.0, lam):
            return lam, w, it, res
        v = w
    raise ConvergenceError(
        "power iteration did not converge in %d steps (periodic or degenerate matrix?)" % maxiter
    )


def perron(M, tol=DEFAULT_TOL, shift=None, maxiter=MAX_ITER):
    """Spectral radius and Perron vectors by shifted power iteration.

    The iteration runs on ``M + shift*I`` (``shift`` defaults to ``tol``) and
    subtracts the shift afterwards. Starting from the uniform vector, it
    converges for primitive matrices; a periodic matrix whose Perron vector is
    not reached raises :class:`ConvergenceError` unless a larger ``shift`` is
    supplied.

    For reducible input only ``value`` is meaningful.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("perron expects a square matrix")
    if (M < 0).any():
        raise ValueError("perron expects a nonnegative matrix")
    if shift is None:
        shift = tol
    if not M.any():
        n = M.shape[0]
        u = np.full(n, 1.0 / n)
        return PerronResult(0.0, u, u.copy(), 0, 0.0)
    lam, right, it_r, res_r = _power(M, tol, shift, maxiter)
    lam_l, left, it_l, res_l = _power(M.T, tol, shift, maxiter)
    return PerronResult(
        value=float(lam),
        right=right,
        left=left,
        iterations=it_r + it_l,
        residual=max(res_r, res_l),
    )


def spr(M):
    """Spectral radius of a nonnegative matrix via a dense eigensolver.

    This is the fast path used inside root-finding loops; for a nonnegative
    matrix the Perron root is the eigenvalue of largest real part.
    """
    M = np.asarray(M, dtype=float)
    if M.shape == (1, 1):
        return float(M[0, 0])
    if M.shape == (2, 2):
        a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
        disc = (a - d) ** 2 + 4.0 * b * c
        return float(0.5 * (a + d + np.sqrt(max(disc, 0.0))))
    return float(np.linalg.eigvals(M).real.max())


def cp_finite(M, tol=DEFAULT_TOL):
    """Convergence parameter ``1/spr(M)``; ``inf`` when ``spr(M) == 0``."""
    value = perron(M, tol=tol).value
    if value <= 0.0:
        return float("inf")
    return 1.0 / value
