"""Dense Cholesky, positive-definiteness test and a bisection lambda_min."""

from __future__ import annotations

import math

import numpy as np

from .core import StructuralError


def _as_sym(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = np.diag(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise StructuralError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise StructuralError("matrix has non-finite entries")
    return M


def cholesky(M, eps_pivot: float = 0.0) -> np.ndarray | None:
    """Lower factor ``L`` with ``L @ L.T == M``, or ``None`` when not PD.

    A pivot is accepted only if it exceeds ``eps_pivot * max(1, max diag)``.
    A 1-D argument is read as a diagonal matrix.
    """
    if eps_pivot < 0:
        raise ValueError("eps_pivot must be nonnegative")
    A = _as_sym(M)
    n = A.shape[0]
    L = np.zeros_like(A)
    if n == 0:
        return L
    threshold = eps_pivot * max(1.0, float(np.max(np.diag(A))))
    with np.errstate(over="ignore", invalid="ignore"):
        return _factor(A, L, threshold)


def _factor(A: np.ndarray, L: np.ndarray, threshold: float) -> np.ndarray | None:
    n = A.shape[0]
    for j in range(n):
        row = L[j, :j]
        pivot = A[j, j] - row @ row
        if not pivot > threshold:
            return None
        d = math.sqrt(pivot)
        L[j, j] = d
        if j + 1 < n:
            L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ row) / d
    return L


def is_pd(M, eps_pivot: float = 0.0) -> bool:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        if not np.all(np.isfinite(M)):
            raise StructuralError("matrix has non-finite entries")
        if M.size == 0:
            return True
        # cholesky on a diagonal matrix: the pivots are the entries themselves
        return bool(np.all(M > eps_pivot * max(1.0, float(M.max()))))
    return cholesky(M, eps_pivot) is not None


def gershgorin_bounds(M) -> tuple[float, float]:
    A = _as_sym(M)
    if A.shape[0] == 0:
        return math.inf, -math.inf
    d = np.diag(A)
    r = np.sum(np.abs(A), axis=1) - np.abs(d)
    return float(np.min(d - r)), float(np.max(d + r))


def lambda_min_lower(M, tol: float = 1e-10) -> float:
    """Smallest eigenvalue to within ``tol`` by bisection on ``M - tI`` PD.

    The returned value is the lower end of the final bracket.  An empty
    matrix gives ``inf``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    A = _as_sym(M)
    n = A.shape[0]
    if n == 0:
        return math.inf
    lo, hi = gershgorin_bounds(A)
    eye = np.eye(n)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if cholesky(A - mid * eye) is not None:
            lo = mid
        else:
            hi = mid
    return lo
