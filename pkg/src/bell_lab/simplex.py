"""Dense phase-1 simplex for small equality-feasibility problems.

Decides whether ``A w = b`` admits a solution with ``w >= 0`` by minimizing
the sum of artificial variables over the dense tableau.  Problems here are
tiny (tens of rows, at most a few thousand columns), so a plain tableau with
full pivots is both fast and exact enough at the working tolerance.  When the
system is infeasible the phase-1 duals provide a Farkas certificate
``y`` with ``y.b > 0 >= y.A_j`` for every column j; callers turn that vector
into a separating inequality.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure

# Pivot entries smaller than this are treated as zero in the ratio test.
_PIVOT_EPS = 1e-11
# Switch from Dantzig to Bland's rule after this many pivots; Bland cannot
# cycle, so termination is guaranteed on degenerate problems.
_BLAND_AFTER = 200


@dataclass
class FeasibilityResult:
    feasible: bool
    weights: np.ndarray | None
    certificate: np.ndarray | None
    residual: float
    iterations: int


def solve_equality_feasibility(
    A: np.ndarray, b: np.ndarray, tol: float = 1e-9, max_iter: int | None = None
) -> FeasibilityResult:
    """Phase-1 feasibility for ``A w = b, w >= 0``.

    Returns weights when feasible, otherwise a Farkas certificate.  The
    ``residual`` is the phase-1 optimum (total artificial mass); the system
    counts as feasible when it does not exceed ``tol``.  Raises
    NumericalFailure if the pivot loop hits ``max_iter`` without converging.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).copy()
    m, n = A.shape
    if b.shape != (m,):
        raise ValueError(f"b has shape {b.shape}, expected ({m},)")
    if max_iter is None:
        max_iter = 50 * (m + n) + 200

    # Flip rows with negative right-hand side so artificials start feasible.
    if (b < 0.0).any():
        flip = np.where(b < 0.0, -1.0, 1.0)
        A = A * flip[:, None]
        b = b * flip
    else:
        flip = None

    # Tableau: m constraint rows, one objective row; columns are the n
    # structural variables, m artificials, and the right-hand side.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    # Objective row holds reduced costs for min sum(artificials); with the
    # artificial basis, r_j = -sum_i A_ij and the objective is -sum(b).
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()

    basis = np.arange(n, n + m)
    rtol = min(tol * 1e-3, 1e-10)

    iterations = 0
    while iterations < max_iter:
        r = T[m, : n + m]
        if iterations < _BLAND_AFTER:
            j = int(np.argmin(r))
            if r[j] >= -rtol:
                break
        else:
            negative = np.nonzero(r < -rtol)[0]
            if negative.size == 0:
                break
            j = int(negative[0])

        col = T[:m, j]
        positive = col > _PIVOT_EPS
        if not positive.any():
            # Phase-1 is bounded below by zero, so this cannot occur with
            # consistent data; treat it as a numerical breakdown.
            raise NumericalFailure("phase-1 pivot column has no positive entry")
        ratios = np.where(positive, T[:m, -1] / np.where(positive, col, 1.0), np.inf)
        i = int(np.argmin(ratios))
        _pivot(T, i, j)
        basis[i] = j
        iterations += 1
    else:
        raise NumericalFailure(f"simplex did not converge in {max_iter} pivots")

    residual = -T[m, -1]
    # Duals of the flipped system sit under the artificial columns:
    # r_art_i = 1 - y_i.  Undo the row flips for the caller.
    y = 1.0 - T[m, n : n + m]
    if flip is not None:
        y = y * flip

    if residual <= tol:
        w = np.zeros(n)
        in_basis = basis < n
        w[basis[in_basis]] = T[:m, -1][in_basis]
        np.clip(w, 0.0, None, out=w)
        return FeasibilityResult(True, w, None, residual, iterations)
    return FeasibilityResult(False, None, y, residual, iterations)


def _pivot(T: np.ndarray, i: int, j: int) -> None:
    T[i, :] /= T[i, j]
    col = T[:, j].copy()
    col[i] = 0.0
    T -= col[:, None] * T[i, :]
    T[:, j] = 0.0
    T[i, j] = 1.0
