"""One-dimensional graded grids and finite-volume weights.

Segments support radical grading toward either endpoint: within a zone of
fixed physical extent D the step shrinks like h*(x/D)^(1-1/beta) with
distance x from the endpoint.  For square-root singularities (window rim)
any beta > 2 restores second-order eigenvalue convergence that a uniform or
h-proportional graded mesh loses.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

__all__ = ["graded_segment", "lowest_dirichlet_eig_1d", "radical_points"]


def radical_points(D: float, h: float, beta: float,
                   min_cell: float = 0.0) -> np.ndarray:
    """Distances 0 = x_0 < ... < x_K = D with x_k = D (k/K)^beta.

    Steps grow toward ~h at x = D, matching a uniform step-h grid outside
    the zone.  `min_cell` prunes the innermost points so no step falls
    below it: the unresolved core costs O(min_cell) eigenvalue bias while
    keeping the operator norm (and hence factorization roundoff) bounded.
    """
    K = max(2, int(np.ceil(beta * D / h)))
    pts = D * (np.arange(K + 1) / K) ** beta
    if min_cell <= 0:
        return pts
    kept = [0.0]
    for x in pts[1:-1]:
        if x - kept[-1] >= min_cell:
            kept.append(float(x))
    if D - kept[-1] < 0.5 * min_cell and len(kept) > 1:
        kept.pop()
    kept.append(D)
    return np.array(kept)


def graded_segment(a: float, b: float, h: float,
                   start_zone: float = 0.0, end_zone: float = 0.0,
                   beta: float = 3.0, min_cell: float = 0.0) -> np.ndarray:
    """Strictly increasing grid from a to b, uniform step ~h in the middle,
    radically graded toward an endpoint over the given zone lengths."""
    length = b - a
    if length <= 0:
        raise ValueError("segment must have positive length")
    if beta < 1.0:
        raise ValueError("grading exponent must be >= 1")
    h = min(h, length)
    start_zone = max(0.0, min(start_zone, length))
    end_zone = max(0.0, min(end_zone, length))
    if start_zone + end_zone > 0.85 * length:
        shrink = 0.85 * length / (start_zone + end_zone)
        start_zone *= shrink
        end_zone *= shrink

    pts = [np.array([0.0])]
    if start_zone > h / 2:
        pts.append(radical_points(start_zone, h, beta, min_cell)[1:])
    lo = start_zone if start_zone > h / 2 else 0.0
    hi = length - (end_zone if end_zone > h / 2 else 0.0)
    n_mid = max(1, round((hi - lo) / h))
    pts.append(lo + (hi - lo) * np.arange(1, n_mid + 1) / n_mid)
    if end_zone > h / 2:
        pts.append(length - radical_points(end_zone, h, beta, min_cell)[::-1][1:])
    xs = a + np.concatenate(pts)
    xs[-1] = b
    if np.any(np.diff(xs) <= 0):
        raise ValueError("grid construction produced a nonpositive step")
    return xs


def lowest_dirichlet_eig_1d(x: np.ndarray) -> float:
    """Smallest eigenvalue of -u'' on the grid x with Dirichlet endpoints.

    Finite-volume form on the interior nodes; this is the transverse operator
    seen by the far field of the layer solver, so its smallest eigenvalue is
    the bottom of the discrete continuum.
    """
    n = len(x) - 2
    if n < 1:
        raise ValueError("need at least one interior node")
    hm = np.diff(x)[:-1]  # x_i - x_{i-1} for interior i
    hp = np.diff(x)[1:]
    hbar = 0.5 * (hm + hp)
    diag = (1.0 / hm + 1.0 / hp) / hbar
    off = -1.0 / hp[:-1] / np.sqrt(hbar[:-1] * hbar[1:])
    vals = sla.eigh_tridiagonal(diag, off, select="i", select_range=(0, 0),
                                eigvals_only=True)
    return float(vals[0])
