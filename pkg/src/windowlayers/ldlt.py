"""Banded LDL^T factorization for eigenvalue counting.

The signature of A - sigma*I certifies how many eigenvalues lie below sigma
(Sylvester inertia), which guards the shift-invert eigensolver against
silently missing clustered states.  SciPy has no symmetric-indefinite sparse
factorization exposing pivot signs, so a no-pivot band factorization is
implemented here; numba accelerates it when available.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = ["BreakdownError", "inertia_below"]

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap


class BreakdownError(RuntimeError):
    """Near-zero pivot: shift too close to an eigenvalue for this method."""


@njit(cache=True)
def _ldlt_band_negcount(ab: np.ndarray, bw: int, tol: float) -> int:  # pragma: no cover
    """In-place band LDL^T; returns the number of negative pivots or -1."""
    n = ab.shape[1]
    neg = 0
    for j in range(n):
        kmin = j - bw
        if kmin < 0:
            kmin = 0
        s = ab[0, j]
        for k in range(kmin, j):
            s -= ab[j - k, k] * ab[j - k, k] * ab[0, k]
        if abs(s) < tol:
            return -1
        ab[0, j] = s
        if s < 0.0:
            neg += 1
        imax = j + bw
        if imax > n - 1:
            imax = n - 1
        for i in range(j + 1, imax + 1):
            acc = ab[i - j, j]
            k0 = i - bw
            if k0 < kmin:
                k0 = kmin
            for k in range(k0, j):
                acc -= ab[i - k, k] * ab[j - k, k] * ab[0, k]
            ab[i - j, j] = acc / s
    return neg


def _band_storage(A: sp.spmatrix) -> tuple[np.ndarray, int]:
    coo = A.tocoo()
    if coo.nnz == 0:
        return np.zeros((1, A.shape[0])), 0
    bw = int(np.max(np.abs(coo.row - coo.col)))
    ab = np.zeros((bw + 1, A.shape[0]))
    mask = coo.row >= coo.col
    ab[coo.row[mask] - coo.col[mask], coo.col[mask]] = coo.data[mask]
    return ab, bw


def inertia_below(A: sp.spmatrix, shift: float, retries: int = 6) -> tuple[int, float]:
    """Number of eigenvalues of symmetric sparse A strictly below `shift`.

    On pivot breakdown the shift is nudged and the factorization retried;
    the shift actually used is returned alongside the count.
    """
    n = A.shape[0]
    scale = max(float(np.max(np.abs(A.diagonal()))), 1e-30)
    used = shift
    for attempt in range(retries):
        B = (A - used * sp.identity(n, format="csr", dtype=float)).tocsr()
        ab, bw = _band_storage(B)
        neg = _ldlt_band_negcount(ab, bw, 1e-14 * scale)
        if neg >= 0:
            return int(neg), used
        used = shift + (attempt + 1) * 3e-9 * scale * (1 if attempt % 2 == 0 else -1)
    raise BreakdownError(f"persistent pivot breakdown near shift {shift!r}")
