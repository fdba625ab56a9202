"""Bessel functions of the first kind and their zeros.

Two evaluators are kept deliberately independent:

* :func:`bessel_j` is the float64 production evaluator (power series for
  small argument, Miller's downward recurrence with sum normalization
  otherwise).  Validated to ~1e-13 relative accuracy away from zeros for
  x <= 200, absolute ~1e-14 near zeros.
* :func:`series_bessel_j` is a straight power series evaluated in
  high-precision arithmetic (mpmath).  It shares no code with the
  production path and is used to certify every tabulated zero.

Zeros are located from McMahon / large-order initial guesses, refined by
safeguarded Newton iteration, and certified against the series oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

__all__ = [
    "BesselZeroTable",
    "bessel_j",
    "bessel_j_deriv",
    "bessel_j_many",
    "bessel_j_prime_zero",
    "bessel_j_zero",
    "series_bessel_j",
    "zero_table",
]

_SERIES_CUT = 0.5  # below this the plain float64 series has no cancellation


def _series_small(m: int, x: float) -> float:
    # leading terms only; safe because x < _SERIES_CUT
    q = 0.25 * x * x
    term = 0.5 ** m * x ** m / math.factorial(m) if x > 0 else (1.0 if m == 0 else 0.0)
    total = term
    for k in range(1, 40):
        term *= -q / (k * (k + m))
        total += term
        if abs(term) <= 1e-18 * abs(total) + 5e-324:
            break
    return total


def _miller_row(m_max: int, x: float) -> np.ndarray:
    """All of J_0(x)..J_{m_max}(x) by downward recurrence.

    Start well above max(m_max, x) so the minimal solution dominates, then
    normalize with J_0 + 2*sum_k J_{2k} = 1.
    """
    start = int(1.5 * max(m_max, x) + 30)
    if start % 2:
        start += 1
    jp1 = 0.0
    j = 1e-300
    out = np.zeros(m_max + 1)
    norm = 0.0
    for n in range(start, 0, -1):
        jm1 = (2.0 * n / x) * j - jp1
        jp1 = j
        j = jm1
        if abs(j) > 1e250:
            j *= 1e-250
            jp1 *= 1e-250
            norm *= 1e-250
            out *= 1e-250
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2.0 * j if (n - 1) % 2 == 0 else 0.0
        if n - 1 <= m_max:
            out[n - 1] = j
    norm += j  # J_0 contribution
    return out / norm


def bessel_j_many(m_max: int, x: float) -> np.ndarray:
    """J_0(x) .. J_{m_max}(x) as one array."""
    if x < 0:
        raise ValueError("negative argument")
    if x == 0.0:
        out = np.zeros(m_max + 1)
        out[0] = 1.0
        return out
    if x < _SERIES_CUT:
        return np.array([_series_small(m, x) for m in range(m_max + 1)])
    return _miller_row(m_max, x)


def bessel_j(m: int, x: float) -> float:
    """J_m(x) for integer order m >= 0 and x >= 0."""
    if m < 0:
        raise ValueError("order must be nonnegative")
    if x < 0:
        raise ValueError("negative argument")
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    if x < _SERIES_CUT:
        return _series_small(m, x)
    return float(_miller_row(m, x)[m])


def bessel_j_deriv(m: int, x: float) -> float:
    """J_m'(x) through the recurrence J_m' = (J_{m-1} - J_{m+1})/2."""
    if m == 0:
        return -bessel_j(1, x)
    row = bessel_j_many(m + 1, x)
    return 0.5 * (row[m - 1] - row[m + 1])


def series_bessel_j(m: int, x: float, extra_dps: int = 25) -> float:
    """Straight power series for J_m(x) in high-precision arithmetic.

    Certification oracle: independent of the production evaluator.  Working
    precision grows with x to absorb the alternating-series cancellation.
    """
    dps = extra_dps + int(0.45 * x) + 10
    with mp.workdps(dps):
        xm = mp.mpf(x)
        half = xm / 2
        term = half ** m / mp.factorial(m)
        total = term
        k = 1
        tol = mp.mpf(10) ** (-(dps - 5))
        while True:
            term = -term * half * half / (k * (k + m))
            total += term
            if abs(term) < tol * (1 + abs(total)):
                break
            k += 1
            if k > 4 * dps + int(2 * x) + 100:
                raise RuntimeError("series did not terminate")
        return float(total)


def _second_deriv(m: int, x: float, j: float, jp: float) -> float:
    # from the defining ODE
    return -jp / x - (1.0 - m * m / (x * x)) * j


def _newton(f_and_df, x0: float, lo: float, hi: float) -> float:
    """Newton iteration safeguarded by a sign-change bracket.

    The current iterate is folded into the bracket each step; steps leaving
    the bracket fall back to bisection of the updated bracket.
    """
    flo, _ = f_and_df(lo)
    x = min(max(x0, lo), hi)
    for _ in range(200):
        f, df = f_and_df(x)
        if f == 0.0:
            return x
        if flo * f <= 0:
            hi = x
        else:
            lo, flo = x, f
        step = f / df if df != 0 else (hi - lo)
        xn = x - step
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-16 * abs(xn) or hi - lo <= 1e-15 * abs(xn):
            return xn
        x = xn
    return x


def _bracket_scan(f, start: float, step: float = 0.7, max_steps: int = 4000):
    """First sign change of f at or after `start`."""
    a = start
    fa = f(a)
    for _ in range(max_steps):
        b = a + step
        fb = f(b)
        if fa == 0.0:
            return a - 1e-9, a + 1e-9
        if fa * fb < 0:
            return a, b
        a, fa = b, fb
    raise RuntimeError("no sign change found")


def _first_zero_guess(m: int, kind: str) -> float:
    # large-order expansions; exact tabulated value for the m=0 J-zero
    if kind == "J":
        if m == 0:
            return 2.404825557695773
        c = m ** (1.0 / 3.0)
        return m + 1.8557571 * c + 1.033150 / c
    if m == 0:
        raise AssertionError("J' zeros of order 0 map to J_1 zeros")
    c = m ** (1.0 / 3.0)
    return m + 0.8086165 * c + 0.072490 / c


def _mcmahon(m: int, k: int, kind: str) -> float:
    mu = 4.0 * m * m
    if kind == "J":
        beta = (k + 0.5 * m - 0.25) * math.pi
        num1 = mu - 1.0
        corr = num1 / (8 * beta) + 4 * num1 * (7 * mu - 31) / (3 * (8 * beta) ** 3)
    else:
        beta = (k + 0.5 * m - 0.75) * math.pi
        corr = (mu + 3.0) / (8 * beta) + 4 * (7 * mu * mu + 82 * mu - 9) / (3 * (8 * beta) ** 3)
    return beta - corr


_zero_cache: dict[tuple[int, str, int], float] = {}


def _locate_zero(m: int, k: int, kind: str) -> float:
    if kind == "J'":
        if m == 0:
            # J_0' = -J_1: positive critical points of J_0 are the J_1 zeros
            return _locate_zero(1, k, "J")

        def f(x):
            return bessel_j_deriv(m, x)

        def f_and_df(x):
            row = bessel_j_many(m + 1, x)
            jp = 0.5 * (row[m - 1] - row[m + 1])
            return jp, _second_deriv(m, x, row[m], jp)

    else:

        def f(x):
            return bessel_j(m, x)

        def f_and_df(x):
            row = bessel_j_many(m + 1, x)
            jp = 0.5 * (row[m - 1] - row[m + 1]) if m >= 1 else -row[1]
            return row[m], jp

    beta_far = (k + 0.5 * m - (0.25 if kind == "J" else 0.75)) * math.pi
    if k >= 2 and beta_far > m + 8:
        guess = _mcmahon(m, k, kind)
        lo, hi = _bracket_scan(f, guess - 1.0, 0.5, 8)
    else:
        prev = _zero_cache.get((m, kind, k - 1))
        if k == 1:
            start = max(_first_zero_guess(m, kind) - 0.8, 1e-3 if m == 0 else m * 0.5)
        elif prev is not None:
            start = prev + 0.4
        else:
            start = _locate_zero_cached(m, k - 1, kind) + 0.4
        lo, hi = _bracket_scan(f, start)
    return _newton(f_and_df, 0.5 * (lo + hi), lo, hi)


def _locate_zero_cached(m: int, k: int, kind: str) -> float:
    key = (m, kind, k)
    if key not in _zero_cache:
        _zero_cache[key] = float(_locate_zero(m, k, kind))
    return _zero_cache[key]


def _certify(m: int, z: float, kind: str, tol: float = 1e-12) -> None:
    if kind == "J":
        resid = series_bessel_j(m, z)
    else:
        if m == 0:
            resid = -series_bessel_j(1, z)
        else:
            resid = 0.5 * (series_bessel_j(m - 1, z) - series_bessel_j(m + 1, z))
    if abs(resid) > tol:
        raise RuntimeError(
            f"zero certification failed: |residual|={abs(resid):.3e} at "
            f"{kind}_{m} zero {z!r}"
        )


def bessel_j_zero(m: int, k: int, certify: bool = False) -> float:
    """k-th positive zero of J_m (k >= 1)."""
    if k < 1:
        raise ValueError("zero index starts at 1")
    z = _locate_zero_cached(m, k, "J")
    if certify:
        _certify(m, z, "J")
    return z


def bessel_j_prime_zero(m: int, k: int, certify: bool = False) -> float:
    """k-th positive zero of J_m' (k >= 1; the trivial J_0' zero at 0 is skipped)."""
    if k < 1:
        raise ValueError("zero index starts at 1")
    z = _locate_zero_cached(m, k, "J'")
    if certify:
        _certify(m, z, "J'")
    return z


@dataclass(frozen=True)
class BesselZeroTable:
    """Certified table of the first `count` positive zeros for one order."""

    order: int
    kind: str  # "J" or "J'"
    zeros: tuple[float, ...]
    certified_tolerance: float

    def __post_init__(self):
        if self.kind not in ("J", "J'"):
            raise ValueError("kind must be 'J' or \"J'\"")
        if any(b <= a for a, b in zip(self.zeros, self.zeros[1:])):
            raise ValueError("zeros must be strictly increasing")


def zero_table(m: int, kind: str, count: int, tol: float = 1e-12) -> BesselZeroTable:
    """Locate and certify the first `count` zeros of J_m or J_m'."""
    locate = bessel_j_zero if kind == "J" else bessel_j_prime_zero
    zeros = []
    for k in range(1, count + 1):
        z = locate(m, k)
        _certify(m, z, kind, tol)
        zeros.append(z)
    return BesselZeroTable(order=m, kind=kind, zeros=tuple(zeros), certified_tolerance=tol)
