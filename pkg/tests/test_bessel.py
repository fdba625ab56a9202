"""Bessel evaluator and zero-table tests.

Expected zero locations are re-derived at test time by plain bisection of
the high-precision series evaluator on a stated sign-change interval, and
also frozen as literals so a regression in either evaluator is caught.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windowlayers import bessel as B


def bisect_series(f, lo, hi, iters=60):
    """Independent oracle: straight bisection on a sign change of f."""
    flo = f(lo)
    assert flo * f(hi) < 0, "oracle bracket must straddle a sign change"
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
            flo = f(lo)
    return 0.5 * (lo + hi)


J01 = 2.404825557695773
J11 = 3.831705970207512
JP11 = 1.841183781340659


class TestProductionEvaluator:
    def test_values_at_zero_argument(self):
        assert B.bessel_j(0, 0.0) == 1.0
        assert B.bessel_j(1, 0.0) == 0.0
        assert B.bessel_j(7, 0.0) == 0.0

    def test_negative_argument_rejected(self):
        with pytest.raises(ValueError):
            B.bessel_j(0, -1.0)
        with pytest.raises(ValueError):
            B.bessel_j(-1, 1.0)

    def test_root_residual_at_frozen_j01(self):
        assert abs(B.bessel_j(0, J01)) < 1e-13

    def test_against_series_oracle_grid(self):
        # production vs independent series, mixed abs/rel envelope, x <= 200
        rng = np.random.default_rng(7)
        xs = np.concatenate([[1e-3, 0.1, 0.49, 0.51], rng.uniform(0.5, 200.0, 25)])
        for m in (0, 1, 3, 9):
            for x in xs:
                ref = B.series_bessel_j(m, float(x))
                got = B.bessel_j(m, float(x))
                assert abs(got - ref) <= 1e-13 * max(1.0, abs(ref)) + 1e-14

    def test_derivative_matches_finite_difference(self):
        hs = 1e-6
        for m in (0, 1, 2, 5):
            for x in (0.7, 2.3, 6.1, 11.4, 40.2):
                fd = (B.bessel_j(m, x + hs) - B.bessel_j(m, x - hs)) / (2 * hs)
                assert abs(B.bessel_j_deriv(m, x) - fd) < 1e-8


class TestZeros:
    def test_j01_vs_bisection_oracle(self):
        oracle = bisect_series(lambda x: B.series_bessel_j(0, x), 2.0, 3.0)
        assert abs(oracle - J01) < 1e-12
        assert abs(B.bessel_j_zero(0, 1) - oracle) < 1e-12

    def test_j11_vs_bisection_oracle(self):
        oracle = bisect_series(lambda x: B.series_bessel_j(1, x), 3.0, 4.5)
        assert abs(oracle - J11) < 1e-12
        assert abs(B.bessel_j_zero(1, 1) - oracle) < 1e-12

    def test_jprime11_vs_bisection_oracle(self):
        def deriv(x):
            return 0.5 * (B.series_bessel_j(0, x) - B.series_bessel_j(2, x))

        oracle = bisect_series(deriv, 1.5, 2.5)
        assert abs(oracle - JP11) < 1e-12
        assert abs(B.bessel_j_prime_zero(1, 1) - oracle) < 1e-12

    def test_jprime_of_order_zero_skips_origin(self):
        # J_0' = -J_1, so its first positive zero is the first J_1 zero
        assert abs(B.bessel_j_prime_zero(0, 1) - B.bessel_j_zero(1, 1)) < 1e-14

    def test_zero_index_validation(self):
        with pytest.raises(ValueError):
            B.bessel_j_zero(0, 0)
        with pytest.raises(ValueError):
            B.bessel_j_prime_zero(2, -1)

    def test_asymptotic_spacing(self):
        gap = B.bessel_j_zero(0, 2) - B.bessel_j_zero(0, 1)
        assert abs(gap - math.pi) / math.pi < 0.03

    def test_interlacing_through_order_ten(self):
        for m in range(0, 11):
            for k in range(1, 11):
                assert B.bessel_j_zero(m, k) < B.bessel_j_zero(m + 1, k) < B.bessel_j_zero(m, k + 1)

    def test_certificates(self):
        tab = B.zero_table(4, "J", 6)
        for z in tab.zeros:
            assert abs(B.series_bessel_j(4, z)) <= tab.certified_tolerance
        tabp = B.zero_table(2, "J'", 6)
        for z in tabp.zeros:
            d = 0.5 * (B.series_bessel_j(1, z) - B.series_bessel_j(3, z))
            assert abs(d) <= tabp.certified_tolerance

    def test_table_rejects_bad_kind(self):
        with pytest.raises(ValueError):
            B.BesselZeroTable(order=0, kind="Y", zeros=(1.0, 2.0), certified_tolerance=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(m=st.integers(min_value=0, max_value=8), k=st.integers(min_value=1, max_value=8))
    def test_zero_residual_property(self, m, k):
        z = B.bessel_j_zero(m, k)
        assert abs(B.bessel_j(m, z)) < 1e-12
