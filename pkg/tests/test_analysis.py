"""Analysis machinery tests: synthetic-field extraction (independent of the
solver), fit inversion, counting, and small real solver runs."""

import math

import numpy as np
import pytest

from windowlayers import analysis as AN
from windowlayers import layer_solver as LS
from windowlayers.bracketing import LayerPair

PI = math.pi
EQUAL = LayerPair(PI)
COARSE = LS.SolverNumerics(h_rho=0.2, h_z=0.2)
DEFAULT = LS.SolverNumerics(h_rho=0.1, h_z=0.1)


def synthetic_edge_field(R=3.0, L=16.0, h=0.1, amplitude=1.0):
    """u = amplitude * sqrt(r) sin(theta/2) around the rim, on a solver grid."""
    nums = LS.SolverNumerics(h_rho=h, h_z=h, L=L)
    grid = LS.build_layer_grid(EQUAL, R, L, nums)
    RR, ZZ = np.meshgrid(grid.rho, grid.z, indexing="ij")
    tau = RR - R
    r = np.hypot(tau, ZZ)
    theta = np.arctan2(ZZ, tau) % (2 * np.pi)
    u = amplitude * np.sqrt(r) * np.sin(theta / 2)
    return LS.GridField(rho=grid.rho, z=grid.z, u=u, R=R, half=False)


def synthetic_decay_field(k=0.3, R=1.0, L=16.0, h=0.1):
    nums = LS.SolverNumerics(h_rho=h, h_z=h, L=L)
    grid = LS.build_layer_grid(EQUAL, R, L, nums)
    RR, ZZ = np.meshgrid(grid.rho, grid.z, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.exp(-k * RR) / np.sqrt(np.maximum(RR, 1e-12)) * np.sin(np.maximum(ZZ, 0.0))
    u[:, grid.z <= 0] = 0.0
    u[0, :] = 0.0
    return LS.GridField(rho=grid.rho, z=grid.z, u=u, R=R, half=False)


class TestEdgeExtraction:
    def test_exact_model_field(self):
        f = synthetic_edge_field()
        prof = AN.extract_edge_profile(f, kappa=0.0, sector=0, gamma=2,
                                       prenormalized=True)
        assert prof.exponent == pytest.approx(0.5, abs=1e-3)
        assert prof.amplitude == pytest.approx(1.0, abs=1e-3)

    def test_amplitude_scales_linearly(self):
        f = synthetic_edge_field(amplitude=2.5)
        prof = AN.extract_edge_profile(f, kappa=0.0, sector=0, gamma=2,
                                       prenormalized=True)
        assert prof.amplitude == pytest.approx(2.5, abs=3e-3)

    def test_coupling_integral_formula(self):
        # constant l over the rim: coupling = beta l^2 (2 pi R) / (2 gamma)
        f = synthetic_edge_field(R=3.0)
        prof = AN.extract_edge_profile(f, kappa=0.0, sector=0, gamma=2,
                                       prenormalized=True)
        want = 1.0 * prof.amplitude ** 2 * 2 * math.pi * 3.0 / 4.0
        assert prof.coupling_direct == pytest.approx(want, rel=1e-12)

    def test_non_square_root_field_rejected(self):
        nums = LS.SolverNumerics(h_rho=0.1, h_z=0.1, L=16.0)
        grid = LS.build_layer_grid(EQUAL, 3.0, 16.0, nums)
        RR, ZZ = np.meshgrid(grid.rho, grid.z, indexing="ij")
        r = np.hypot(RR - 3.0, ZZ)
        f = LS.GridField(rho=grid.rho, z=grid.z, u=r, R=3.0, half=False)  # ~r^1
        with pytest.raises(AN.ProfileRejectedError):
            AN.extract_edge_profile(f, kappa=0.0, sector=0, gamma=2,
                                    prenormalized=True)

    def test_too_few_radii_rejected(self):
        f = synthetic_edge_field()
        with pytest.raises(AN.InsufficientRangeError):
            AN.extract_edge_profile(f, kappa=0.0, sector=0, gamma=2,
                                    prenormalized=True,
                                    fit_radii=np.array([0.05, 0.1, 0.2]))

    def test_angular_modulation(self):
        f = synthetic_edge_field()
        prof = AN.extract_edge_profile(f, kappa=0.0, sector=0, gamma=2,
                                       prenormalized=True)
        s = np.linspace(0, 2 * math.pi * 3.0, 9)
        vals = prof.amplitude_of_arclength(s, 3.0)
        assert np.allclose(vals, prof.amplitude)


class TestDecayFit:
    def test_exact_rate(self):
        f = synthetic_decay_field(k=0.3)
        fit = AN.fit_far_field_decay(f, kappa_predicted=0.3)
        assert fit.rate == pytest.approx(0.3, abs=1e-6)

    def test_short_window_rejected(self):
        f = synthetic_decay_field(k=0.05, L=16.0)
        with pytest.raises(AN.InsufficientRangeError):
            AN.fit_far_field_decay(f, kappa_predicted=0.05)

    def test_rate_ordering(self):
        rates = []
        for k in (0.3, 0.4, 0.6):
            fit = AN.fit_far_field_decay(synthetic_decay_field(k=k), kappa_predicted=k)
            rates.append(fit.rate)
        assert rates[0] < rates[1] < rates[2]


class TestExponentialLawFit:
    def test_exact_inversion(self):
        eps = [0.10, 0.08, 0.06, 0.05]
        curve = [(e, 4 * math.exp(-2 / (0.5 * e))) for e in eps]
        fit = AN.fit_exponential_law(curve)
        assert fit.accepted
        assert fit.linearity_r2 == pytest.approx(1.0, abs=1e-12)
        assert fit.coupling_from_slope == pytest.approx(0.5, abs=1e-10)

    def test_noisy_inversion_within_ten_percent(self):
        rng = np.random.default_rng(11)
        eps = [0.10, 0.085, 0.07, 0.06, 0.05]
        curve = [(e, 4 * math.exp(-2 / (0.5 * e)) * (1 + rng.uniform(-0.05, 0.05)))
                 for e in eps]
        fit = AN.fit_exponential_law(curve)
        assert abs(fit.coupling_from_slope - 0.5) < 0.05

    def test_positive_slope_rejected(self):
        curve = [(e, math.exp(+1 / e)) for e in (0.1, 0.08, 0.06, 0.05)]
        fit = AN.fit_exponential_law(curve)
        assert not fit.accepted and "slope" in fit.reject_reason

    def test_needs_four_points(self):
        with pytest.raises(ValueError):
            AN.fit_exponential_law([(0.1, 1e-3), (0.08, 1e-4), (0.06, 1e-5)])

    def test_euler_constant_frozen(self):
        curve = [(e, 4 * math.exp(-2 / (0.5 * e))) for e in (0.1, 0.08, 0.06, 0.05)]
        fit = AN.fit_exponential_law(curve)
        assert fit.euler_constant == pytest.approx(0.5772156649015329, abs=1e-15)


class TestEigencount:
    def test_r5_total(self):
        c = AN.eigencount(EQUAL, 5.0, DEFAULT)
        assert c.resolved == 5
        assert not c.ambiguous

    def test_sector_restriction(self):
        c = AN.eigencount(EQUAL, 5.0, DEFAULT, sector=1)
        assert c.resolved == 2  # one m=1 state, multiplicity two

    def test_small_window_empty(self):
        c = AN.eigencount(EQUAL, 1.0, DEFAULT)
        assert c.resolved == 0


class TestCriticalScale:
    def test_first_state_rejected(self):
        with pytest.raises(ValueError):
            AN.critical_scale(EQUAL, 1, (1.0, 6.0), COARSE)

    def test_equal_endpoint_counts_rejected(self):
        with pytest.raises(ValueError):
            AN.critical_scale(EQUAL, 2, (4.5, 6.0), DEFAULT, sector=1,
                              gap_floor=2e-2)

    def test_locates_second_state_sector(self):
        rep = AN.critical_scale(EQUAL, 2, (2.0, 4.5), DEFAULT, sector=1,
                                rel_tol=1e-3, gap_floor=1e-2)
        assert 3.0 < rep.t_n < 3.6
        assert rep.final_interval_width <= 1e-3 * rep.t_n
        counts = [c for _, c, _ in sorted(rep.bisection_trace)]
        assert all(b >= a for a, b in zip(counts, counts[1:]))


class TestMonotonicity:
    def test_ground_state_decreasing(self):
        rep = AN.monotonicity_check(EQUAL, [3.0, 4.0, 5.0], COARSE)
        assert rep.passed
        firsts = [e[0] for e in rep.eigenvalues]
        assert firsts[0] > firsts[1] > firsts[2]

    def test_bad_grid_rejected(self):
        with pytest.raises(ValueError):
            AN.monotonicity_check(EQUAL, [5.0, 3.0], COARSE)
