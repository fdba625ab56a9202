"""Acceptance suite: one test per exit criterion, at the stated tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion.  Shared solver results live in module-scoped fixtures; the
whole module targets desk scale (about ten minutes).

Criterion 10 is expected to fail: at every reachable truncation the located
second critical scale belongs to a doubly degenerate arrival whose
threshold solution decays (not the bounded sine-profile one), so the
near-threshold gap is not in the exponential-law regime there and the two
coupling estimates cannot agree; see the decisions ledger for the full
analysis and the second-radial-mode variant that is reported alongside.
"""

import json
import math
import time

import numpy as np
import pytest

from windowlayers import analysis as AN
from windowlayers import bessel as B
from windowlayers import layer_solver as LS
from windowlayers import window_eigs as W
from windowlayers.bracketing import LayerPair, brackets, count_bounds
from windowlayers.cli import main as cli_main
from windowlayers.geometry import WindowShape

PI = math.pi
DEFAULT = LS.SolverNumerics(h_rho=0.1, h_z=0.1)


def check(k: int, cond: bool, detail: str):
    print(f"[criterion {k:2d}] {'PASS' if cond else 'FAIL'}: {detail}")
    assert cond, f"criterion {k}: {detail}"


def bisect_series(f, lo, hi, iters=60):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
            flo = f(lo)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- fixtures

@pytest.fixture(scope="module")
def twelve_configs():
    """Default-grid spectra for d in {pi, pi/2, pi/4} x R in {1, 2, 3, 5},
    with a 1.5x-coarser companion solve for error widening."""
    out = {}
    t0 = time.monotonic()
    for d in (PI, PI / 2, PI / 4):
        lp = LayerPair(d)
        for R in (1.0, 2.0, 3.0, 5.0):
            spec = LS.solve_all(lp, R, DEFAULT)
            coarse = LS.solve_all(lp, R, DEFAULT.scaled(1.5))
            n = W.disk_window_spectrum(R, "neumann", 28)
            dd = W.disk_window_spectrum(R, "dirichlet", 28)
            out[(d, R)] = (spec, coarse, brackets(lp, n, dd), count_bounds(lp, n, dd))
    out["elapsed"] = time.monotonic() - t0
    return out


@pytest.fixture(scope="module")
def emergence_pi():
    """Second-eigenvalue critical scale at equal widths plus gap samples."""
    lp = LayerPair(PI)
    report = AN.critical_scale(lp, 2, (2.0, 4.5), DEFAULT)
    gaps = []
    for fac in (1.02, 1.04, 1.07):
        sol = LS.solve_sector(lp, report.t_n * fac, 1, DEFAULT)
        resolved = [s for s in sol.states if s.resolved]
        gaps.append((fac, 1.0 - resolved[0].lam if resolved else math.nan))
    return report, gaps


@pytest.fixture(scope="module")
def gap_experiment_half():
    """d = pi/2 second-eigenvalue experiment: critical scale (the second
    state arrives in the m=1 sector), four-point gap curve, coupling fits."""
    lp = LayerPair(PI / 2)
    report = AN.critical_scale(lp, 2, (2.4, 5.2), DEFAULT, sector=1)
    curve = AN.gap_curve(lp, report.t_n, [0.10, 0.08, 0.06, 0.05], DEFAULT,
                         sector=1)
    fit = AN.fit_exponential_law(curve)
    profile = AN.edge_amplitude(curve.points[-1].state, lp)
    return report, curve, fit, profile


# --------------------------------------------------------------- criteria

class TestCriterion1Bessel:
    def test_zero_oracles_and_interlacing(self):
        oracle_j01 = bisect_series(lambda x: B.series_bessel_j(0, x), 2.0, 3.0)
        oracle_j11 = bisect_series(lambda x: B.series_bessel_j(1, x), 3.0, 4.5)
        oracle_jp11 = bisect_series(
            lambda x: 0.5 * (B.series_bessel_j(0, x) - B.series_bessel_j(2, x)),
            1.5, 2.5)
        t0 = time.monotonic()
        ok = (abs(B.bessel_j_zero(0, 1) - oracle_j01) < 1e-12
              and abs(B.bessel_j_zero(1, 1) - oracle_j11) < 1e-12
              and abs(B.bessel_j_prime_zero(1, 1) - oracle_jp11) < 1e-12)
        inter = all(
            B.bessel_j_zero(m, k) < B.bessel_j_zero(m + 1, k) < B.bessel_j_zero(m, k + 1)
            for m in range(11) for k in range(1, 11))
        elapsed = time.monotonic() - t0
        check(1, ok and inter and elapsed < 1.0,
              f"zeros match bisection oracles to 1e-12, interlacing m,k<=10, "
              f"{elapsed:.2f}s")


class TestCriterion2WindowSpectra:
    def test_fem_convergence_order(self):
        t0 = time.monotonic()
        exactD = [B.bessel_j_zero(0, 1) ** 2, B.bessel_j_zero(1, 1) ** 2,
                  B.bessel_j_zero(1, 1) ** 2, B.bessel_j_zero(2, 1) ** 2]
        exactN = [0.0, B.bessel_j_prime_zero(1, 1) ** 2,
                  B.bessel_j_prime_zero(1, 1) ** 2,
                  B.bessel_j_prime_zero(2, 1) ** 2]
        orders = []
        mu1_neumann = None
        for bc, exact in (("dirichlet", exactD), ("neumann", exactN)):
            errs = []
            for h in (0.2, 0.1, 0.05):
                mesh = W.mesh_window(WindowShape.disk(1.0), h)
                s = W.fem_window_spectrum(mesh, bc, 4, estimate_error=False)
                errs.append([abs(v - e) for v, e in zip(s.values, exact)])
                if bc == "neumann":
                    mu1_neumann = s.values[0]
            errs = np.array(errs)
            start = 1 if bc == "neumann" else 0  # mu1 = 0 exactly, no order
            orders.extend(np.log2(errs[:-1, start:] / errs[1:, start:]).ravel())
        elapsed = time.monotonic() - t0
        ok = all(1.7 <= o <= 2.3 for o in orders) and abs(mu1_neumann) < 1e-10
        check(2, ok and elapsed < 60.0,
              f"orders {min(orders):.2f}..{max(orders):.2f} (want 2.0+-0.3), "
              f"neumann mu1 = {mu1_neumann:.1e}, {elapsed:.1f}s")


class TestCriterion3Brackets:
    def test_containment_twelve_configs(self, twelve_configs):
        violations = []
        for (d, R), (spec, coarse, brs, _) in (
                (k, v) for k, v in twelve_configs.items() if k != "elapsed"):
            evs, evc = spec.eigenvalues(), coarse.eigenvalues()
            for i, lam in enumerate(evs):
                if i >= len(brs):
                    break
                widening = abs(evc[i] - lam) if i < len(evc) else 1e-3
                if not brs[i].contains(lam, slack=widening + 1e-9):
                    violations.append((d, R, i + 1, lam))
        elapsed = twelve_configs["elapsed"]
        check(3, not violations and elapsed < 600.0,
              f"zero bracket violations over 12 configurations "
              f"({elapsed:.0f}s){'; ' + repr(violations) if violations else ''}")


class TestCriterion4Counts:
    def test_count_bounds_twelve_configs(self, twelve_configs):
        bad = []
        for (d, R), (spec, _, _, cb) in (
                (k, v) for k, v in twelve_configs.items() if k != "elapsed"):
            if not cb.consistent_with(spec.resolved_count, spec.unresolved_count):
                bad.append((d, R, spec.resolved_count, cb.min_count, cb.max_count))
        check(4, not bad,
              "all solver counts inside [min, max] window-mode bounds"
              + ("" if not bad else f"; violations {bad!r}"))


class TestCriterion5Parity:
    def test_full_vs_half_domain(self):
        t0 = time.monotonic()
        worst = 0.0
        for R in (2.0, 5.0):
            full = LS.solve_all(LayerPair(PI), R, DEFAULT)
            half = LS.half_domain_solve(R, DEFAULT)
            assert len(full.states) == len(half.states)
            for a, b in zip(full.states, half.states):
                worst = max(worst, abs(a.lam - b.lam) / a.lam)
        elapsed = time.monotonic() - t0
        check(5, worst < 1e-8 and elapsed < 120.0,
              f"full vs half-domain relative mismatch {worst:.2e} (< 1e-8), "
              f"{elapsed:.0f}s")


class TestCriterion6Monotonicity:
    def test_ground_state_strictly_decreasing(self, twelve_configs):
        lams, tols = [], []
        for R in (3.0, 4.0, 5.0, 6.0):
            if (PI, R) in twelve_configs:
                spec, coarse = twelve_configs[(PI, R)][:2]
            else:
                spec = LS.solve_all(LayerPair(PI), R, DEFAULT)
                coarse = LS.solve_all(LayerPair(PI), R, DEFAULT.scaled(1.5))
            lams.append(spec.states[0].lam)
            tols.append(abs(coarse.states[0].lam - spec.states[0].lam))
        strict = all(lams[i] - lams[i + 1] > tols[i] + tols[i + 1]
                     for i in range(3))
        check(6, strict,
              f"lambda_1 strictly decreasing over R=3..6 beyond combined "
              f"tolerance: {[f'{l:.5f}' for l in lams]}")

    def test_bisection_traces_nondecreasing(self, emergence_pi, gap_experiment_half):
        for report in (emergence_pi[0], gap_experiment_half[0]):
            counts = [c for _, c, _ in sorted(report.bisection_trace)]
            assert all(b >= a for a, b in zip(counts, counts[1:]))
        check(6, True, "bound-state counts nondecreasing on both bisection traces")


class TestCriterion7Emergence:
    def test_second_scale_location(self, emergence_pi):
        report, gaps = emergence_pi
        width_ok = report.final_interval_width <= 1e-4 * report.t_n
        gap102 = gaps[0][1]
        shrink = gaps[0][1] < gaps[1][1] < gaps[2][1]
        check(7, width_ok and gap102 < 0.05 and shrink,
              f"t_2 = {report.t_n:.6f} to {report.final_interval_width / report.t_n:.1e} "
              f"relative; gap at 1.02 t_2 = {gap102:.4f} (< 0.05), decreasing "
              f"toward t_2: {[f'{g:.4f}' for _, g in gaps]}")


class TestCriterion8GapLaw:
    def test_synthetic_inversion(self):
        curve = [(e, 4 * math.exp(-2 / (0.5 * e))) for e in (0.10, 0.08, 0.06, 0.05)]
        fit = AN.fit_exponential_law(curve)
        check(8, abs(fit.coupling_from_slope - 0.5) < 1e-10
              and abs(fit.linearity_r2 - 1.0) < 1e-12,
              f"synthetic curve inverted to coupling "
              f"{fit.coupling_from_slope:.12f} (want 0.5), r2 = 1")

    def test_solver_curve_linearity(self, gap_experiment_half):
        _, curve, fit, _ = gap_experiment_half
        check(8, len(curve.points) == 4 and fit.slope < 0
              and fit.linearity_r2 >= 0.98,
              f"four-point curve at d=pi/2 near t_2: slope {fit.slope:.4f} < 0, "
              f"r2 = {fit.linearity_r2:.4f} >= 0.98")


class TestCriterion9EdgeSingularity:
    def test_injected_field_exponent(self):
        nums = LS.SolverNumerics(h_rho=0.1, h_z=0.1, L=16.0)
        grid = LS.build_layer_grid(LayerPair(PI), 3.0, 16.0, nums)
        RR, ZZ = np.meshgrid(grid.rho, grid.z, indexing="ij")
        r = np.hypot(RR - 3.0, ZZ)
        theta = np.arctan2(ZZ, RR - 3.0) % (2 * np.pi)
        f = LS.GridField(rho=grid.rho, z=grid.z,
                         u=np.sqrt(r) * np.sin(theta / 2), R=3.0, half=False)
        prof = AN.extract_edge_profile(f, kappa=0.0, sector=0, gamma=2,
                                       prenormalized=True)
        check(9, abs(prof.exponent - 0.5) <= 0.003,
              f"injected sqrt(r)sin(theta/2) field: exponent "
              f"{prof.exponent:.5f} = 0.500 +- 0.003")

    def test_solver_state_exponent_and_constancy(self, emergence_pi):
        report, _ = emergence_pi
        lp = LayerPair(PI)
        radius = report.t_n * 1.05
        sol1 = LS.solve_sector(lp, radius, 1, DEFAULT)
        st1 = [s for s in sol1.states if s.resolved][0]
        prof1 = AN.edge_amplitude(st1, lp)
        # rotational symmetry: the radial-sector amplitude is one number,
        # exactly constant along the rim
        sol0 = LS.solve_sector(lp, radius, 0, DEFAULT)
        prof0 = AN.edge_amplitude(sol0.states[0], lp)
        s = np.linspace(0, 2 * PI * radius, 64)
        lvals = prof0.amplitude_of_arclength(s, radius)
        const_ok = np.max(np.abs(lvals - prof0.amplitude)) <= 0.02 * abs(prof0.amplitude)
        check(9, abs(prof1.exponent - 0.5) <= 0.05 and const_ok,
              f"near-t_2 eigenfunction exponent {prof1.exponent:.4f} = 0.5 +- 0.05; "
              f"rim amplitude constant within 2% for the circular window")


class TestCriterion10CouplingCrossCheck:
    def test_direct_vs_slope_coupling(self, gap_experiment_half):
        """Expected red: see the module docstring and the decisions ledger.

        The second eigenvalue arrives as an m = +-1 pair whose threshold
        solution decays like 1/|x'|; the exponential gap law (and with it
        the -2/slope coupling estimate) belongs to the nondegenerate
        bounded-resonance case, which at desk scale is never the second
        critical shape.  Measured ratios: ~0.16 here; the sound variant
        (second radial m=0 state, reported by scripts/gap_law_study.py)
        reaches ~0.47 at resolvable gaps, still limited by the O(eps)
        prefactor of the law at reachable truncations.
        """
        _, _, fit, profile = gap_experiment_half
        ratio = profile.coupling_direct / fit.coupling_from_slope
        check(10, 0.65 <= ratio <= 1.35,
              f"coupling direct {profile.coupling_direct:.3f} vs slope "
              f"{fit.coupling_from_slope:.3f}: ratio {ratio:.3f} "
              f"(want within 35%)")


class TestCriterion11Decay:
    def test_synthetic_rate(self):
        nums = LS.SolverNumerics(h_rho=0.1, h_z=0.1, L=16.0)
        grid = LS.build_layer_grid(LayerPair(PI), 1.0, 16.0, nums)
        RR, ZZ = np.meshgrid(grid.rho, grid.z, indexing="ij")
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.exp(-0.3 * RR) / np.sqrt(np.maximum(RR, 1e-12)) \
                * np.sin(np.maximum(ZZ, 0.0))
        u[:, grid.z <= 0] = 0.0
        u[0, :] = 0.0
        f = LS.GridField(rho=grid.rho, z=grid.z, u=u, R=1.0, half=False)
        fit = AN.fit_far_field_decay(f, kappa_predicted=0.3)
        check(11, abs(fit.rate - 0.3) < 1e-6,
              f"synthetic field rate {fit.rate:.8f} = 0.3 +- 1e-6")

    def test_solver_ground_state_rate(self, twelve_configs):
        spec = twelve_configs[(PI, 5.0)][0]
        fit = AN.decay_rate(spec.states[0])
        check(11, fit.relative_error < 0.05,
              f"d=pi R=5 ground state: fitted rate {fit.rate:.4f} vs "
              f"sqrt(1-lam) {fit.predicted:.4f} ({100 * fit.relative_error:.2f}%)")


class TestCriterion12Determinism:
    def test_byte_identical_json(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[layers]\nd = pi\n\n[window]\nkind = disk\nradius = 3.0\n\n"
                       "[numerics]\nh_rho = 0.15\nh_z = 0.15\n")
        payloads = {}
        for cmd in ("bounds", "solve"):
            blobs = []
            for run in (1, 2):
                out = tmp_path / f"{cmd}{run}"
                assert cli_main([cmd, str(cfg), "--out", str(out)]) == 0
                name = "bounds" if cmd == "bounds" else "solve"
                blobs.append((out / f"{name}.json").read_bytes())
            payloads[cmd] = blobs[0] == blobs[1]
            json.loads(blobs[0])  # well-formed
        check(12, all(payloads.values()),
              f"repeated runs byte-identical: {payloads}")
