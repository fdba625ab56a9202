"""Emergence thresholds, near-threshold gap asymptotics, and eigenfunction
diagnostics (rim amplitude, coupling integral, far-field decay).

Window-scale sweeps freeze the grid topology (node fractions per segment)
so that eigenvalues move smoothly with the scale and bound-state counts
form clean monotone step functions; bisection on such counts pins critical
scales to arbitrary relative width without count jitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import kv as bessel_kv

from .bracketing import ESSENTIAL_THRESHOLD, LayerPair
from .layer_solver import (
    BoundState,
    GridField,
    LayerGrid,
    SolverNumerics,
    build_layer_grid,
    solve_all,
    solve_sector,
)

__all__ = [
    "AsymptoticFit",
    "CountResult",
    "DecayFit",
    "EdgeProfile",
    "EmergenceReport",
    "GapCurve",
    "GapPoint",
    "MonotonicityReport",
    "critical_scale",
    "decay_rate",
    "edge_amplitude",
    "eigencount",
    "extract_edge_profile",
    "fit_exponential_law",
    "fit_far_field_decay",
    "gap_curve",
    "monotonicity_check",
]

EULER_GAMMA = float(np.euler_gamma)


class AnalysisError(RuntimeError):
    pass


class InsufficientRangeError(AnalysisError):
    """Fit window too short for a trustworthy decay or profile fit."""


class ProfileRejectedError(AnalysisError):
    """Edge profile exponent outside the square-root window."""


class NonMonotoneCountError(AnalysisError):
    """Bound-state count decreased along increasing window scale."""


@dataclass(frozen=True)
class CountResult:
    resolved: int        # multiplicity-weighted bound states
    unresolved: int      # near-threshold candidates, never silently counted
    theta_disc: float
    ambiguous: bool

    @property
    def total_possible(self) -> int:
        return self.resolved + self.unresolved


def eigencount(layers: LayerPair, t: float, numerics: SolverNumerics,
               sector: int | None = None,
               grid: LayerGrid | None = None) -> CountResult:
    """Multiplicity-weighted bound-state count for a circular window of
    radius t; `sector` restricts to one angular sector."""
    if sector is None:
        spec = solve_all(layers, t, numerics, grid=grid)
        res, unres, theta = spec.resolved_count, spec.unresolved_count, spec.theta_disc
    else:
        sol = solve_sector(layers, t, sector, numerics, grid=grid)
        res = sum(s.multiplicity for s in sol.states if s.resolved)
        unres = sum(s.multiplicity for s in sol.states if not s.resolved)
        theta = sol.theta_disc
    return CountResult(resolved=res, unresolved=unres, theta_disc=theta,
                       ambiguous=unres > 0)


@dataclass(frozen=True)
class EmergenceReport:
    n: int
    t_n: float
    interval: tuple[float, float]
    bisection_trace: tuple[tuple[float, int, bool], ...]  # (t, count, ambiguous)
    sector: int | None
    L: float
    gap_samples: tuple[tuple[float, float], ...] = ()

    @property
    def final_interval_width(self) -> float:
        return self.interval[1] - self.interval[0]


def critical_scale(layers: LayerPair, n: int, interval: tuple[float, float],
                   numerics: SolverNumerics, sector: int | None = None,
                   rel_tol: float = 1e-4,
                   gap_floor: float = 5e-3) -> EmergenceReport:
    """Bisection for the window radius where the n-th state detaches.

    The first state exists for every positive radius, so n = 1 is rejected.
    Grid topology and truncation are frozen from the upper endpoint; the
    truncation is sized so gaps down to `gap_floor` stay resolved, which
    sets the sharpness of the located scale.
    """
    if n <= 1:
        raise ValueError(
            "the first state exists for every window; critical scales start at n = 2")
    t_lo, t_hi = interval
    if not 0 < t_lo < t_hi:
        raise ValueError("need 0 < t_lo < t_hi")

    kappa_floor = math.sqrt(gap_floor)
    L = min(numerics.L_max,
            max(4.0 * t_hi, t_hi + 1.1 * numerics.resolve_decay / kappa_floor))
    nums = replace(numerics, L=L)
    grid0 = build_layer_grid(layers, t_hi, L, nums)

    trace: list[tuple[float, int, bool]] = []

    def count_at(t: float) -> int:
        c = eigencount(layers, t, nums, sector=sector, grid=grid0.rescaled(t))
        trace.append((t, c.resolved, c.ambiguous))
        return c.resolved

    c_lo = count_at(t_lo)
    c_hi = count_at(t_hi)
    if not c_lo < n <= c_hi:
        raise ValueError(
            f"interval endpoints do not straddle the {n}-th state: "
            f"counts are {c_lo} at {t_lo} and {c_hi} at {t_hi}")
    lo, hi = t_lo, t_hi
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if count_at(mid) >= n:
            hi = mid
        else:
            lo = mid
    ordered = sorted(trace)
    for (t1, c1, _), (t2, c2, _) in zip(ordered, ordered[1:]):
        if c2 < c1:
            raise NonMonotoneCountError(
                f"count dropped from {c1} at t={t1} to {c2} at t={t2}")
    return EmergenceReport(n=n, t_n=hi, interval=(lo, hi),
                           bisection_trace=tuple(trace), sector=sector, L=L)


@dataclass(frozen=True)
class GapPoint:
    eps: float
    radius: float
    lam: float
    gap: float        # 1 - lam
    gap_disc: float   # discrete continuum edge - lam
    L: float
    state: BoundState


@dataclass(frozen=True)
class GapCurve:
    t_n: float
    points: tuple[GapPoint, ...]
    dropped: tuple[float, ...]  # eps values without a resolvable state

    def __len__(self):
        return len(self.points)


def gap_curve(layers: LayerPair, t_n: float, eps_list: list[float],
              numerics: SolverNumerics, beta: float = 1.0,
              sector: int | None = None, index_in_sector: int = 0,
              n_index: int | None = None) -> GapCurve:
    """Near-threshold gaps for windows of radius t_n (1 + beta*eps).

    Uniform dilation only (the 3D solver covers circular windows); pass
    either a sector and in-sector index, or a global eigenvalue index.
    Points whose state is unresolvable at the truncation cap are dropped
    and reported.
    """
    eps_sorted = sorted(set(float(e) for e in eps_list), reverse=True)
    if not eps_sorted or eps_sorted[-1] <= 0:
        raise ValueError("eps values must be positive")
    points = []
    dropped = []
    for eps in eps_sorted:
        radius = t_n * (1.0 + beta * eps)
        state = None
        if sector is not None:
            sol = solve_sector(layers, radius, sector, numerics)
            resolved = [s for s in sol.states if s.resolved]
            if len(resolved) > index_in_sector:
                state = resolved[index_in_sector]
                L = sol.L
        else:
            idx = (n_index if n_index is not None else 1) - 1
            spec = solve_all(layers, radius, numerics)
            expanded = []
            for s in spec.states:
                expanded.extend([s] * s.multiplicity)
            if len(expanded) > idx and expanded[idx].resolved:
                state = expanded[idx]
                L = state.op.grid.L
        if state is None:
            dropped.append(eps)
            continue
        points.append(GapPoint(eps=eps, radius=radius, lam=state.lam,
                               gap=ESSENTIAL_THRESHOLD - state.lam,
                               gap_disc=state.gap_disc, L=L, state=state))
    if not points:
        raise AnalysisError("no eps value produced a resolvable near-threshold state")
    return GapCurve(t_n=t_n, points=tuple(points), dropped=tuple(dropped))


@dataclass(frozen=True)
class AsymptoticFit:
    """Least-squares line through (1/eps, ln gap) and the implied coupling."""

    samples: tuple[tuple[float, float], ...]  # (eps, gap)
    slope: float
    intercept: float
    linearity_r2: float
    coupling_from_slope: float  # -2/slope when the exponential law holds
    accepted: bool
    reject_reason: str | None = None
    euler_constant: float = EULER_GAMMA


def fit_exponential_law(curve: GapCurve | list[tuple[float, float]],
                        use_discrete_gap: bool = True,
                        r2_min: float = 0.98) -> AsymptoticFit:
    """Fit ln(gap) = intercept + slope / eps and test exponential-law linearity.

    The fit is accepted only for negative slope with r^2 >= r2_min; the
    coupling integral estimate is -2/slope.  Gaps measured against the
    discrete continuum edge remove the transverse discretization bias.
    """
    if isinstance(curve, GapCurve):
        samples = [(p.eps, p.gap_disc if use_discrete_gap else p.gap)
                   for p in curve.points]
    else:
        samples = [(float(e), float(g)) for e, g in curve]
    if len(samples) < 4:
        raise ValueError("need at least four curve points")
    if any(g <= 0 for _, g in samples):
        raise ValueError("gaps must be positive")
    x = np.array([1.0 / e for e, _ in samples])
    y = np.log([g for _, g in samples])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    reason = None
    if slope >= 0:
        reason = "nonnegative slope: no decaying exponential law in range"
    elif r2 < r2_min:
        reason = f"linearity r^2 = {r2:.4f} below {r2_min}"
    return AsymptoticFit(samples=tuple(samples), slope=float(slope),
                         intercept=float(intercept), linearity_r2=r2,
                         coupling_from_slope=float(-2.0 / slope) if slope < 0 else math.nan,
                         accepted=reason is None, reject_reason=reason)


@dataclass(frozen=True)
class EdgeProfile:
    """Square-root amplitude of an eigenfunction at the window rim."""

    amplitude: float              # l: A(r) extrapolated to the rim
    exponent: float               # log-log slope of u(R, r), expect 1/2
    samples: tuple[tuple[float, float], ...]  # (r, A(r)) after rescaling
    fit_window: tuple[float, float]
    normalization_scale: float
    sector: int
    coupling_direct: float        # (1/2 gamma) * contour integral beta l(s)^2 ds
    amplitude_halves: tuple[float, float]  # extraction stability probe

    def amplitude_of_arclength(self, s: np.ndarray, rim_radius: float) -> np.ndarray:
        """l(s) along the rim: constant for the radial sector, cos(m phi)
        modulated otherwise (phi = s / rim radius)."""
        if self.sector == 0:
            return np.full_like(np.asarray(s, dtype=float), self.amplitude)
        return self.amplitude * np.cos(self.sector * np.asarray(s) / rim_radius)


def _line_fit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef  # slope, intercept


def extract_edge_profile(field: GridField, kappa: float, sector: int,
                         gamma: int, beta: float = 1.0,
                         fit_radii: np.ndarray | None = None,
                         envelope_corrected: bool = True,
                         normalize_at: float | None = None,
                         prenormalized: bool = False) -> EdgeProfile:
    """Rim amplitude extraction along the vertical ray above the edge.

    The field is rescaled so its wide-layer vertical profile has unit sine
    amplitude at the matching radius. With `envelope_corrected` the known
    far-field radial envelope (modified Bessel K of the sector order,
    anchored at the rim) is divided out first; the plain plateau reading is
    its kappa*rho -> 0 limit but acquires an exp(kappa rho*) bias once the
    decay length nears the matching radius.
    """
    R = field.R
    if prenormalized:
        amp = 1.0
    else:
        rho_star = normalize_at if normalize_at is not None else max(3.0 * R, 5.0)
        if rho_star >= 0.9 * field.rho[-1]:
            raise InsufficientRangeError("matching radius beyond the grid")
        amp = field.vertical_amplitude(rho_star)
        if envelope_corrected and kappa > 0:
            env = float(bessel_kv(sector, kappa * rho_star)
                        / bessel_kv(sector, kappa * R))
            if not 0 < env <= 1.0000001:
                raise AnalysisError("far-field envelope evaluation failed")
            amp = amp / env
        if abs(amp) < 1e-14:
            raise AnalysisError("vanishing matching amplitude; cannot normalize")

    if fit_radii is None:
        zpos = field.z[field.z > 0]
        r_max = min(0.3, 0.4 * R)
        r_min = max(3.0 * float(np.min(np.diff(field.z))), 1.5e-3)
        fit_radii = zpos[(zpos >= r_min) & (zpos <= r_max)]
        if len(fit_radii) > 24:
            fit_radii = fit_radii[np.linspace(0, len(fit_radii) - 1, 24).astype(int)]
    fit_radii = np.asarray(fit_radii, dtype=float)
    if len(fit_radii) < 5:
        raise InsufficientRangeError("need at least five rim fit radii")

    uvals = np.array([field.value_on_edge_ray(float(r)) for r in fit_radii]) / amp
    if np.any(uvals == 0):
        raise AnalysisError("zero field value on the rim ray")
    sin_half = math.sin(math.pi / 4.0)  # theta = pi/2 on the vertical ray
    amps = uvals / (np.sqrt(fit_radii) * sin_half)

    slope, _ = _line_fit(np.log(fit_radii), np.log(np.abs(uvals)))
    if not 0.4 <= slope <= 0.6:
        raise ProfileRejectedError(
            f"rim exponent {slope:.3f} outside [0.4, 0.6]; grid too coarse at the edge")

    # A(r) = l + O(sqrt(r)): linear fit in sqrt(r), intercept = l
    _, intercept = _line_fit(np.sqrt(fit_radii), amps)
    half = len(fit_radii) // 2
    l_lo = float(_line_fit(np.sqrt(fit_radii[:half]), amps[:half])[1])
    l_hi = float(_line_fit(np.sqrt(fit_radii[half:]), amps[half:])[1])

    l = float(intercept)
    angular = 2.0 * math.pi if sector == 0 else math.pi
    coupling = beta * l * l * angular * R / (2.0 * gamma)
    return EdgeProfile(amplitude=l, exponent=float(slope),
                       samples=tuple(zip(fit_radii.tolist(), amps.tolist())),
                       fit_window=(float(fit_radii[0]), float(fit_radii[-1])),
                       normalization_scale=float(amp), sector=sector,
                       coupling_direct=float(coupling),
                       amplitude_halves=(l_lo, l_hi))


def edge_amplitude(state: BoundState, layers: LayerPair,
                   beta: float = 1.0, **kwargs) -> EdgeProfile:
    """Rim amplitude and direct coupling integral for a solver bound state."""
    return extract_edge_profile(state.field(), kappa=state.kappa,
                                sector=state.m, gamma=layers.gamma,
                                beta=beta, **kwargs)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    predicted: float  # sqrt(1 - lam)
    samples: tuple[tuple[float, float], ...]  # (rho, ln(|u| sqrt(rho)))
    fit_window: tuple[float, float]

    @property
    def relative_error(self) -> float:
        return abs(self.rate - self.predicted) / self.predicted


def fit_far_field_decay(field: GridField, kappa_predicted: float,
                        window: tuple[float, float] | None = None,
                        min_samples: int = 8) -> DecayFit:
    """Exponential decay rate of the mid-layer trace: ln(|u| sqrt(rho)) vs rho."""
    rho, trace = field.midlayer_profile(math.pi / 2.0)
    lo, hi = window if window is not None else (2.0 * field.R, 0.8 * float(rho[-1]))
    mask = (rho >= lo) & (rho <= hi) & (np.abs(trace) > 1e-280)
    if int(mask.sum()) < min_samples:
        raise InsufficientRangeError("fewer than the minimum mid-layer samples")
    if kappa_predicted * (hi - lo) < 3.0:
        raise InsufficientRangeError(
            f"fit window spans {kappa_predicted * (hi - lo):.2f} decay lengths (< 3)")
    x = rho[mask]
    y = np.log(np.abs(trace[mask]) * np.sqrt(x))
    slope, _ = _line_fit(x, y)
    return DecayFit(rate=float(-slope), predicted=kappa_predicted,
                    samples=tuple(zip(x.tolist(), y.tolist())),
                    fit_window=(float(x[0]), float(x[-1])))


def decay_rate(state: BoundState) -> DecayFit:
    """Far-field rate of a bound state against sqrt(1 - lam)."""
    if state.gap <= 1e-6:
        raise InsufficientRangeError("gap below 1e-6: decay length exceeds any grid")
    return fit_far_field_decay(state.field(), math.sqrt(state.gap))


@dataclass(frozen=True)
class MonotonicityReport:
    t_values: tuple[float, ...]
    eigenvalues: tuple[tuple[float, ...], ...]  # multiplicity-expanded per t
    counts: tuple[int, ...]
    violations: tuple[tuple[float, float, int, float, float], ...]
    passed: bool
    arrivals: tuple[tuple[float, int], ...]  # (t, count jump)


def monotonicity_check(layers: LayerPair, t_grid: list[float],
                       numerics: SolverNumerics,
                       tolerance: float = 1e-6) -> MonotonicityReport:
    """Per-index eigenvalues must not increase with the window scale."""
    ts = list(t_grid)
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("scale grid must be nondecreasing")
    specs = [solve_all(layers, t, numerics) for t in ts]
    evs = [tuple(s.eigenvalues()) for s in specs]
    counts = [s.resolved_count for s in specs]
    violations = []
    arrivals = []
    for (t1, e1), (t2, e2) in zip(zip(ts, evs), zip(ts[1:], evs[1:])):
        for i in range(min(len(e1), len(e2))):
            if e2[i] > e1[i] + tolerance:
                violations.append((t1, t2, i + 1, e1[i], e2[i]))
        if len(e2) > len(e1):
            arrivals.append((t2, len(e2) - len(e1)))
    for (t1, c1), (t2, c2) in zip(zip(ts, counts), zip(ts[1:], counts[1:])):
        if c2 < c1:
            violations.append((t1, t2, 0, float(c1), float(c2)))
    return MonotonicityReport(t_values=tuple(ts), eigenvalues=tuple(evs),
                              counts=tuple(counts), violations=tuple(violations),
                              passed=not violations, arrivals=tuple(arrivals))
