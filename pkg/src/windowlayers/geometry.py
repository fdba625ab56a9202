"""Star-shaped planar windows, arc-length boundary parametrization, and the
normal-displacement dilation family.

A window is a smooth star-shaped domain about the origin given by a finite
trigonometric radial profile rho(phi) and a positive scale factor.  All
operations are pure; shapes are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoundaryPoint",
    "DilationFitError",
    "DilationProfile",
    "InvalidShapeError",
    "WindowShape",
    "area",
    "boundary_sample",
    "dilate",
    "enclosing_radii",
    "perimeter",
]

_TWO_PI = 2.0 * math.pi


class InvalidShapeError(ValueError):
    """Profile is not strictly positive (domain not star-shaped)."""


class DilationFitError(RuntimeError):
    """Displaced boundary could not be refitted to a radial profile."""


def _d_cos(t, deriv):
    return (np.cos(t), -np.sin(t), -np.cos(t))[deriv]


def _d_sin(t, deriv):
    return (np.sin(t), np.cos(t), -np.sin(t))[deriv]


def _trig_eval(phi, cos_coeffs, sin_coeffs, deriv=0):
    """Evaluate a finite trig series or one of its phi-derivatives."""
    phi = np.asarray(phi, dtype=float)
    out = np.zeros_like(phi)
    if deriv == 0:
        out += cos_coeffs[0]
    for k in range(1, len(cos_coeffs)):
        out += cos_coeffs[k] * k ** deriv * _d_cos(k * phi, deriv)
    for k in range(1, len(sin_coeffs) + 1):
        out += sin_coeffs[k - 1] * k ** deriv * _d_sin(k * phi, deriv)
    return out


@dataclass(frozen=True)
class WindowShape:
    """Star-shaped window: radius(phi) = scale * (a0 + sum a_k cos k phi + b_k sin k phi)."""

    cos_coeffs: tuple[float, ...]
    sin_coeffs: tuple[float, ...] = ()
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "cos_coeffs", tuple(float(c) for c in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(c) for c in self.sin_coeffs))
        if self.scale <= 0:
            raise InvalidShapeError("scale must be positive")
        if not self.cos_coeffs:
            raise InvalidShapeError("profile needs at least the constant coefficient")
        if self.profile_min() <= 0:
            raise InvalidShapeError("radial profile must be strictly positive")

    @classmethod
    def disk(cls, radius: float) -> "WindowShape":
        return cls(cos_coeffs=(1.0,), scale=radius)

    @property
    def is_disk(self) -> bool:
        return len(self.cos_coeffs) == 1 and not any(self.sin_coeffs)

    def with_scale(self, scale: float) -> "WindowShape":
        return WindowShape(self.cos_coeffs, self.sin_coeffs, scale)

    def profile(self, phi, deriv: int = 0):
        return _trig_eval(phi, self.cos_coeffs, self.sin_coeffs, deriv)

    def radius(self, phi, deriv: int = 0):
        return self.scale * self.profile(phi, deriv)

    def profile_min(self, samples: int = 4096) -> float:
        phi = np.linspace(0.0, _TWO_PI, samples, endpoint=False)
        vals = _trig_eval(phi, self.cos_coeffs, self.sin_coeffs)
        i = int(np.argmin(vals))
        return _refine_extremum(lambda p: _trig_eval(p, self.cos_coeffs, self.sin_coeffs),
                                phi[i], _TWO_PI / samples, minimize=True)

    def profile_max(self, samples: int = 4096) -> float:
        phi = np.linspace(0.0, _TWO_PI, samples, endpoint=False)
        vals = _trig_eval(phi, self.cos_coeffs, self.sin_coeffs)
        i = int(np.argmax(vals))
        return _refine_extremum(lambda p: _trig_eval(p, self.cos_coeffs, self.sin_coeffs),
                                phi[i], _TWO_PI / samples, minimize=False)

    def boundary_speed(self, phi):
        r = self.radius(phi)
        dr = self.radius(phi, deriv=1)
        return np.sqrt(r * r + dr * dr)

    def position(self, phi):
        r = self.radius(phi)
        return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)

    def outward_normal(self, phi):
        r = self.radius(phi)
        dr = self.radius(phi, deriv=1)
        # unit tangent rotated by -90 degrees (counterclockwise traversal)
        tx = dr * np.cos(phi) - r * np.sin(phi)
        ty = dr * np.sin(phi) + r * np.cos(phi)
        sp = np.sqrt(tx * tx + ty * ty)
        return np.stack([ty / sp, -tx / sp], axis=-1)

    def curvature(self, phi):
        r = self.radius(phi)
        dr = self.radius(phi, deriv=1)
        d2r = self.radius(phi, deriv=2)
        return (r * r + 2 * dr * dr - r * d2r) / (r * r + dr * dr) ** 1.5


def _refine_extremum(f, x0, h, minimize: bool) -> float:
    """Golden-section polish of a sampled extremum; returns the value."""
    sign = 1.0 if minimize else -1.0
    a, b = x0 - h, x0 + h
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc, fd = sign * float(f(c)), sign * float(f(d))
    for _ in range(80):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = sign * float(f(c))
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = sign * float(f(d))
    return sign * min(fc, fd)


@dataclass(frozen=True)
class BoundaryPoint:
    s: float
    position: np.ndarray
    outward_normal: np.ndarray
    curvature: float
    phi: float = field(default=0.0)


@dataclass(frozen=True)
class DilationProfile:
    """Periodic displacement profile beta(s), period = boundary length."""

    cos_coeffs: tuple[float, ...] = (1.0,)
    sin_coeffs: tuple[float, ...] = ()

    @classmethod
    def uniform(cls, value: float = 1.0) -> "DilationProfile":
        return cls(cos_coeffs=(float(value),))

    @property
    def is_uniform(self) -> bool:
        return len(self.cos_coeffs) == 1 and not any(self.sin_coeffs)

    def value(self, s, period: float):
        w = _TWO_PI / period
        s = np.asarray(s, dtype=float)
        out = np.full_like(s, self.cos_coeffs[0])
        for k in range(1, len(self.cos_coeffs)):
            out += self.cos_coeffs[k] * np.cos(k * w * s)
        for k in range(1, len(self.sin_coeffs) + 1):
            out += self.sin_coeffs[k - 1] * np.sin(k * w * s)
        return out


def _adaptive_simpson(f, a: float, b: float, rel_tol: float = 1e-12) -> float:
    """Adaptive Simpson quadrature with a recursion-depth guard."""

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, tol, depth):
        xm1 = 0.5 * (x0 + 0.5 * (x0 + x2))
        xm2 = 0.5 * (0.5 * (x0 + x2) + x2)
        fm1, fm2 = f(xm1), f(xm2)
        x1 = 0.5 * (x0 + x2)
        left = simpson(x0, x1, f0, fm1, f1)
        right = simpson(x1, x2, f1, fm2, f2)
        if depth > 48 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(x0, x1, f0, fm1, f1, left, 0.5 * tol, depth + 1)
                + recurse(x1, x2, f1, fm2, f2, right, 0.5 * tol, depth + 1))

    fa, fb = f(a), f(b)
    fm = f(0.5 * (a + b))
    whole = simpson(a, b, fa, fm, fb)
    scale = abs(whole) + 1e-30
    return recurse(a, b, fa, fm, fb, whole, rel_tol * scale, 0)


def perimeter(shape: WindowShape, rel_tol: float = 1e-12) -> float:
    """Boundary length via adaptive quadrature of the parametric speed."""
    total = 0.0
    panels = 8
    for i in range(panels):
        a = _TWO_PI * i / panels
        b = _TWO_PI * (i + 1) / panels
        total += _adaptive_simpson(lambda p: float(shape.boundary_speed(p)), a, b, rel_tol)
    return total


def area(shape: WindowShape, rel_tol: float = 1e-12) -> float:
    """Enclosed area = 1/2 * integral of radius^2 d phi."""
    total = 0.0
    panels = 8
    for i in range(panels):
        a = _TWO_PI * i / panels
        b = _TWO_PI * (i + 1) / panels
        total += _adaptive_simpson(lambda p: float(shape.radius(p)) ** 2, a, b, rel_tol)
    return 0.5 * total


def enclosing_radii(shape: WindowShape) -> tuple[float, float]:
    """(inradius, circumradius) about the origin."""
    return shape.scale * shape.profile_min(), shape.scale * shape.profile_max()


class _ArcLength:
    """Cumulative arc length along the boundary with Newton inversion."""

    def __init__(self, shape: WindowShape, panels: int = 1024):
        self.shape = shape
        self.phi = np.linspace(0.0, _TWO_PI, panels + 1)
        cum = np.zeros(panels + 1)
        for i in range(panels):
            cum[i + 1] = cum[i] + _adaptive_simpson(
                lambda p: float(shape.boundary_speed(p)), self.phi[i], self.phi[i + 1])
        self.cum = cum
        self.total = cum[-1]

    def s_of_phi(self, phi: float) -> float:
        i = min(int(np.searchsorted(self.phi, phi) - 1), len(self.phi) - 2)
        i = max(i, 0)
        return self.cum[i] + _adaptive_simpson(
            lambda p: float(self.shape.boundary_speed(p)), self.phi[i], phi)

    def phi_of_s(self, s: float) -> float:
        i = min(int(np.searchsorted(self.cum, s) - 1), len(self.cum) - 2)
        i = max(i, 0)
        # linear seed on the panel, then Newton on the exact integral
        frac = (s - self.cum[i]) / max(self.cum[i + 1] - self.cum[i], 1e-300)
        phi = self.phi[i] + frac * (self.phi[i + 1] - self.phi[i])
        for _ in range(60):
            err = self.s_of_phi(phi) - s
            step = err / float(self.shape.boundary_speed(phi))
            phi -= step
            if abs(step) < 1e-14 * _TWO_PI:
                break
        return phi


def boundary_sample(shape: WindowShape, n: int) -> list[BoundaryPoint]:
    """n boundary points at equal arc-length spacing, starting at phi = 0."""
    if n < 8:
        raise ValueError("need at least 8 boundary samples")
    arc = _ArcLength(shape)
    points = []
    for i in range(n):
        s = arc.total * i / n
        phi = arc.phi_of_s(s)
        points.append(BoundaryPoint(
            s=s,
            position=shape.position(phi).reshape(2),
            outward_normal=shape.outward_normal(phi).reshape(2),
            curvature=float(shape.curvature(phi)),
            phi=phi,
        ))
    return points


def dilate(shape: WindowShape, eps: float, beta: DilationProfile,
           fit_tol: float = 1e-8, samples: int = 720) -> tuple[WindowShape, float]:
    """Displace the boundary by eps*beta(s) along the outward normal and refit
    the displaced curve to a radial profile.

    Returns (new shape, fit residual).  Fails loudly if the displaced curve is
    not star-shaped or the trigonometric refit cannot reach `fit_tol`.
    """
    if eps == 0.0:
        return shape, 0.0
    # exact shortcut: normal displacement of a disk is a disk
    if shape.is_disk and beta.is_uniform:
        return WindowShape.disk(shape.scale * shape.cos_coeffs[0]
                                + eps * beta.cos_coeffs[0]), 0.0

    pts = boundary_sample(shape, samples)
    period = perimeter(shape)
    pos = np.array([p.position for p in pts])
    nor = np.array([p.outward_normal for p in pts])
    svals = np.array([p.s for p in pts])
    disp = pos + eps * beta.value(svals, period)[:, None] * nor

    radii = np.hypot(disp[:, 0], disp[:, 1])
    angles = np.arctan2(disp[:, 1], disp[:, 0])
    if np.any(radii <= 0):
        raise InvalidShapeError("displaced boundary passes through the origin")
    unwrapped = np.unwrap(angles)
    if np.any(np.diff(unwrapped) <= 0) or not math.isclose(
            unwrapped[-1] - unwrapped[0], _TWO_PI, rel_tol=0.2):
        raise InvalidShapeError("displaced boundary is not star-shaped about the origin")

    base_order = max(len(shape.cos_coeffs) - 1, len(shape.sin_coeffs), 4)
    residual = math.inf
    fit = None
    for order in (base_order + 4, base_order + 8, 16, 24, 32, 48, 64):
        if 2 * order + 1 > samples // 2:
            break
        cols = [np.ones_like(angles)]
        cols += [np.cos(k * angles) for k in range(1, order + 1)]
        cols += [np.sin(k * angles) for k in range(1, order + 1)]
        design = np.stack(cols, axis=1)
        coeffs, *_ = np.linalg.lstsq(design, radii, rcond=None)
        resid = float(np.max(np.abs(design @ coeffs - radii)))
        if resid < residual:
            residual = resid
            fit = (tuple(coeffs[:order + 1]), tuple(coeffs[order + 1:]))
        if residual <= fit_tol:
            break
    if residual > fit_tol:
        raise DilationFitError(
            f"radial refit residual {residual:.3e} exceeds {fit_tol:.1e}")
    return WindowShape(cos_coeffs=fit[0], sin_coeffs=fit[1], scale=1.0), residual
