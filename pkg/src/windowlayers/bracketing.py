"""Two-sided eigenvalue estimates and eigenvalue-count bounds for the
window-coupled layer pair.

Inserting a Dirichlet (resp. Neumann) wall on the cylinder over the window
boundary sandwiches each 3D eigenvalue between pi^2/(pi+d)^2 plus the
corresponding window eigenvalue.  Counting window modes below
(2 pi d + d^2)/(pi+d)^2 bounds the number of bound states from both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .window_eigs import WindowSpectrum

__all__ = [
    "CountBounds",
    "ESSENTIAL_THRESHOLD",
    "LayerPair",
    "SpectralBracket",
    "brackets",
    "count_bounds",
    "count_threshold",
    "threshold_shift",
]

ESSENTIAL_THRESHOLD = 1.0  # bottom of the continuous spectrum (wide layer mode)


class InconsistentSpectraError(RuntimeError):
    """Neumann window value above the Dirichlet one at the same index."""


class InsufficientSpectrumError(ValueError):
    """Tabulated window spectrum too short to decide a count."""


@dataclass(frozen=True)
class LayerPair:
    """Layer widths: the wide layer has width pi, the narrow one d <= pi."""

    d: float

    def __post_init__(self):
        if not 0.0 < self.d <= math.pi:
            raise ValueError("narrow width must satisfy 0 < d <= pi")

    @property
    def gamma(self) -> int:
        """Symmetry factor: 2 for equal widths (even-parity reduction), else 1."""
        return 2 if self.d == math.pi else 1


def threshold_shift(layers: LayerPair) -> float:
    """pi^2/(pi+d)^2: lowest transverse mode of the joined column of height pi+d."""
    return math.pi ** 2 / (math.pi + layers.d) ** 2


def count_threshold(layers: LayerPair) -> float:
    """(2 pi d + d^2)/(pi+d)^2: window-mode cutoff for the count bounds."""
    d = layers.d
    return (2 * math.pi * d + d * d) / (math.pi + d) ** 2


@dataclass(frozen=True)
class SpectralBracket:
    index: int  # 1-based eigenvalue index
    lower: float
    upper: float
    mu_neumann: float
    mu_dirichlet: float

    def __post_init__(self):
        for name in ("lower", "upper", "mu_neumann", "mu_dirichlet"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.lower > self.upper:
            raise ValueError("bracket lower end above upper end")

    def contains(self, lam: float, slack: float = 0.0) -> bool:
        return bool(self.lower - slack <= lam <= self.upper + slack)

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class CountBounds:
    min_count: int
    max_count: int
    threshold_used: float
    undecided_dirichlet: int = 0
    undecided_neumann: int = 0

    def __post_init__(self):
        if self.min_count > self.max_count:
            raise ValueError("min_count above max_count")

    def contains(self, n: int) -> bool:
        return self.min_count <= n <= self.max_count

    def consistent_with(self, resolved: int, unresolved: int = 0) -> bool:
        """True when a solver count (plus possible unresolved states) fits."""
        return self.min_count <= resolved + unresolved and resolved <= self.max_count


def brackets(layers: LayerPair, neumann: WindowSpectrum, dirichlet: WindowSpectrum,
             count: int | None = None) -> list[SpectralBracket]:
    """Per-index eigenvalue intervals, widened by the window backend error bars.

    Brackets are emitted only while the lower end stays below the essential
    threshold; higher indices carry no information about bound states.
    """
    n = min(len(neumann), len(dirichlet))
    if count is not None:
        n = min(n, count)
    shift = threshold_shift(layers)
    out = []
    for i in range(n):
        mun, mud = neumann.values[i], dirichlet.values[i]
        errn, errd = neumann.errors[i], dirichlet.errors[i]
        if mun > mud + errn + errd + 1e-12:
            raise InconsistentSpectraError(
                f"window spectra out of order at index {i + 1}: "
                f"neumann {mun!r} > dirichlet {mud!r}")
        lower = shift + mun - errn
        upper = shift + mud + errd
        if lower >= ESSENTIAL_THRESHOLD:
            break
        out.append(SpectralBracket(index=i + 1, lower=lower, upper=upper,
                                   mu_neumann=mun, mu_dirichlet=mud))
    return out


def count_bounds(layers: LayerPair, neumann: WindowSpectrum,
                 dirichlet: WindowSpectrum) -> CountBounds:
    """Bound-state count interval from window modes below the cutoff.

    Counting is strict; values whose error bar straddles the cutoff are
    reported as undecided rather than silently included.
    """
    T = count_threshold(layers)
    if neumann.values[-1] + neumann.errors[-1] < T:
        raise InsufficientSpectrumError(
            "Neumann window spectrum does not reach the count threshold")
    if dirichlet.values[-1] + dirichlet.errors[-1] < T:
        raise InsufficientSpectrumError(
            "Dirichlet window spectrum does not reach the count threshold")

    def split(spectrum):
        decided = sum(1 for v, e in zip(spectrum.values, spectrum.errors) if v + e < T)
        undecided = sum(1 for v, e in zip(spectrum.values, spectrum.errors)
                        if v - e < T <= v + e)
        return decided, undecided

    min_count, und_d = split(dirichlet)
    max_count, und_n = split(neumann)
    return CountBounds(min_count=min_count, max_count=max_count + und_n,
                       threshold_used=T,
                       undecided_dirichlet=und_d, undecided_neumann=und_n)
