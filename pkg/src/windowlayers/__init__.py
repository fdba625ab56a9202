"""Spectral toolkit for two parallel quantum layers coupled through a window."""

__version__ = "0.1.0"

from .bracketing import (  # noqa: F401
    ESSENTIAL_THRESHOLD,
    CountBounds,
    LayerPair,
    SpectralBracket,
    brackets,
    count_bounds,
    count_threshold,
    threshold_shift,
)
from .geometry import DilationProfile, WindowShape, dilate  # noqa: F401
from .layer_solver import (  # noqa: F401
    AxisymConfig,
    BoundState,
    LayerSpectrum,
    SolverNumerics,
    half_domain_solve,
    solve_all,
    solve_sector,
)
from .window_eigs import disk_window_spectrum, fem_window_spectrum, mesh_window  # noqa: F401
