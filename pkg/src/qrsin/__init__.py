"""Expanding quasiregular trigonometric-type maps in R^d.

Construction of the piecewise bi-Lipschitz base map, iteration of the
expanding map f = lam * F, symbolic itineraries and inverse-branch pullbacks,
hair tracing and endpoint estimation, numerical constant estimation
(expansion, dilatation, ordering threshold), box-counting dimension, and
deterministic escape-time rendering of planar slices.
"""

__version__ = "0.1.0"

from .core import (
    Itinerary,
    MapParams,
    OrbitRecord,
    OrbitStatus,
    SeededSampler,
    TrayIndex,
    admissible_successor,
    validate_params,
)
from .basemap import (
    base_F,
    base_F_inv,
    fold,
    lambda_branch,
    map_F,
    map_f,
    tray_of,
    unfold,
)
from .backend import BACKEND, HAVE_COMPILED

__all__ = [
    "__version__",
    "TrayIndex", "Itinerary", "MapParams", "OrbitRecord", "OrbitStatus",
    "SeededSampler", "validate_params", "admissible_successor",
    "base_F", "base_F_inv", "fold", "unfold", "tray_of",
    "map_f", "map_F", "lambda_branch",
    "BACKEND", "HAVE_COMPILED",
]
