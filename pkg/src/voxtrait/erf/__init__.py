"""Extremely randomized trees: forest, grid search, cross-validation.

Tree growth runs in a compiled Cython kernel when the extension built,
with a pure-numpy fallback otherwise; see `_backend.BACKEND` for which
one is active. Both kernels consume identical random streams, so each
backend is bit-exactly deterministic for a fixed seed.
"""

from ._backend import BACKEND
from .forest import (
    Forest,
    SchemaMismatchError,
    feature_importance,
    fit,
    load_forest,
    predict,
    save_forest,
)
from .validate import (
    ANCHOR_HP,
    DEFAULT_GRID,
    CvMetrics,
    cross_validate,
    grid_search,
    regression_metrics,
)

__all__ = [
    "ANCHOR_HP",
    "BACKEND",
    "CvMetrics",
    "DEFAULT_GRID",
    "Forest",
    "SchemaMismatchError",
    "cross_validate",
    "feature_importance",
    "fit",
    "grid_search",
    "load_forest",
    "predict",
    "regression_metrics",
    "save_forest",
]
