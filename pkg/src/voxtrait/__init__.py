"""voxtrait: acoustic measures and randomized-forest rating models for voice.

The library extracts 23 acoustic measures (F0 statistics, perturbation
measures, formant frequencies, and vocal-tract-length estimators) from
speech recordings, trains extremely randomized trees to predict perceived
masculinity/femininity ratings, removes multicollinearity by clustering
the correlation matrix under VIF monitoring, and reports which acoustic
factors carry the prediction.
"""

__version__ = "0.1.0"

from .features import MEASURE_NAMES

__all__ = ["MEASURE_NAMES", "__version__"]
