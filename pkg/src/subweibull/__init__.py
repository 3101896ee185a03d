"""Constants-explicit sub-Weibull concentration: calculators, estimators and Monte Carlo checks."""

from .errors import InputError, NumericError

__version__ = "0.1.0"

__all__ = ["InputError", "NumericError", "__version__"]
