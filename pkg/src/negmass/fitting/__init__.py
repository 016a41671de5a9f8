"""Least-squares fitting of reflection spectra and output PSDs."""

from ._lm import DegenerateModelError, levenberg_marquardt
from .core import (
    FitError,
    FitProblem,
    FitResult,
    fit_psd,
    fit_reflection,
    psd_fixed_from_working_point,
)
from .estimators import PsdFitter, ReflectionFitter
from .models import MODELS, get_model

__all__ = [
    "DegenerateModelError", "FitError", "FitProblem", "FitResult", "MODELS",
    "PsdFitter", "ReflectionFitter", "fit_psd", "fit_reflection", "get_model",
    "levenberg_marquardt", "psd_fixed_from_working_point",
]
