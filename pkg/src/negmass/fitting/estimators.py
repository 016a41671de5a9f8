"""
Scikit-learn style wrappers around the fitting engine.

``X`` holds probe frequencies in Hz, ``y`` the measured values. Parameter
guesses and fixed values are given in angular units, like everywhere else
inside the package.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..spectra import PSD, REFLECTION, Spectrum
from . import models as M
from ._validation import check_frequencies, check_is_fitted, check_targets, sort_by_frequency
from .core import GTOL, MAX_ITER, FitProblem, fit_psd, fit_reflection


class _BaseFitter(BaseEstimator):
    _kind = REFLECTION

    def _problem(self, X, y):
        X = check_frequencies(X)
        y = check_targets(y, X.size, self._kind == REFLECTION)
        X, y = sort_by_frequency(X, y)
        spec = M.get_model(self.model)
        fixed = dict(self.fixed or {})
        guess = dict(self.guess or {})
        free_names = self.free if self.free is not None else spec.default_free
        free = {n: guess.pop(n, None) for n in free_names if n not in fixed}
        # guesses for non-free parameters act as fixed values
        for n, v in guess.items():
            if n in spec.params and n not in free:
                fixed.setdefault(n, v)
        data = Spectrum(X, y, self._kind)
        return FitProblem(self.model, data, free, fixed, dict(self.bounds or {}),
                          nuisance=getattr(self, "nuisance", False),
                          max_iter=self.max_iter, gtol=self.gtol)

    def _store(self, res):
        self.result_ = res
        self.estimates_ = dict(res.estimates)
        self.stderr_ = dict(res.stderr)
        self.covariance_ = res.covariance
        self.converged_ = res.converged
        self.n_iter_ = res.iterations
        self.residual_norm_ = res.residual_norm
        self.free_names_ = res.names
        return self

    def predict(self, X):
        check_is_fitted(self)
        return self.result_.predict(check_frequencies(X))


class ReflectionFitter(_BaseFitter):
    """Fit ``S11`` of a single mode, the two-mode driven cavity or the coupled system.

    Parameters
    ----------
    model : {"s11-single", "s11-two-mode", "s11-coupled"}
    free : sequence of str, optional
        Free model parameters; defaults to the model's usual set.
    guess : dict, optional
        Initial values (angular units). Entries for non-free parameters are
        used as fixed values.
    fixed : dict, optional
    bounds : dict, optional
    nuisance : bool
        Fit a complex scale and an electrical delay.

    Attributes
    ----------
    estimates_, stderr_ : dict
    covariance_ : ndarray
    converged_ : bool
    n_iter_ : int
    result_ : FitResult
    """

    _kind = REFLECTION

    def __init__(self, model="s11-single", free=None, guess=None, fixed=None, bounds=None,
                 nuisance=True, max_iter=MAX_ITER, gtol=GTOL):
        self.model = model
        self.free = free
        self.guess = guess
        self.fixed = fixed
        self.bounds = bounds
        self.nuisance = nuisance
        self.max_iter = max_iter
        self.gtol = gtol

    def fit(self, X, y):
        return self._store(fit_reflection(self._problem(X, y)))

    def score(self, X, y):
        """Negative RMS of the complex residual."""
        X = check_frequencies(X)
        y = check_targets(y, X.size, True)
        return -float(np.sqrt(np.mean(np.abs(self.predict(X) - y) ** 2)))


class PsdFitter(_BaseFitter):
    """Fit the HF output PSD in quanta with the sideband-cooling model.

    ``fixed`` must contain the working-point quantities (``gain``, ``kappa``,
    ``kappa_e``, ``Gamma0`` and usually ``omega0``, ``kerr_nd`` and
    ``mirror_detuning``); see :func:`negmass.fitting.psd_fixed_from_working_point`.

    Attributes
    ----------
    occupations_ : dict
        Final occupations implied by the fitted coupling and RF bath.
    """

    _kind = PSD

    def __init__(self, free=None, guess=None, fixed=None, bounds=None,
                 max_iter=MAX_ITER, gtol=GTOL):
        self.free = free
        self.guess = guess
        self.fixed = fixed
        self.bounds = bounds
        self.max_iter = max_iter
        self.gtol = gtol

    model = "psd-cooling"

    def fit(self, X, y):
        self._store(fit_psd(self._problem(X, y)))
        self.occupations_ = dict(self.result_.derived)
        return self

    def score(self, X, y):
        X = check_frequencies(X)
        y = check_targets(y, X.size, False)
        return -float(np.sqrt(np.mean((self.predict(X) - y) ** 2)))


__all__ = ["ReflectionFitter", "PsdFitter"]
