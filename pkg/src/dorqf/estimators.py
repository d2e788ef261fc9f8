"""Estimator-style wrappers around the fitting pipeline.

Thin adapters exposing fit/predict/score with get_params/set_params so the
models compose with standard tooling. Inputs are raw-scale: scalar
covariates as an (n, q) matrix, quantile curves as (n, m) matrices on a
shared probability grid.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .design import Dataset
from .model import cross_validate, fit_dorqf, fit_pava_baseline, loocv_r_squared
from .quantiles import default_grid, trapezoid_weights

__all__ = ["DorqfRegressor", "IsotonicQuantileMap"]


class DorqfRegressor(BaseEstimator, RegressorMixin):
    """Shape-constrained regression of outcome quantile functions.

    Parameters
    ----------
    order : int or None
        Bernstein order; None selects it by cross-validation.
    orders : tuple of int
        Candidate orders when cross-validating.
    folds : int
    cv_seed : int
    ridge : float
    pve : float
        Variance threshold for the residual principal components.
    theta_first_nonneg : bool
    grid : array-like or None
        Probability grid; defaults to 100 points on [0.005, 0.995].
    """

    def __init__(self, order=None, orders=tuple(range(1, 9)), folds=5,
                 cv_seed=0, ridge=0.0, pve=0.99, theta_first_nonneg=True,
                 grid=None):
        self.order = order
        self.orders = orders
        self.folds = folds
        self.cv_seed = cv_seed
        self.ridge = ridge
        self.pve = pve
        self.theta_first_nonneg = theta_first_nonneg
        self.grid = grid

    def _grid(self):
        return default_grid() if self.grid is None else np.asarray(self.grid, dtype=float)

    def _dataset(self, X, y, X_dist):
        return Dataset.from_raw(self._grid(), np.asarray(y, dtype=float),
                                covariates=X, predictor=X_dist)

    def fit(self, X, y, X_dist=None):
        """Fit on scalar covariates X, outcome curves y, predictor curves X_dist."""
        data = self._dataset(X, y, X_dist)
        if self.order is None:
            self.cv_report_ = cross_validate(
                data, orders=self.orders, folds=self.folds, seed=self.cv_seed,
                ridge=self.ridge, theta_first_nonneg=self.theta_first_nonneg)
            self.order_ = self.cv_report_.selected_order
        else:
            self.cv_report_ = None
            self.order_ = int(self.order)
        self.fit_ = fit_dorqf(data, self.order_, ridge=self.ridge, pve=self.pve,
                              theta_first_nonneg=self.theta_first_nonneg)
        self.n_features_in_ = data.q
        return self

    def _check_fitted(self):
        if not hasattr(self, "fit_"):
            raise RuntimeError("estimator is not fitted")

    def predict(self, X, X_dist=None):
        """Predicted outcome quantile curves, one row per subject."""
        self._check_fitted()
        return self.fit_.predict_batch(X, X_dist)

    def score(self, X, y, X_dist=None):
        """Functional R squared against the grand-mean benchmark."""
        self._check_fitted()
        y = np.asarray(y, dtype=float)
        pred = self.predict(X, X_dist)
        w = trapezoid_weights(self.fit_.grid)
        qbar = float(np.mean(y @ w))
        num = float(np.sum(w * (y - pred) ** 2))
        denom = float(np.sum(w * (y - qbar) ** 2))
        return 1.0 - num / denom

    def loocv_score(self, X, y, X_dist=None):
        """Leave-one-subject-out R squared at the fitted order."""
        self._check_fitted()
        data = self._dataset(X, y, X_dist)
        return loocv_r_squared(data, self.order_, ridge=self.ridge,
                               theta_first_nonneg=self.theta_first_nonneg)


class IsotonicQuantileMap(BaseEstimator, RegressorMixin):
    """Pooled isotonic transport map from predictor to outcome quantiles."""

    def __init__(self, grid=None):
        self.grid = grid

    def fit(self, X_dist, y):
        grid = default_grid() if self.grid is None else np.asarray(self.grid, dtype=float)
        data = Dataset.from_raw(grid, np.asarray(y, dtype=float),
                                predictor=np.asarray(X_dist, dtype=float))
        self.fit_ = fit_pava_baseline(data)
        return self

    def predict(self, X_dist):
        if not hasattr(self, "fit_"):
            raise RuntimeError("estimator is not fitted")
        X = np.atleast_2d(np.asarray(X_dist, dtype=float))
        return self.fit_.predict(X)
