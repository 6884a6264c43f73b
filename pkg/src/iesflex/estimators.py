"""
Estimator-style wrappers around the pipeline stages.

The classes follow the scikit-learn conventions (constructor stores
hyper-parameters only, ``fit`` returns ``self``, learned state ends with an
underscore) so they work with ``get_params``/``set_params`` and ``clone``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .conic import OPTIMAL, BranchBoundParams, solve_misocp
from .evaluate import AffinePolicySolution, apply_policy, violation_report
from .exceptions import DimensionError, SolveError
from .reformulate import ReformulationMode, compile_program
from .scenarios import (ScenarioSet, cluster_representative_days, estimate_moments,
                        lloyd_assign)


def _check_profiles(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or X.shape[1] < 2:
        raise DimensionError("profiles must have shape (days, channels>=2, hours)")
    if not np.all(np.isfinite(X)):
        raise DimensionError("profiles contain non-finite values")
    return X


def _check_wind(X):
    if isinstance(X, ScenarioSet):
        return X.wind
    X = np.asarray(X, dtype=float)
    if X.ndim != 4:
        raise DimensionError("wind samples must have shape (scenarios, days, hours, plants)")
    return X


class RepresentativeDayClusterer(TransformerMixin, BaseEstimator):
    """K-means grouping of daily demand profiles.

    ``fit`` takes profiles of shape ``(days, channels, hours)`` with
    electric demand in channel 0 and heat demand in channel 1.
    ``transform`` returns squared distances to every representative day on
    the clustering scale, ``predict`` the nearest one.
    """

    def __init__(self, n_days=10, seed=0, n_init=50):
        self.n_days = n_days
        self.seed = seed
        self.n_init = n_init

    def fit(self, X, y=None):
        X = _check_profiles(X)
        self.days_ = cluster_representative_days(X, self.n_days, self.seed, self.n_init)
        self.labels_ = self.days_.labels
        self.cluster_centers_ = self.days_.centroids
        self.inertia_ = self.days_.inertia
        self._fit_profiles = X
        return self

    def predict(self, X):
        check_is_fitted(self, "days_")
        X = _check_profiles(X)
        if X.shape[1:] != self.cluster_centers_.shape[1:]:
            raise DimensionError(f"profiles of shape {X.shape[1:]} do not match "
                                 f"{self.cluster_centers_.shape[1:]}")
        return lloyd_assign(X, self.cluster_centers_)

    def transform(self, X):
        check_is_fitted(self, "days_")
        X = _check_profiles(X)
        scale = np.abs(self._fit_profiles).max(axis=(0, 2))
        scale[scale == 0] = 1.0
        flat = (X / scale[None, :, None]).reshape(X.shape[0], -1)
        cent = (self.cluster_centers_ / scale[None, :, None]).reshape(len(self.cluster_centers_), -1)
        return ((flat[:, None, :] - cent[None]) ** 2).sum(axis=2)


class WindMomentEstimator(TransformerMixin, BaseEstimator):
    """Mean and covariance of wind samples; ``transform`` gives forecast errors."""

    def fit(self, X, y=None):
        self.moments_ = estimate_moments(ScenarioSet(_check_wind(X)))
        return self

    def transform(self, X):
        check_is_fitted(self, "moments_")
        w = _check_wind(X)
        if w.shape[1:] != self.moments_.mean.shape:
            raise DimensionError(f"wind samples of shape {w.shape[1:]} do not match "
                                 f"{self.moments_.mean.shape}")
        return w - self.moments_.mean[None]


class FlexibilityPlanner(BaseEstimator):
    """Compile and solve the planning problem for an instance.

    ``fit(instance)`` stores the compiled program, the solver result and the
    affine policies.  ``predict(errors)`` replays the policies against
    forecast errors of shape ``(samples, days, hours, plants)`` and
    ``score(errors)`` is one minus the violation fraction.
    """

    def __init__(self, mode="DRCC", epsilon=None, enable_p2hh=True, enable_boiler=True,
                 solver_params=None):
        self.mode = mode
        self.epsilon = epsilon
        self.enable_p2hh = enable_p2hh
        self.enable_boiler = enable_boiler
        self.solver_params = solver_params

    def fit(self, instance, y=None):
        eps = instance.params.epsilon if self.epsilon is None else self.epsilon
        mode = ReformulationMode(self.mode, eps)
        params = self.solver_params
        if params is None:
            params = BranchBoundParams()
        elif isinstance(params, dict):
            params = BranchBoundParams(**params)
        self.program_ = compile_program(instance, mode, self.enable_p2hh, self.enable_boiler)
        self.result_ = solve_misocp(self.program_, params)
        if self.result_.x is None:
            raise SolveError(f"no solution: {self.result_.status} ({self.result_.message})",
                             self.result_.status)
        self.policy_ = AffinePolicySolution.from_vector(self.program_, self.result_.x, instance)
        self.instance_ = instance
        self.objective_ = self.result_.objective
        self.optimal_ = self.result_.status == OPTIMAL
        return self

    def predict(self, errors):
        check_is_fitted(self, "policy_")
        return apply_policy(self.policy_, errors, self.instance_)

    def score(self, errors, y=None):
        check_is_fitted(self, "policy_")
        return 1.0 - violation_report(self.policy_, errors, self.instance_).fraction
