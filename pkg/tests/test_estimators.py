import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from iesflex.desk import desk_instance
from iesflex.estimators import FlexibilityPlanner, RepresentativeDayClusterer, WindMomentEstimator
from iesflex.exceptions import DimensionError


def _profiles(rng, n=30, hours=6):
    base = np.stack([np.linspace(1, 2, hours), np.linspace(2, 1, hours)])
    g = rng.integers(0, 3, n)
    return base[None] * (1 + 0.4 * g[:, None, None]) + 0.02 * rng.standard_normal((n, 2, hours))


def test_clusterer_params_and_clone():
    est = RepresentativeDayClusterer(n_days=4, seed=3)
    assert est.get_params() == {"n_days": 4, "seed": 3, "n_init": 50}
    twin = clone(est.set_params(n_init=5))
    assert twin.get_params()["n_init"] == 5 and not hasattr(twin, "days_")


def test_clusterer_fit_predict_transform(rng):
    X = _profiles(rng)
    est = RepresentativeDayClusterer(n_days=3, seed=1, n_init=5)
    with pytest.raises(NotFittedError):
        est.predict(X)
    labels = est.fit(X).predict(X)
    np.testing.assert_array_equal(labels, est.labels_)
    d = est.transform(X)
    assert d.shape == (30, 3)
    np.testing.assert_array_equal(d.argmin(axis=1), labels)
    assert est.fit_transform(X).shape == (30, 3)
    with pytest.raises(DimensionError):
        est.predict(X[:, :, :4])


def test_wind_moments(rng):
    w = rng.random((50, 1, 3, 2))
    est = WindMomentEstimator().fit(w)
    err = est.transform(w)
    assert np.abs(err.mean(axis=0)).max() <= 1e-12
    with pytest.raises(DimensionError):
        est.transform(w[:, :, :2])


def test_planner(small_solved):
    inst = small_solved.inst
    planner = FlexibilityPlanner(solver_params={"rel_gap": 1e-6})
    assert clone(planner).get_params()["mode"] == "DRCC"
    planner.fit(inst)
    assert planner.optimal_
    assert planner.objective_ == pytest.approx(small_solved.sol.objective, rel=1e-6)
    d = planner.predict(small_solved.errors)
    assert d.power_residual.shape == (100, 1, 4)
    assert planner.score(small_solved.errors) == 1.0
