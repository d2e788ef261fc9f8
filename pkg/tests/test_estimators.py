import numpy as np
import pytest
from sklearn.base import clone

from dorqf.estimators import DorqfRegressor, IsotonicQuantileMap
from dorqf.simulate import ScenarioSpec, generate_replication


@pytest.fixture(scope="module")
def raw_data():
    spec = ScenarioSpec(scenario="A1", n=60, L=150, m=40, reps=1, seed=5,
                        noise_is_sd=True)
    data, test, _ = generate_replication(spec, 0)
    # back to raw units so the estimator re-derives the scaling itself
    lo, hi = data.covariate_scales[0]
    X = data.covariates[:, [0]] * (hi - lo) + lo
    plo, phi = data.predictor_scale
    Xd = data.predictor * (phi - plo) + plo
    return data.grid, X, data.outcome, Xd


def test_get_set_params_round_trip():
    est = DorqfRegressor(order=3, ridge=0.5)
    params = est.get_params()
    assert params["order"] == 3
    assert params["ridge"] == 0.5
    est.set_params(order=4)
    assert est.order == 4


def test_clone_preserves_params():
    est = DorqfRegressor(order=2, folds=3, pve=0.95)
    c = clone(est)
    assert c.get_params() == est.get_params()
    assert not hasattr(c, "fit_")


def test_fit_fixed_order(raw_data):
    grid, X, y, Xd = raw_data
    est = DorqfRegressor(order=3, grid=grid).fit(X, y, X_dist=Xd)
    assert est.order_ == 3
    assert est.cv_report_ is None
    assert est.n_features_in_ == 1
    pred = est.predict(X[:4], X_dist=Xd[:4])
    assert pred.shape == (4, grid.size)
    assert np.all(np.diff(pred, axis=1) >= -1e-9)


def test_fit_cv_selects_order(raw_data):
    grid, X, y, Xd = raw_data
    est = DorqfRegressor(order=None, orders=(1, 2, 3), folds=3,
                         grid=grid).fit(X, y, X_dist=Xd)
    assert est.order_ in (1, 2, 3)
    assert est.cv_report_ is not None
    assert est.cv_report_.selected_order == est.order_


def test_score_beats_mean_benchmark(raw_data):
    grid, X, y, Xd = raw_data
    est = DorqfRegressor(order=3, grid=grid).fit(X, y, X_dist=Xd)
    r2 = est.score(X, y, X_dist=Xd)
    assert 0.5 < r2 <= 1.0


def test_loocv_score_close_to_insample(raw_data):
    grid, X, y, Xd = raw_data
    est = DorqfRegressor(order=2, grid=grid).fit(X, y, X_dist=Xd)
    r2 = est.score(X, y, X_dist=Xd)
    lo = est.loocv_score(X, y, X_dist=Xd)
    assert lo <= r2 + 1e-8
    assert lo > 0.3


def test_predict_before_fit_raises():
    with pytest.raises(RuntimeError, match="not fitted"):
        DorqfRegressor(order=2).predict(np.zeros((2, 1)))


def test_isotonic_map_monotone(raw_data):
    grid, _, y, Xd = raw_data
    est = IsotonicQuantileMap(grid=grid).fit(Xd, y)
    pred = est.predict(Xd[:5])
    assert pred.shape == (5, grid.size)
    assert np.all(np.diff(pred, axis=1) >= -1e-12)


def test_isotonic_map_requires_fit():
    with pytest.raises(RuntimeError, match="not fitted"):
        IsotonicQuantileMap().predict(np.zeros((1, 4)))
