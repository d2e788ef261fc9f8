"""Joint bands, band-derived global p-values, residual bootstrap test."""

import numpy as np
import pytest

from dorqf.inference import band_global_pvalue, bootstrap_effect_test, joint_band
from dorqf.model import fit_dorqf
from dorqf.simulate import ScenarioSpec, generate_replication


@pytest.fixture(scope="module")
def fitted():
    spec = ScenarioSpec(scenario="A1", n=80, L=150, m=50, reps=1, seed=2,
                        noise_is_sd=True)
    data, _, truth = generate_replication(spec, 0)
    return data, fit_dorqf(data, 3), truth


def test_band_contains_center(fitted):
    _, fit, _ = fitted
    band = joint_band(fit, "beta1", draws=200, seed=0)
    assert np.all(band.lower <= band.center)
    assert np.all(band.center <= band.upper)
    assert band.critical > 0
    assert len(band.sup_stats) == 200


def test_band_width_shrinks_with_alpha(fitted):
    _, fit, _ = fitted
    wide = joint_band(fit, "beta1", alpha=0.01, draws=400, seed=1)
    narrow = joint_band(fit, "beta1", alpha=0.50, draws=400, seed=1)
    assert np.mean(wide.upper - wide.lower) > np.mean(narrow.upper - narrow.lower)


def test_band_alpha_one_uses_smallest_sup(fitted):
    _, fit, _ = fitted
    band = joint_band(fit, "beta1", alpha=1.0, draws=150, seed=2)
    assert band.critical == pytest.approx(min(band.sup_stats))


def test_band_covers_truth_here(fitted):
    _, fit, truth = fitted
    band = joint_band(fit, "beta1", draws=500, seed=3)
    assert np.all(band.lower <= truth["beta1"])
    assert np.all(truth["beta1"] <= band.upper)


def test_band_seed_reproducible(fitted):
    _, fit, _ = fitted
    b1 = joint_band(fit, "beta1", draws=150, seed=9)
    b2 = joint_band(fit, "beta1", draws=150, seed=9)
    np.testing.assert_array_equal(b1.lower, b2.lower)
    np.testing.assert_array_equal(b1.sup_stats, b2.sup_stats)


def test_band_targets_shapes(fitted):
    _, fit, _ = fitted
    b0 = joint_band(fit, "beta0", draws=120, seed=4)
    assert b0.center.shape == fit.grid.shape
    with pytest.warns(UserWarning, match="flooring"):
        # h is pinned to zero at x = 0, so the first point has no spread
        h = joint_band(fit, "h", draws=120, seed=5)
    assert h.center.shape[0] == h.grid.shape[0]
    qx = np.linspace(*fit.predictor_scale, fit.grid.size)
    g = joint_band(fit, "gamma", draws=120, seed=6, qx_raw=qx)
    assert g.center.shape == fit.grid.shape


def test_band_gamma_requires_curve(fitted):
    _, fit, _ = fitted
    with pytest.raises(ValueError, match="reference predictor curve"):
        joint_band(fit, "gamma", draws=120, seed=7)


def test_band_rejects_unknown_target(fitted):
    _, fit, _ = fitted
    with pytest.raises(ValueError):
        joint_band(fit, "beta9", draws=120, seed=8)


def test_band_needs_covariance():
    spec = ScenarioSpec(scenario="A1", n=40, L=100, m=30, reps=1, seed=4,
                        noise_is_sd=True)
    data, _, _ = generate_replication(spec, 0)
    fit = fit_dorqf(data, 2, with_covariance=False)
    with pytest.raises(ValueError):
        joint_band(fit, "beta1", draws=120, seed=0)


def test_band_minimum_draws(fitted):
    _, fit, _ = fitted
    with pytest.raises(ValueError):
        joint_band(fit, "beta1", draws=50, seed=0)


def test_global_pvalue_fraction_identity(fitted):
    _, fit, _ = fitted
    band = joint_band(fit, "beta1", draws=300, seed=11)
    res = band_global_pvalue(fit, "beta1", draws=300, seed=11, band=band)
    t_obs = float(np.max(np.abs(band.center) / band.pointwise_sd))
    frac = float(np.mean(np.asarray(band.sup_stats) >= t_obs))
    assert res.p_value == pytest.approx(frac, abs=1e-12)
    assert res.statistic == pytest.approx(t_obs)
    assert res.method == "band-sup"


def test_global_pvalue_rejects_true_effect(fitted):
    _, fit, _ = fitted
    res = band_global_pvalue(fit, "beta1", draws=400, seed=12)
    assert res.p_value < 0.05


def test_bootstrap_statistic_nonnegative(fitted):
    data, _, truth = fitted
    res = bootstrap_effect_test(data, 3, drop=0, draws=199,
                                seed=truth["boot_seed"])
    assert res.statistic >= 0.0
    assert 0.0 <= res.p_value <= 1.0
    assert res.method == "bootstrap-f"
    assert res.null_spec == "beta1 = 0"


def test_bootstrap_detects_strong_effect(fitted):
    data, _, _ = fitted
    res = bootstrap_effect_test(data, 3, drop=0, draws=199, seed=5)
    assert res.p_value < 0.05


def test_bootstrap_predictor_drop(fitted):
    data, _, _ = fitted
    res = bootstrap_effect_test(data, 3, drop="predictor", draws=199, seed=6)
    assert res.null_spec == "h = 0"
    assert res.p_value < 0.05


def test_bootstrap_null_size_on_pure_noise():
    # no scalar effect in the truth: p-values should not pile up near zero
    spec = ScenarioSpec(scenario="A2", n=60, L=120, m=40, reps=6, seed=8,
                        d=0.0, noise_is_sd=True)
    pvals = []
    for r in range(6):
        data, _, truth = generate_replication(spec, r)
        res = bootstrap_effect_test(data, 3, drop=0, draws=199,
                                    seed=truth["boot_seed"])
        pvals.append(res.p_value)
    assert np.mean(np.asarray(pvals) < 0.05) <= 0.5


def test_bootstrap_rejects_bad_drop(fitted):
    data, _, _ = fitted
    with pytest.raises(ValueError):
        bootstrap_effect_test(data, 3, drop=5, draws=199, seed=0)
    with pytest.raises(ValueError):
        bootstrap_effect_test(data, 3, drop="z1", draws=199, seed=0)
    with pytest.raises(ValueError):
        bootstrap_effect_test(data, 3, drop=0, draws=50, seed=0)


def test_bootstrap_seed_reproducible(fitted):
    data, _, _ = fitted
    a = bootstrap_effect_test(data, 3, drop=0, draws=199, seed=13)
    b = bootstrap_effect_test(data, 3, drop=0, draws=199, seed=13)
    assert a.statistic == b.statistic
    assert a.p_value == b.p_value
