"""Grid construction, empirical quantiles, and Wasserstein distance."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dorqf.quantiles import (
    check_grid,
    default_grid,
    empirical_quantile,
    empirical_quantile_matrix,
    inverse_rescale,
    is_nondecreasing,
    rescale_to_unit,
    trapezoid_weights,
    wasserstein_distance,
)


def test_default_grid_endpoints_and_size():
    g = default_grid(100)
    assert g.shape == (100,)
    assert g[0] == pytest.approx(0.005)
    assert g[-1] == pytest.approx(0.995)
    assert np.all(np.diff(g) > 0)


def test_default_grid_custom_bounds():
    g = default_grid(7, lo=0.1, hi=0.9)
    assert g[0] == pytest.approx(0.1)
    assert g[-1] == pytest.approx(0.9)
    assert len(g) == 7


def test_check_grid_rejects_bad_input():
    with pytest.raises(ValueError):
        check_grid(np.array([0.5, 0.4]))
    with pytest.raises(ValueError):
        check_grid(np.array([0.0, 0.5]))
    with pytest.raises(ValueError):
        check_grid(np.array([0.5]))


def test_trapezoid_weights_unit_mass():
    g = default_grid(100)
    w = trapezoid_weights(g)
    assert np.sum(w) == pytest.approx(1.0, abs=1e-12)
    assert np.all(w > 0)


def test_trapezoid_weights_constant_integral():
    # unit mass makes the weighted sum of a constant equal that constant
    g = default_grid(31)
    w = trapezoid_weights(g)
    assert np.sum(w * 4.2) == pytest.approx(4.2)


def test_empirical_quantile_interpolation_oracle():
    # rank (L+1)p with linear interpolation, clamped to the extremes
    rng = np.random.default_rng(0)
    x = rng.normal(size=17)
    grid = np.array([0.005, 0.3, 0.5, 0.77, 0.995])
    s = np.sort(x)
    L = len(s)
    expected = []
    for p in grid:
        t = (L + 1) * p
        j = int(np.floor(t))
        w = t - j
        if j <= 0:
            expected.append(s[0])
        elif j >= L:
            expected.append(s[-1])
        else:
            expected.append((1 - w) * s[j - 1] + w * s[j])
    np.testing.assert_allclose(empirical_quantile(x, grid), expected, rtol=0, atol=0)


def test_empirical_quantile_rejects_single_observation():
    with pytest.raises(ValueError):
        empirical_quantile(np.array([3.5]), default_grid(10))


def test_empirical_quantile_median_of_odd_sample():
    # p = 0.5 with L odd lands exactly on the middle order statistic
    x = np.array([5.0, 1.0, 3.0])
    assert empirical_quantile(x, np.array([0.25, 0.5, 0.75]))[1] == 3.0


def test_empirical_quantile_matrix_matches_rows():
    rng = np.random.default_rng(1)
    samples = rng.normal(size=(5, 40))
    grid = default_grid(25)
    mat = empirical_quantile_matrix(samples, grid)
    assert mat.shape == (5, 25)
    for i in range(5):
        np.testing.assert_allclose(mat[i], empirical_quantile(samples[i], grid))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=60),
       st.integers(3, 40))
def test_empirical_quantile_nondecreasing(values, m):
    out = empirical_quantile(np.array(values), default_grid(m))
    assert is_nondecreasing(out)


def test_wasserstein_shift_identity():
    g = default_grid(100)
    a = np.sin(g) + 2.0
    assert wasserstein_distance(a, a + 3.0, g) == pytest.approx(3.0, abs=1e-12)


def test_wasserstein_self_zero():
    g = default_grid(50)
    a = np.cumsum(np.abs(np.sin(g)))
    assert wasserstein_distance(a, a, g) == 0.0


def test_wasserstein_symmetry():
    g = default_grid(64)
    rng = np.random.default_rng(7)
    a = np.sort(rng.normal(size=64))
    b = np.sort(rng.normal(size=64))
    assert wasserstein_distance(a, b, g) == pytest.approx(
        wasserstein_distance(b, a, g))


def test_wasserstein_identity_map_value():
    # a(p) = p against zero: analytic L2 norm is 1/sqrt(3); the clipped
    # grid quadrature lands slightly below
    g = default_grid(100)
    d = wasserstein_distance(g.copy(), np.zeros_like(g), g)
    assert d == pytest.approx(0.5759267893288752, abs=1e-13)
    assert abs(d - 1.0 / np.sqrt(3.0)) < 2e-3


def test_rescale_round_trip():
    v = np.array([2.0, 5.0, 11.0])
    u = rescale_to_unit(v, 2.0, 11.0)
    np.testing.assert_allclose(u, [0.0, 1.0 / 3.0, 1.0])
    np.testing.assert_allclose(inverse_rescale(u, 2.0, 11.0), v)


def test_rescale_degenerate_range():
    with pytest.raises(ValueError):
        rescale_to_unit(np.array([1.0]), 3.0, 3.0)


def test_is_nondecreasing_tolerance():
    assert is_nondecreasing(np.array([0.0, -5e-11, 1.0]))
    assert not is_nondecreasing(np.array([0.0, -1e-8, 1.0]))
