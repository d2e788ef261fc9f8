import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dorqf.invnorm import norm_quantile


def test_matches_scipy_ppf():
    p = np.linspace(1e-10, 1 - 1e-10, 200001)
    err = np.max(np.abs(norm_quantile(p) - stats.norm.ppf(p)))
    assert err < 1e-8


def test_deep_tails():
    p = np.array([1e-300, 1e-16, 0.5, 1 - 1e-16])
    np.testing.assert_allclose(norm_quantile(p), stats.norm.ppf(p),
                               rtol=1e-8, atol=1e-12)


def test_central_values():
    assert norm_quantile(0.5) == 0.0
    assert norm_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-9)
    assert norm_quantile(0.8413447460685429) == pytest.approx(1.0, abs=1e-9)


def test_symmetry():
    p = np.array([0.01, 0.1, 0.25, 0.4])
    np.testing.assert_allclose(norm_quantile(1 - p), -norm_quantile(p),
                               rtol=0, atol=1e-12)


def test_scalar_and_array_forms():
    assert np.isscalar(float(norm_quantile(0.3)))
    out = norm_quantile(np.array([[0.2, 0.8]]))
    assert out.shape == (1, 2)


def test_rejects_out_of_range():
    for bad in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            norm_quantile(bad)


@settings(max_examples=80, deadline=None)
@given(st.floats(1e-12, 1 - 1e-12), st.floats(1e-12, 1 - 1e-12))
def test_monotone(p1, p2):
    lo, hi = sorted((p1, p2))
    assert norm_quantile(lo) <= norm_quantile(hi)
