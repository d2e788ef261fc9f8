"""Residual-process eigenstructure and the sandwich covariance."""

import numpy as np
import pytest

from dorqf.covariance import estimate_residual_covariance, sandwich_covariance
from dorqf.design import Dataset, build_design
from dorqf.quantiles import default_grid


def test_white_noise_variance_recovered():
    rng = np.random.default_rng(0)
    sigma2 = 0.7
    resid = np.sqrt(sigma2) * rng.standard_normal((2000, 100))
    rc = estimate_residual_covariance(resid)
    assert rc.noise_variance == pytest.approx(sigma2, rel=0.10)


def test_zero_residuals_degenerate():
    rc = estimate_residual_covariance(np.zeros((5, 8)))
    assert rc.n_components == 0
    assert rc.noise_variance == 0.0
    np.testing.assert_array_equal(rc.matrix, np.zeros((8, 8)))


def test_subject_duplication_halves_sandwich():
    rng = np.random.default_rng(21)
    des = _small_design(rng, 4, 9)
    resid = rng.standard_normal((4, 9))
    rc = estimate_residual_covariance(resid, pve=0.95)
    delta = sandwich_covariance(des, rc)

    class _Doubled:
        T_stack = np.vstack([des.T_stack, des.T_stack])
        blocks = np.concatenate([des.blocks, des.blocks], axis=0)

    delta2 = sandwich_covariance(_Doubled(), rc)
    np.testing.assert_allclose(delta2, 0.5 * delta, atol=1e-8)


def test_rank_one_process():
    rng = np.random.default_rng(1)
    m = 60
    phi = np.sin(np.linspace(0, np.pi, m))
    phi /= np.linalg.norm(phi)
    xi = rng.normal(0.0, 2.0, size=1500)
    resid = xi[:, None] * phi[None, :]
    rc = estimate_residual_covariance(resid)
    assert rc.n_components == 1
    assert rc.eigenvalues[0] == pytest.approx(4.0, rel=0.15)
    assert rc.noise_variance == pytest.approx(0.0, abs=1e-4)
    # eigenvector defined up to sign
    align = abs(float(rc.eigenvectors[:, 0] @ phi))
    assert align == pytest.approx(1.0, abs=1e-6)


def test_eigenvalues_sorted_and_positive():
    rng = np.random.default_rng(2)
    resid = rng.standard_normal((50, 30))
    rc = estimate_residual_covariance(resid, pve=0.9)
    assert np.all(np.diff(rc.eigenvalues) <= 1e-12)
    assert np.all(rc.eigenvalues > 0)
    assert rc.matrix.shape == (30, 30)


def test_pve_monotone_in_components():
    rng = np.random.default_rng(3)
    resid = rng.standard_normal((80, 25)) @ np.diag(np.linspace(2, 0.1, 25))
    k_low = estimate_residual_covariance(resid, pve=0.5).n_components
    k_high = estimate_residual_covariance(resid, pve=0.999).n_components
    assert k_low <= k_high


def test_reconstruction_close_to_sample_covariance():
    # a smooth two-component process plus nugget: the truncated rebuild
    # keeps the structure, losing only sampling noise
    rng = np.random.default_rng(4)
    m = 40
    g = np.linspace(0, 1, m)
    phis = np.vstack([np.sin(np.pi * g), np.cos(np.pi * g)])
    scores = rng.normal(size=(800, 2)) * np.array([2.0, 1.0])
    resid = scores @ phis + 0.3 * rng.standard_normal((800, m))
    rc = estimate_residual_covariance(resid, pve=0.99)
    C = resid.T @ resid / resid.shape[0]
    gap = np.linalg.norm(rc.matrix - C) / np.linalg.norm(C)
    assert gap < 0.05


def test_mixture_noise_variance_recovered():
    rng = np.random.default_rng(14)
    m = 100
    g = np.linspace(0, 1, m)
    phis = np.vstack([np.sin(np.pi * g), np.cos(np.pi * g)]) * np.sqrt(2)
    scores = rng.normal(size=(2000, 2)) * np.array([1.5, 0.8])
    resid = scores @ phis + 0.5 * rng.standard_normal((2000, m))
    rc = estimate_residual_covariance(resid)
    assert rc.n_components == 2
    assert rc.noise_variance == pytest.approx(0.25, rel=0.10)


def _small_design(rng, n, m):
    grid = default_grid(m)
    z = rng.uniform(0, 1, size=(n, 1))
    qx = np.sort(rng.normal(10, 2, size=(n, m)), axis=1)
    qy = np.sort(rng.normal(size=(n, m)), axis=1)
    data = Dataset.from_raw(grid, qy, covariates=z, predictor=qx,
                            covariate_scales=((0.0, 1.0),))
    return build_design(data, 1)


def test_sandwich_matches_naive_full_stack():
    # blockwise assembly against the literal (T'T)^-1 T' Sigma T (T'T)^-1
    # with Sigma = diag(Sigma_m, ..., Sigma_m)
    rng = np.random.default_rng(5)
    for n, m in ((3, 6), (5, 10), (4, 8)):
        des = _small_design(rng, n, m)
        resid = rng.standard_normal((n, m))
        rc = estimate_residual_covariance(resid, pve=0.95)
        delta = sandwich_covariance(des, rc)
        T = des.T_stack
        Sigma = np.kron(np.eye(n), rc.matrix)
        G = np.linalg.inv(T.T @ T)
        naive = G @ T.T @ Sigma @ T @ G
        np.testing.assert_allclose(delta, naive, atol=1e-9)


def test_sandwich_psd():
    rng = np.random.default_rng(6)
    des = _small_design(rng, 6, 12)
    resid = rng.standard_normal((6, 12))
    rc = estimate_residual_covariance(resid, pve=0.99)
    delta = sandwich_covariance(des, rc)
    np.testing.assert_allclose(delta, delta.T, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(delta)) > -1e-10


def test_sandwich_reduces_to_ols_under_white_noise():
    # Sigma_m = sigma^2 I collapses the sandwich to sigma^2 (T'T)^-1
    rng = np.random.default_rng(7)
    des = _small_design(rng, 5, 9)
    sigma2 = 0.3
    delta = sandwich_covariance(des, sigma2 * np.eye(9))
    T = des.T_stack
    np.testing.assert_allclose(delta, sigma2 * np.linalg.inv(T.T @ T),
                               atol=1e-10)
