"""Residual covariance estimation and the sandwich coefficient covariance.

The error process is modelled as a smooth component plus white noise. Its
m x m covariance is estimated from the unconstrained-fit residual rows by
eigendecomposition of the sample covariance: the leading eigenpairs (chosen
by percent of variance explained) form the smooth part and the mean
diagonal deficit estimates the noise variance. The coefficient covariance
of the unconstrained estimator is the sandwich
(T'T)^{-1} [sum_i T_i' Sigma T_i] (T'T)^{-1}, accumulated blockwise so the
nm x nm error covariance is never materialized.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ResidualCovariance",
    "estimate_residual_covariance",
    "sandwich_covariance",
]


@dataclass(frozen=True)
class ResidualCovariance:
    """FPCA decomposition of the residual-process covariance on the grid."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    noise_variance: float
    n_components: int
    pve: float
    matrix: np.ndarray

    @property
    def K(self):
        return self.n_components


def estimate_residual_covariance(residuals, pve=0.99):
    """Estimate the residual covariance by truncated eigendecomposition.

    Parameters
    ----------
    residuals : ndarray, shape (n, m)
        Residual curves from the unconstrained fit, one row per subject.
    pve : float in (0, 1]
        Percent-of-variance-explained threshold selecting the number of
        retained eigencomponents.

    Returns
    -------
    ResidualCovariance
        With ``matrix`` = sum_k lambda_k phi_k phi_k' + sigma^2 I.
    """
    E = np.asarray(residuals, dtype=float)
    if E.ndim != 2 or E.shape[0] < 2:
        raise ValueError("need residual curves from at least 2 subjects")
    if E.shape[1] < 2:
        raise ValueError("need residual curves on at least 2 grid points")
    if not 0.0 < pve <= 1.0:
        raise ValueError("pve must lie in (0, 1]")
    n, m = E.shape
    C = E.T @ E / n
    # the diagonal of C carries the noise nugget on top of the smooth
    # variance; rebuild it from the neighboring off-diagonal entries so the
    # eigendecomposition sees only the smooth component
    C_tilde = C.copy()
    d = np.empty(m)
    d[1:-1] = 0.5 * (np.diagonal(C, offset=1)[:-1] + np.diagonal(C, offset=1)[1:])
    d[0] = C[0, 1]
    d[-1] = C[-1, -2]
    np.fill_diagonal(C_tilde, d)
    evals, evecs = np.linalg.eigh(C_tilde)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    evals = np.clip(evals, 0.0, None)
    total = float(evals.sum())
    if total == 0.0:
        sigma2 = max(0.0, float(np.mean(np.diag(C))))
        return ResidualCovariance(
            eigenvalues=np.zeros(0), eigenvectors=np.zeros((m, 0)),
            noise_variance=sigma2, n_components=0, pve=pve,
            matrix=sigma2 * np.eye(m))
    ratio = np.cumsum(evals) / total
    K = int(np.argmax(ratio >= pve - 1e-12)) + 1
    lead_vals = evals[:K].copy()
    lead_vecs = evecs[:, :K].copy()
    smooth = (lead_vecs * lead_vals) @ lead_vecs.T
    sigma2 = max(0.0, float(np.mean(np.diag(C) - np.diag(smooth))))
    sigma = smooth + sigma2 * np.eye(m)
    return ResidualCovariance(
        eigenvalues=lead_vals, eigenvectors=lead_vecs,
        noise_variance=sigma2, n_components=K, pve=pve, matrix=sigma)


def sandwich_covariance(design, resid_cov):
    """Covariance of the unconstrained coefficient estimator.

    Delta_n = (T'T)^{-1} [sum_i T_i' Sigma_m T_i] (T'T)^{-1}, with the
    middle sum accumulated over per-subject blocks.

    Parameters
    ----------
    design : DesignSystem
    resid_cov : ResidualCovariance or ndarray
        Residual covariance on the grid (its ``matrix`` when an estimate).

    Returns
    -------
    ndarray, shape (K_n, K_n)
        Symmetric positive semidefinite coefficient covariance.
    """
    sigma = resid_cov.matrix if isinstance(resid_cov, ResidualCovariance) else np.asarray(resid_cov, dtype=float)
    blocks = design.blocks
    TtT = design.T_stack.T @ design.T_stack
    # sum_i T_i' Sigma T_i without forming the block-diagonal stack
    ST = np.tensordot(blocks, sigma, axes=([1], [0]))  # (n, K, m)
    middle = np.einsum("ikm,imj->kj", ST, blocks)
    try:
        inv_mid = np.linalg.solve(TtT, middle)
        delta = np.linalg.solve(TtT, inv_mid.T).T
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular T'T in sandwich covariance") from exc
    delta = 0.5 * (delta + delta.T)
    return delta
