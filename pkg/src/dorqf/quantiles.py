"""Quantile functions on probability grids.

Distributional data are represented as dense vectors of quantile values on a
shared probability grid. This module estimates quantile functions from raw
samples by linear interpolation of order statistics, computes 2-Wasserstein
distances between them, and handles the affine [0,1] rescaling applied to
distributional predictors.
"""

import numpy as np

__all__ = [
    "default_grid",
    "check_grid",
    "trapezoid_weights",
    "empirical_quantile",
    "empirical_quantile_matrix",
    "wasserstein_distance",
    "rescale_to_unit",
    "inverse_rescale",
    "is_nondecreasing",
]

MONOTONE_TOL = 1e-10


def default_grid(m=100, lo=0.005, hi=0.995):
    """Equispaced probability grid of length m on [lo, hi]."""
    if m < 2:
        raise ValueError("grid needs at least 2 points")
    return np.linspace(lo, hi, m)


def check_grid(grid):
    """Validate a probability grid and return it as a float array.

    The grid must be strictly increasing with all points in the open
    interval (0, 1).
    """
    p = np.asarray(grid, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError("grid must be a 1-d array with at least 2 points")
    if not np.all(np.isfinite(p)):
        raise ValueError("grid contains non-finite values")
    if p[0] <= 0.0 or p[-1] >= 1.0:
        raise ValueError("grid points must lie strictly inside (0, 1)")
    if np.any(np.diff(p) <= 0):
        raise ValueError("grid must be strictly increasing")
    return p


def trapezoid_weights(grid):
    """Quadrature weights for integrals over p, normalized to unit mass.

    Trapezoid weights on [p_1, p_m] divided by the span (p_m - p_1), so that
    integrating a constant c returns c and the grid stands in for the full
    [0, 1] domain of the integrals it approximates.
    """
    p = check_grid(grid)
    d = np.diff(p)
    w = np.empty_like(p)
    w[0] = d[0] / 2.0
    w[-1] = d[-1] / 2.0
    w[1:-1] = (d[:-1] + d[1:]) / 2.0
    return w / (p[-1] - p[0])


def is_nondecreasing(values, tol=MONOTONE_TOL):
    """True when successive differences are all >= -tol."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return True
    return bool(np.all(np.diff(v, axis=-1) >= -tol))


def empirical_quantile(sample, grid):
    """Empirical quantile function of a raw sample on a probability grid.

    For p in [1/(L+1), L/(L+1)] returns the order-statistic interpolation

        (1 - w) * X_(j) + w * X_(j+1),  j = floor((L+1) p),  w = (L+1) p - j,

    where X_(1) <= ... <= X_(L) are the sorted observations. Outside that
    band the sample minimum / maximum is returned, which keeps the estimate
    defined on any grid and non-decreasing.

    Parameters
    ----------
    sample : array-like, shape (L,)
        Raw observations, L >= 2, finite.
    grid : array-like, shape (m,)
        Probability grid.

    Returns
    -------
    ndarray, shape (m,)
        Quantile values, non-decreasing along the grid.
    """
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("insufficient sample: need at least 2 observations")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    return empirical_quantile_matrix(x[None, :], grid)[0]


def empirical_quantile_matrix(samples, grid):
    """Empirical quantile functions for several equally sized samples.

    Vectorized version of :func:`empirical_quantile` for an (n, L) array of
    raw samples sharing one sample size; returns an (n, m) array of quantile
    values on the grid.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("insufficient sample: need at least 2 observations")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    p = check_grid(grid)
    L = x.shape[1]
    xs = np.sort(x, axis=1, kind="stable")

    t = (L + 1.0) * p
    j = np.floor(t).astype(np.intp)
    w = t - j
    # interior interpolation indices, clamped so j and j+1 stay in range
    jc = np.clip(j, 1, L - 1)
    wc = np.where(j >= L, 1.0, np.where(j < 1, 0.0, w))
    out = (1.0 - wc) * xs[:, jc - 1] + wc * xs[:, jc]
    return out


def wasserstein_distance(a, b, grid):
    """2-Wasserstein distance between quantile functions on a shared grid.

    Square root of the quadrature integral of (a(p) - b(p))^2, using the
    normalized trapezoid weights of :func:`trapezoid_weights`.
    """
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    p = check_grid(grid)
    if av.shape != p.shape or bv.shape != p.shape:
        raise ValueError("quantile functions and grid have mismatched shapes")
    w = trapezoid_weights(p)
    return float(np.sqrt(np.sum(w * (av - bv) ** 2)))


def rescale_to_unit(values, lo, hi):
    """Map values in [lo, hi] onto [0, 1] by (v - lo) / (hi - lo)."""
    if not (hi > lo):
        raise ValueError("rescale range requires hi > lo")
    v = np.asarray(values, dtype=float)
    if np.any(v < lo) or np.any(v > hi):
        raise ValueError("value outside declared range [lo, hi]")
    return (v - lo) / (hi - lo)


def inverse_rescale(values, lo, hi):
    """Undo :func:`rescale_to_unit`: map [0, 1] values back to [lo, hi]."""
    if not (hi > lo):
        raise ValueError("rescale range requires hi > lo")
    v = np.asarray(values, dtype=float)
    return lo + v * (hi - lo)
