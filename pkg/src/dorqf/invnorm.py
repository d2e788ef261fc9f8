"""Inverse normal CDF via rational approximation.

Standard normal quantiles computed with Acklam's piecewise rational
approximation followed by one Halley refinement step, which brings the
absolute error to well below 1e-9 on (0, 1).
"""

import numpy as np
from scipy.special import erfc

__all__ = ["norm_quantile"]

# rational approximation coefficients, central region |p - 0.5| <= 0.47575
_A = (
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
)
_B = (
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
)
# tail region coefficients
_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
)
_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
)

_P_LOW = 0.02425


def _tail(q):
    # q = sqrt(-2 log p) for the lower tail
    num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
    den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
    return num / den


def norm_quantile(p):
    """Standard normal quantile function Phi^{-1}(p).

    Parameters
    ----------
    p : array-like
        Probabilities strictly inside (0, 1).

    Returns
    -------
    ndarray or float
        Normal quantiles, absolute error below 1e-9.
    """
    parr = np.asarray(p, dtype=float)
    scalar = parr.ndim == 0
    parr = np.atleast_1d(parr)
    if np.any(~np.isfinite(parr)) or np.any(parr <= 0.0) or np.any(parr >= 1.0):
        raise ValueError("probabilities must lie strictly inside (0, 1)")

    x = np.empty_like(parr)
    lower = parr < _P_LOW
    upper = parr > 1.0 - _P_LOW
    central = ~(lower | upper)

    if np.any(central):
        q = parr[central] - 0.5
        r = q * q
        num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[central] = q * num / den
    if np.any(lower):
        q = np.sqrt(-2.0 * np.log(parr[lower]))
        x[lower] = _tail(q)
    if np.any(upper):
        q = np.sqrt(-2.0 * np.log(1.0 - parr[upper]))
        x[upper] = -_tail(q)

    # one Halley step against the forward CDF
    e = 0.5 * erfc(-x / np.sqrt(2.0)) - parr
    u = e * np.sqrt(2.0 * np.pi) * np.exp(x * x / 2.0)
    x = x - u / (1.0 + x * u / 2.0)

    return float(x[0]) if scalar else x
