"""Joint confidence bands and global effect tests.

Two inferential routes: a projection-based joint band for a fitted
coefficient function (with the derived sup-statistic p-value), and a
residual-bootstrap F-type test comparing nested constrained fits.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .bernstein import bernstein_eval, build_constraint_system
from .design import build_design
from .model import fit_dorqf
from .qp import ConeProjector, _chol_from_design, solve_qp

__all__ = [
    "ConfidenceBand",
    "GlobalTestResult",
    "joint_band",
    "band_global_pvalue",
    "bootstrap_effect_test",
]

SD_FLOOR = 1e-12


@dataclass(frozen=True)
class ConfidenceBand:
    """Joint confidence band for a coefficient function."""

    target: str
    grid: np.ndarray
    center: np.ndarray
    pointwise_sd: np.ndarray
    critical: float
    lower: np.ndarray
    upper: np.ndarray
    alpha: float
    draws: int
    seed: int
    sup_stats: np.ndarray


@dataclass(frozen=True)
class GlobalTestResult:
    """Outcome of a global zero-effect test."""

    statistic: float
    p_value: float
    draws: int
    method: str
    null_spec: str
    seed: int


def _target_loading(fit, target, qx_raw=None):
    """Evaluation abscissae and loading matrix C with curve = C psi."""
    layout = fit.layout
    m = fit.grid.size
    C = np.zeros((m, layout.dim))
    if target.startswith("beta"):
        j = int(target[4:])
        if not 0 <= j <= layout.q:
            raise ValueError(f"no coefficient {target} in a model with q={layout.q}")
        C[:, layout.beta_slice(j)] = bernstein_eval(fit.grid, layout.order)
        return fit.grid, C
    if target == "h":
        if not layout.has_distributional:
            raise ValueError("model has no distributional predictor")
        xg = np.linspace(0.0, 1.0, m)
        C[:, layout.theta_slice] = bernstein_eval(xg, layout.order,
                                                  include_constant=False)
        return xg, C
    if target == "gamma":
        if not layout.has_distributional:
            raise ValueError("model has no distributional predictor")
        if qx_raw is None:
            raise ValueError("gamma band needs a reference predictor curve")
        qx = fit._scale_predictor(np.asarray(qx_raw, dtype=float))
        if qx.shape != fit.grid.shape:
            raise ValueError("reference curve must live on the fit grid")
        C[:, layout.beta_slice(0)] = bernstein_eval(fit.grid, layout.order)
        C[:, layout.theta_slice] = bernstein_eval(qx, layout.order,
                                                  include_constant=False)
        return fit.grid, C
    raise ValueError(f"unknown band target {target!r}")


def _covariance_factor(delta):
    sym = 0.5 * (delta + delta.T)
    lam, vec = np.linalg.eigh(sym)
    if lam[-1] > 0 and lam[0] < -1e-8 * max(1.0, lam[-1]):
        raise ValueError("coefficient covariance is not positive semidefinite")
    lam = np.clip(lam, 0.0, None)
    return vec * np.sqrt(lam)


def _projected_curves(fit, target, draws, seed, qx_raw=None):
    """Shared core of the band construction.

    Draws Gaussian samples around the unconstrained estimate, projects
    them onto the constraint cone under Omega, and evaluates the target
    curve for each projected sample and for the constrained estimate.
    """
    if draws < 100:
        raise ValueError("need at least 100 draws")
    if fit.delta_n is None:
        raise ValueError("fit carries no coefficient covariance")
    grid, C = _target_loading(fit, target, qx_raw)
    factor = _covariance_factor(fit.delta_n)
    rng = np.random.default_rng(seed)
    Z = fit.psi_ur + rng.standard_normal((draws, factor.shape[1])) @ factor.T
    projector = ConeProjector(fit.omega, fit.constraints)
    projected, _ = projector.project_many(Z)
    curves = projected @ C.T
    center = C @ fit.psi_r
    sd = np.std(curves, axis=0, ddof=1)
    if np.any(sd < SD_FLOOR):
        warnings.warn("zero pointwise spread; flooring at 1e-12", stacklevel=3)
        sd = np.maximum(sd, SD_FLOOR)
    sup_stats = np.max(np.abs(curves - center) / sd, axis=1)
    return grid, center, sd, sup_stats


def _empirical_quantile_index(level, draws):
    # index ceil(level*draws) - 1 with protection against float slop
    k = int(np.ceil(level * draws - 1e-9)) - 1
    return min(max(k, 0), draws - 1)


def joint_band(fit, target, alpha=0.05, draws=1000, seed=0, qx_raw=None):
    """Projection-based joint confidence band for a coefficient function.

    Parameters
    ----------
    fit : DorqfFit
        Must carry the unconstrained estimate and its covariance.
    target : str
        "beta0".."beta{q}", "h", or "gamma" (the additive effect at a
        reference predictor curve, supplied via ``qx_raw``).
    alpha : float
        Joint miscoverage level.
    draws : int
        Number of Gaussian samples (at least 100).
    seed : int

    Returns
    -------
    ConfidenceBand
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    grid, center, sd, sup = _projected_curves(fit, target, draws, seed, qx_raw)
    u_sorted = np.sort(sup)
    crit = float(u_sorted[_empirical_quantile_index(1.0 - alpha, draws)])
    half = crit * sd
    return ConfidenceBand(
        target=target, grid=grid, center=center, pointwise_sd=sd,
        critical=crit, lower=center - half, upper=center + half,
        alpha=alpha, draws=draws, seed=seed, sup_stats=sup,
    )


def band_global_pvalue(fit, target, draws=1000, seed=0, qx_raw=None, band=None):
    """P-value that the target coefficient function is identically zero.

    Smallest level at which the joint band excludes zero somewhere; equals
    the fraction of sup-statistics at or above the observed standardized
    sup-distance of the estimate from zero. Pass a ``band`` built with the
    same target to reuse its projected samples.
    """
    if band is not None and band.target == target:
        center, sd, sup = band.center, band.pointwise_sd, band.sup_stats
    else:
        _, center, sd, sup = _projected_curves(fit, target, draws, seed, qx_raw)
    t_obs = float(np.max(np.abs(center) / sd))
    p = float(np.mean(sup >= t_obs))
    return GlobalTestResult(
        statistic=t_obs, p_value=p, draws=sup.size, method="band-sup",
        null_spec=f"{target} = 0", seed=band.seed if band is not None else seed,
    )


def _constrained_rss(T_stack, H, chol, D, y_stack):
    sol = solve_qp(H, -(T_stack.T @ y_stack), D, chol=chol)
    resid = y_stack - T_stack @ sol.x
    return float(resid @ resid), sol


def bootstrap_effect_test(data, order, drop, draws=500, seed=0,
                          theta_first_nonneg=True):
    """Residual-bootstrap F-type test for a global distributional effect.

    Parameters
    ----------
    data : Dataset
    order : int
        Bernstein order for both nested fits.
    drop : int or str
        Which term the null removes: a scalar covariate index (0-based)
        or "predictor".
    draws : int
        Bootstrap replicates (at least 199).
    seed : int

    Returns
    -------
    GlobalTestResult with the observed statistic (RSS_null - RSS_full) /
    RSS_full and the bootstrap p-value.

    Residual curves from the full constrained fit are resampled whole and
    added to the null-fit means, so within-curve dependence is preserved;
    both designs stay fixed across replicates.
    """
    if draws < 199:
        raise ValueError("need at least 199 bootstrap draws")
    if drop == "predictor":
        if not data.has_predictor:
            raise ValueError("no distributional predictor to drop")
        data_null = data.drop_predictor()
        null_spec = "h = 0"
    else:
        j = int(drop)
        if not 0 <= j < data.q:
            raise ValueError(f"no scalar covariate {j} in a model with q={data.q}")
        data_null = data.drop_covariate(j)
        null_spec = f"beta{j + 1} = 0"

    fit_full = fit_dorqf(data, order, with_covariance=False,
                         theta_first_nonneg=theta_first_nonneg)
    fit_null = fit_dorqf(data_null, order, with_covariance=False,
                         theta_first_nonneg=theta_first_nonneg)
    rss_full = fit_full.rss
    rss_null = fit_null.rss
    if rss_full <= 0.0:
        raise ValueError("degenerate full fit: zero residual sum of squares")
    t_obs = (rss_null - rss_full) / rss_full

    resid = fit_full.residuals
    null_mean = data_null.outcome - fit_null.residuals

    design_f = build_design(data, order)
    design_n = build_design(data_null, order)
    con_f = build_constraint_system(design_f.layout,
                                    theta_first_nonneg=theta_first_nonneg)
    con_n = build_constraint_system(design_n.layout,
                                    theta_first_nonneg=theta_first_nonneg)
    H_f, L_f = _chol_from_design(design_f.T_stack, 0.0)
    H_n, L_n = _chol_from_design(design_n.T_stack, 0.0)

    rng = np.random.default_rng(seed)
    index_sets = rng.integers(0, data.n, size=(draws, data.n))
    stats = np.empty(draws)
    for b in range(draws):
        y_star = (null_mean + resid[index_sets[b]]).reshape(-1)
        rss_f, _ = _constrained_rss(design_f.T_stack, H_f, L_f,
                                    con_f.matrix, y_star)
        rss_n, _ = _constrained_rss(design_n.T_stack, H_n, L_n,
                                    con_n.matrix, y_star)
        stats[b] = (rss_n - rss_f) / rss_f
    p = float(np.mean(stats >= t_obs))
    return GlobalTestResult(
        statistic=float(t_obs), p_value=p, draws=draws,
        method="bootstrap-f", null_spec=null_spec, seed=seed,
    )
