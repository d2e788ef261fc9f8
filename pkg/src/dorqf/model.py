"""Model fitting pipeline and baselines.

Ties the pieces together: constrained and unconstrained least squares on
the stacked design, residual and coefficient covariances, order selection
by subject-level cross-validation, the pooled isotonic (PAVA) comparator
for the distribution-on-distribution submodel, and leave-one-subject-out
goodness of fit.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .bernstein import bernstein_eval, build_constraint_system
from .covariance import ResidualCovariance, estimate_residual_covariance, sandwich_covariance
from .design import build_design, predict_quantile
from .qp import QpError, solve_constrained_ls, solve_qp, solve_unconstrained_ls
from .quantiles import trapezoid_weights

__all__ = [
    "DorqfFit",
    "fit_dorqf",
    "CvReport",
    "cross_validate",
    "pava",
    "PavaFit",
    "fit_pava_baseline",
    "loocv_r_squared",
]


@dataclass
class DorqfFit:
    """Fitted shape-constrained distributional regression model."""

    layout: object
    constraints: object
    grid: np.ndarray
    psi_r: np.ndarray
    psi_ur: np.ndarray
    active_set: tuple
    multipliers: np.ndarray
    rss: float
    rss_unconstrained: float
    residuals: np.ndarray
    residuals_unconstrained: np.ndarray
    omega: np.ndarray
    covariate_scales: tuple
    predictor_scale: tuple
    residual_cov: ResidualCovariance = None
    delta_n: np.ndarray = None
    kkt: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def order(self):
        return self.layout.order

    @property
    def q(self):
        return self.layout.q

    def beta_curve(self, j, grid=None):
        """Fitted coefficient function beta_j on the grid."""
        p = self.grid if grid is None else np.asarray(grid, dtype=float)
        B0 = bernstein_eval(p, self.layout.order)
        return B0 @ self.psi_r[self.layout.beta_slice(j)]

    def h_curve(self, x):
        """Fitted transport map h at points x on the unit scale."""
        S = bernstein_eval(np.asarray(x, dtype=float), self.layout.order,
                           include_constant=False)
        return S @ self.psi_r[self.layout.theta_slice]

    def additive_effect(self, qx_raw):
        """gamma(p) = beta_0(p) + h(q_x(p)) for a raw-scale predictor curve."""
        qx = self._scale_predictor(np.asarray(qx_raw, dtype=float))
        return self.beta_curve(0) + self.h_curve(qx)

    def _scale_predictor(self, qx_raw):
        lo, hi = self.predictor_scale
        return np.clip((qx_raw - lo) / (hi - lo), 0.0, 1.0)

    def _scale_covariates(self, z_raw):
        if not self.q:
            return np.zeros(0)
        z = np.asarray(z_raw, dtype=float).reshape(-1)
        out = np.empty_like(z)
        for j, (lo, hi) in enumerate(self.covariate_scales):
            out[j] = np.clip((z[j] - lo) / (hi - lo), 0.0, 1.0)
        return out

    def predict(self, z_raw=None, qx_raw=None):
        """Predicted outcome quantile function for raw-scale inputs.

        Stored affine maps are applied; inputs outside the training range
        are clipped to it (constant extrapolation of the fitted effects).
        """
        z = self._scale_covariates(z_raw) if self.q else None
        qx = None
        if self.layout.has_distributional:
            if qx_raw is None:
                raise ValueError("predictor quantile function required")
            qx = self._scale_predictor(np.asarray(qx_raw, dtype=float))
        return predict_quantile(self.psi_r, self.layout, self.grid, z=z, qx=qx)

    def predict_batch(self, Z_raw=None, QX_raw=None):
        """Predictions for several subjects; rows align with the inputs."""
        if self.q:
            Z = np.atleast_2d(np.asarray(Z_raw, dtype=float))
            n = Z.shape[0]
        else:
            QX = np.atleast_2d(np.asarray(QX_raw, dtype=float))
            n = QX.shape[0]
        out = np.empty((n, self.grid.size))
        for i in range(n):
            out[i] = self.predict(
                None if not self.q else Z[i],
                None if QX_raw is None else np.atleast_2d(QX_raw)[i],
            )
        return out

    def fitted_values(self, data):
        """Training-set fitted quantile functions for the given dataset."""
        design = build_design(data, self.layout.order)
        return (design.T_stack @ self.psi_r).reshape(data.n, data.m)


def fit_dorqf(data, order, ridge=0.0, pve=0.99, theta_first_nonneg=True,
              with_covariance=True, provenance=None):
    """Fit the shape-constrained model at a fixed basis order.

    Parameters
    ----------
    data : Dataset
    order : int
        Bernstein order N shared by all coefficient functions.
    ridge : float
        Optional ridge added to the normal equations (default 0).
    pve : float
        Variance threshold for the residual FPCA.
    theta_first_nonneg : bool
        Keep the first-coefficient row of the transport-map constraints.
    with_covariance : bool
        Compute the residual and coefficient covariances (skipped inside
        cross-validation loops where only point fits are needed).

    Returns
    -------
    DorqfFit
    """
    design = build_design(data, order)
    constraints = build_constraint_system(design.layout,
                                          theta_first_nonneg=theta_first_nonneg)
    psi_ur = solve_unconstrained_ls(design, ridge=ridge)
    sol = solve_constrained_ls(design, constraints, ridge=ridge)
    fitted_r = (design.T_stack @ sol.x).reshape(data.n, data.m)
    fitted_ur = (design.T_stack @ psi_ur).reshape(data.n, data.m)
    resid_r = data.outcome - fitted_r
    resid_ur = data.outcome - fitted_ur
    omega = design.T_stack.T @ design.T_stack / data.n
    rescov = None
    delta = None
    if with_covariance:
        rescov = estimate_residual_covariance(resid_ur, pve=pve)
        delta = sandwich_covariance(design, rescov)
    return DorqfFit(
        layout=design.layout,
        constraints=constraints,
        grid=data.grid,
        psi_r=sol.x,
        psi_ur=psi_ur,
        active_set=sol.active_set,
        multipliers=sol.multipliers,
        rss=sol.objective,
        rss_unconstrained=float(np.sum(resid_ur**2)),
        residuals=resid_r,
        residuals_unconstrained=resid_ur,
        omega=omega,
        covariate_scales=data.covariate_scales,
        predictor_scale=data.predictor_scale,
        residual_cov=rescov,
        delta_n=delta,
        kkt=sol.kkt,
        provenance=provenance or {},
    )


@dataclass(frozen=True)
class CvReport:
    """Cross-validation summary over candidate basis orders."""

    orders: tuple
    cvsse: np.ndarray
    fold_components: np.ndarray
    folds: int
    seed: int
    selected_order: int
    failed_orders: tuple
    weighted: bool


def _canonical_order(data):
    # order subjects by their data so fold membership does not depend on
    # input ordering
    keys = [data.outcome]
    if data.q:
        keys.append(data.covariates)
    if data.has_predictor:
        keys.append(data.predictor)
    M = np.hstack(keys)
    return np.lexsort(tuple(M[:, k] for k in range(M.shape[1] - 1, -1, -1)))


def fold_assignments(data, folds, seed):
    """Subject-level fold ids, a function of the data and the seed only."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if data.n < folds:
        raise ValueError("fewer subjects than folds")
    canon = _canonical_order(data)
    rng = np.random.default_rng(seed)
    shuffled = canon[rng.permutation(data.n)]
    fold_id = np.empty(data.n, dtype=int)
    fold_id[shuffled] = np.arange(data.n) % folds
    return fold_id


def cross_validate(data, orders=tuple(range(1, 9)), folds=5, seed=0,
                   weighted=True, ridge=0.0, theta_first_nonneg=True):
    """Select the basis order by subject-level V-fold cross-validation.

    The cross-validated error for a candidate order is the summed held-out
    squared distance between observed and predicted outcome quantile
    functions (quadrature-weighted by default, plain stacked squared error
    otherwise). Ties break toward the smaller order.

    Returns
    -------
    CvReport
    """
    orders = tuple(int(N) for N in orders)
    fold_id = fold_assignments(data, folds, seed)
    w = trapezoid_weights(data.grid) if weighted else np.ones(data.m)
    cvsse = np.full(len(orders), np.inf)
    components = np.full((len(orders), folds), np.nan)
    failed = []
    for a, N in enumerate(orders):
        try:
            design = build_design(data, N)
            constraints = build_constraint_system(
                design.layout, theta_first_nonneg=theta_first_nonneg)
            blocks = design.blocks
            grams = np.einsum("imk,iml->ikl", blocks, blocks)
            loads = np.einsum("imk,im->ik", blocks, data.outcome)
            H_full = grams.sum(axis=0)
            g_full = loads.sum(axis=0)
            ridge_eye = ridge * np.eye(design.layout.dim) if ridge else 0.0
            total = np.zeros(folds)
            for v in range(folds):
                held = np.flatnonzero(fold_id == v)
                H_v = H_full - grams[held].sum(axis=0)
                g_v = g_full - loads[held].sum(axis=0)
                if ridge:
                    H_v = H_v + ridge_eye
                sol = solve_qp(H_v, -g_v, constraints.matrix)
                pred = blocks[held] @ sol.x
                err = data.outcome[held] - pred
                total[v] = float(np.sum(err**2 * w))
            components[a] = total
            cvsse[a] = total.sum()
        except (QpError, np.linalg.LinAlgError) as exc:
            failed.append(N)
            warnings.warn(f"cross-validation failed at order {N}: {exc}",
                          stacklevel=2)
    if not np.any(np.isfinite(cvsse)):
        raise RuntimeError("cross-validation failed for every candidate order")
    selected = orders[int(np.argmin(cvsse))]
    return CvReport(
        orders=orders, cvsse=cvsse, fold_components=components, folds=folds,
        seed=seed, selected_order=selected, failed_orders=tuple(failed),
        weighted=weighted,
    )


def pava(values, weights=None):
    """Least-squares non-decreasing fit by pool-adjacent-violators.

    Parameters
    ----------
    values : array-like, shape (n,)
    weights : array-like, shape (n,), optional
        Positive case weights, default 1.

    Returns
    -------
    ndarray, shape (n,)
        The isotonic fit: non-decreasing, block-wise constant at the
        weighted mean of each pooled block.
    """
    y = np.asarray(values, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("need a non-empty 1-d sequence")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != y.shape or np.any(w <= 0):
        raise ValueError("weights must be positive and match the values")
    means = []
    wts = []
    counts = []
    for yi, wi in zip(y, w):
        m, ww, c = float(yi), float(wi), 1
        while means and means[-1] > m:
            m = (ww * m + wts[-1] * means[-1]) / (ww + wts[-1])
            ww += wts[-1]
            c += counts[-1]
            means.pop(), wts.pop(), counts.pop()
        means.append(m), wts.append(ww), counts.append(c)
    return np.repeat(means, counts)


@dataclass(frozen=True)
class PavaFit:
    """Pooled monotone transport map from predictor to outcome quantiles."""

    x: np.ndarray
    fitted: np.ndarray
    knots_x: np.ndarray
    knots_y: np.ndarray

    def predict(self, xnew):
        """Linear interpolation between knots, constant outside the range."""
        return np.interp(np.asarray(xnew, dtype=float), self.knots_x, self.knots_y)


def fit_pava_baseline(data):
    """Pooled isotonic regression of outcome on predictor quantile values.

    All (Q_iX(p_l), Q_iY(p_l)) pairs across subjects and grid points are
    pooled on the raw predictor scale, sorted by predictor value (stable),
    and fit by PAVA with equal weights. There is no intercept: the fit is
    the monotone map itself.
    """
    if not data.has_predictor:
        raise ValueError("distributional predictor required")
    if data.n == 0:
        raise ValueError("no data")
    lo, hi = data.predictor_scale
    x = (lo + data.predictor * (hi - lo)).reshape(-1)
    y = data.outcome.reshape(-1)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    fit = pava(y[order])
    # collapse duplicate x so interpolation is well defined
    uniq, start = np.unique(xs, return_index=True)
    knots_y = np.add.reduceat(fit, start) / np.diff(np.append(start, fit.size))
    return PavaFit(x=xs, fitted=fit, knots_x=uniq, knots_y=knots_y)


def loocv_r_squared(data, order, ridge=0.0, theta_first_nonneg=True):
    """Leave-one-subject-out R squared of the constrained fit.

    1 - sum_i int (Q_i - Qhat_i^{-i})^2 dp / sum_i int (Q_i - Qbar)^2 dp,
    with Qbar the scalar grand mean of the integrated outcome curves.
    """
    if data.n < 3:
        raise ValueError("need at least 3 subjects")
    design = build_design(data, order)
    constraints = build_constraint_system(
        design.layout, theta_first_nonneg=theta_first_nonneg)
    blocks = design.blocks
    grams = np.einsum("imk,iml->ikl", blocks, blocks)
    loads = np.einsum("imk,im->ik", blocks, data.outcome)
    H_full = grams.sum(axis=0)
    g_full = loads.sum(axis=0)
    w = trapezoid_weights(data.grid)
    qbar = float(np.mean(data.outcome @ w))
    ridge_eye = ridge * np.eye(design.layout.dim) if ridge else 0.0
    num = 0.0
    for i in range(data.n):
        H_i = H_full - grams[i]
        if ridge:
            H_i = H_i + ridge_eye
        sol = solve_qp(H_i, -(g_full - loads[i]), constraints.matrix)
        err = data.outcome[i] - blocks[i] @ sol.x
        num += float(np.sum(w * err**2))
    denom = float(np.sum(w * (data.outcome - qbar) ** 2))
    if denom == 0.0:
        raise ValueError("degenerate outcome: zero variance around the grand mean")
    return 1.0 - num / denom
