"""Dataset container and stacked regression system assembly.

A dataset holds outcome quantile functions on a shared grid, scalar
covariates scaled to [0,1], and optionally one distributional predictor
whose quantile values are scaled to [0,1]. The design stacks per-subject
blocks T_i = [B_0 | W_i1 ... W_iq | S_i] subject-major, where B_0 holds the
Bernstein basis on the grid, W_ij = z_ij * B_0, and S_i evaluates the
constant-free basis at the subject's predictor quantile values.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .bernstein import CoefficientLayout, bernstein_eval
from .quantiles import MONOTONE_TOL, check_grid, rescale_to_unit

__all__ = ["Dataset", "DesignSystem", "build_design", "predict_quantile"]

SCALE_TOL = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Aligned distributional regression data on one probability grid.

    Scalar covariates and predictor quantile values are stored on the unit
    scale; the affine maps used are retained so fitted models can accept
    and report raw-scale inputs.
    """

    grid: np.ndarray
    outcome: np.ndarray
    covariates: np.ndarray
    covariate_scales: tuple
    predictor: np.ndarray = None
    predictor_scale: tuple = None

    @property
    def n(self):
        return self.outcome.shape[0]

    @property
    def m(self):
        return self.grid.size

    @property
    def q(self):
        return self.covariates.shape[1]

    @property
    def has_predictor(self):
        return self.predictor is not None

    @classmethod
    def from_raw(cls, grid, outcome, covariates=None, predictor=None,
                 covariate_scales=None, predictor_scale=None):
        """Build a validated dataset, scaling raw inputs onto [0,1].

        Scale ranges default to the per-column (min, max) of the raw
        covariates and the global (min, max) of the predictor values; pass
        explicit ranges (for example (0, 1) for covariates already on the
        unit scale) to keep coefficients in the raw units.
        """
        p = check_grid(grid)
        y = np.atleast_2d(np.asarray(outcome, dtype=float))
        if y.shape[1] != p.size:
            raise ValueError("outcome columns must match the grid length")
        n = y.shape[0]
        if covariates is None:
            z = np.zeros((n, 0))
            scales = ()
        else:
            z = np.atleast_2d(np.asarray(covariates, dtype=float))
            if z.shape[0] != n:
                raise ValueError("covariate rows must match the outcome rows")
            if covariate_scales is None:
                scales = []
                for j in range(z.shape[1]):
                    lo, hi = float(z[:, j].min()), float(z[:, j].max())
                    if hi <= lo:
                        raise ValueError(f"constant covariate in column {j}")
                    scales.append((lo, hi))
                scales = tuple(scales)
            else:
                scales = tuple((float(lo), float(hi)) for lo, hi in covariate_scales)
                if len(scales) != z.shape[1]:
                    raise ValueError("one scale range per covariate required")
            z = np.column_stack(
                [rescale_to_unit(z[:, j], *scales[j]) for j in range(z.shape[1])]
            ) if z.shape[1] else z

        x = None
        xscale = None
        if predictor is not None:
            x = np.atleast_2d(np.asarray(predictor, dtype=float))
            if x.shape != y.shape:
                raise ValueError("predictor must have the same shape as the outcome")
            if predictor_scale is None:
                lo, hi = float(x.min()), float(x.max())
                if hi <= lo:
                    raise ValueError("degenerate predictor range")
                xscale = (lo, hi)
            else:
                xscale = (float(predictor_scale[0]), float(predictor_scale[1]))
            x = rescale_to_unit(x, *xscale)

        ds = cls(grid=p, outcome=y, covariates=z, covariate_scales=scales,
                 predictor=x, predictor_scale=xscale)
        ds.validate()
        return ds

    def validate(self):
        if np.any(np.diff(self.outcome, axis=1) < -MONOTONE_TOL):
            raise ValueError("outcome quantile functions must be non-decreasing")
        if self.q and (self.covariates.min() < -SCALE_TOL
                       or self.covariates.max() > 1.0 + SCALE_TOL):
            raise ValueError("scalar covariates must be scaled to [0, 1]")
        if self.predictor is not None:
            if np.any(np.diff(self.predictor, axis=1) < -MONOTONE_TOL):
                raise ValueError("predictor quantile functions must be non-decreasing")
            if self.predictor.min() < -SCALE_TOL or self.predictor.max() > 1.0 + SCALE_TOL:
                raise ValueError("predictor quantile values must be scaled to [0, 1]")

    def subset(self, indices):
        """Dataset restricted to the given subject indices (scales kept)."""
        idx = np.asarray(indices)
        return replace(
            self,
            outcome=self.outcome[idx],
            covariates=self.covariates[idx],
            predictor=None if self.predictor is None else self.predictor[idx],
        )

    def drop_covariate(self, j):
        """Dataset without scalar covariate j (0-based)."""
        if not 0 <= j < self.q:
            raise ValueError("covariate index out of range")
        keep = [k for k in range(self.q) if k != j]
        return replace(
            self,
            covariates=self.covariates[:, keep],
            covariate_scales=tuple(self.covariate_scales[k] for k in keep),
        )

    def drop_predictor(self):
        """Dataset without the distributional predictor."""
        if self.predictor is None:
            raise ValueError("dataset has no distributional predictor")
        return replace(self, predictor=None, predictor_scale=None)


@dataclass(frozen=True)
class DesignSystem:
    """Stacked design T (nm x K_n) and response for the regression."""

    T_stack: np.ndarray
    response: np.ndarray
    layout: CoefficientLayout
    grid: np.ndarray
    n: int
    m: int
    basis_grid: np.ndarray

    def subject_block(self, i):
        """Design rows of subject i, shape (m, K_n)."""
        return self.T_stack[i * self.m:(i + 1) * self.m]

    @property
    def blocks(self):
        """All subject blocks as one (n, m, K_n) view."""
        return self.T_stack.reshape(self.n, self.m, -1)


def build_design(data, order):
    """Assemble the stacked regression system for a basis order.

    Parameters
    ----------
    data : Dataset
    order : int
        Shared Bernstein order N for all coefficient functions and h.

    Returns
    -------
    DesignSystem
    """
    data.validate()
    layout = CoefficientLayout(q=data.q, order=int(order),
                               has_distributional=data.has_predictor)
    n, m = data.n, data.m
    if m < layout.dim:
        warnings.warn(
            "grid length below coefficient dimension; unconstrained normal "
            "equations will be rank-deficient", stacklevel=2)
    B0 = bernstein_eval(data.grid, order)
    T = np.zeros((n * m, layout.dim))
    tiled = np.tile(B0, (n, 1))
    T[:, layout.beta_slice(0)] = tiled
    for j in range(data.q):
        T[:, layout.beta_slice(j + 1)] = np.repeat(data.covariates[:, j], m)[:, None] * tiled
    if data.has_predictor:
        T[:, layout.theta_slice] = bernstein_eval(
            data.predictor.reshape(-1), order, include_constant=False)
    return DesignSystem(T_stack=T, response=data.outcome.reshape(-1).copy(),
                        layout=layout, grid=data.grid, n=n, m=m, basis_grid=B0)


def predict_quantile(psi, layout, grid, z=None, qx=None, constraints=None):
    """Predicted outcome quantile function for one covariate configuration.

    Parameters
    ----------
    psi : ndarray, shape (K_n,)
        Stacked coefficient vector.
    layout : CoefficientLayout
    grid : ndarray
        Probability grid for evaluation.
    z : array-like, shape (q,), optional
        Scalar covariates on the unit scale.
    qx : ndarray, shape (m,), optional
        Predictor quantile function on the unit scale, required when the
        layout has a distributional predictor.
    constraints : ConstraintSystem, optional
        When given, psi is checked for feasibility; an infeasible psi
        triggers a warning and a monotonicity re-check of the output.

    Returns
    -------
    ndarray, shape (m,)
    """
    psi = np.asarray(psi, dtype=float)
    if psi.size != layout.dim:
        raise ValueError("coefficient vector does not match the layout")
    p = check_grid(grid)
    feasible = True
    if constraints is not None and constraints.matrix.size:
        feasible = bool(np.min(constraints.matrix @ psi) >= -1e-8)
        if not feasible:
            warnings.warn("coefficient vector violates the monotonicity cone",
                          stacklevel=2)
    B0 = bernstein_eval(p, layout.order)
    out = B0 @ psi[layout.beta_slice(0)]
    if layout.q:
        if z is None:
            raise ValueError("scalar covariates required by the layout")
        z = np.asarray(z, dtype=float).reshape(-1)
        if z.size != layout.q:
            raise ValueError("wrong number of scalar covariates")
        if np.any(z < -SCALE_TOL) or np.any(z > 1.0 + SCALE_TOL):
            raise ValueError("scalar covariates must lie in [0, 1]")
        for j in range(layout.q):
            out = out + z[j] * (B0 @ psi[layout.beta_slice(j + 1)])
    if layout.has_distributional:
        if qx is None:
            raise ValueError("predictor quantile function required by the layout")
        qx = np.asarray(qx, dtype=float)
        if qx.shape != p.shape:
            raise ValueError("predictor values must match the grid")
        S = bernstein_eval(qx, layout.order, include_constant=False)
        out = out + S @ psi[layout.theta_slice]
    if not feasible and np.any(np.diff(out) < -1e-9):
        warnings.warn("predicted quantile function is not monotone",
                      stacklevel=2)
    return out
