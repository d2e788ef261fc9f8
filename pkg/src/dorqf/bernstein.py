"""Bernstein polynomial bases and the joint-monotonicity constraint system.

The regression expands every coefficient function in a shared Bernstein
basis of order N. A Bernstein expansion is non-decreasing whenever its
coefficient sequence is non-decreasing, so monotonicity of the fitted
quantile functions reduces to linear inequalities D psi >= 0 on the stacked
coefficient vector psi = (beta_0, beta_1, ..., beta_q, theta).

Because the fitted function must be non-decreasing for every covariate
vector z in [0,1]^q and the derivative is linear in z, its minimum over z
sits at a vertex of the cube; one first-difference block per subset of
covariates (applied to beta_0 plus the subset sum) is therefore sufficient.
The transport map h drops the constant basis (h(0) = 0), and monotonicity
of h additionally needs its first retained coefficient to be nonnegative.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

__all__ = [
    "bernstein_eval",
    "bernstein_derivative_coeffs",
    "monotone_difference_matrix",
    "CoefficientLayout",
    "ConstraintSystem",
    "build_constraint_system",
]

MAX_SCALAR_COVARIATES = 20


def bernstein_eval(x, order, include_constant=True):
    """Evaluate the Bernstein basis of a given order at points in [0, 1].

    b_k(x, N) = C(N, k) x^k (1 - x)^(N - k) for k = 0..N. When
    ``include_constant`` is False the k = 0 basis function is dropped
    (the convention used for the transport map h, pinned by h(0) = 0).

    Parameters
    ----------
    x : scalar or array-like
        Evaluation points in [0, 1].
    order : int
        Basis order N >= 1.
    include_constant : bool
        Keep the k = 0 column.

    Returns
    -------
    ndarray, shape x.shape + (N+1,) or x.shape + (N,)
        Basis values; rows sum to 1 when the constant is included.
    """
    N = int(order)
    if N < 1:
        raise ValueError("basis order must be >= 1")
    xa = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xa)) or np.any(xa < -1e-12) or np.any(xa > 1.0 + 1e-12):
        raise ValueError("basis points must lie in [0, 1]")
    xa = np.clip(xa, 0.0, 1.0)

    k = np.arange(N + 1)
    coeff = np.array([comb(N, int(kk)) for kk in k], dtype=float)
    xcol = xa[..., None]
    with np.errstate(invalid="ignore"):
        vals = coeff * xcol**k * (1.0 - xcol) ** (N - k)
    # 0**0 corners
    vals = np.where(np.isnan(vals), 0.0, vals)
    if not include_constant:
        vals = vals[..., 1:]
    return vals


def bernstein_derivative_coeffs(coeffs):
    """Coefficients of the derivative of a Bernstein expansion.

    For f(x) = sum_k beta_k b_k(x, N), the derivative is
    f'(x) = N sum_k (beta_{k+1} - beta_k) b_k(x, N-1); this returns the
    length-N vector N * diff(coeffs) against the order N-1 basis.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size < 2:
        raise ValueError("need at least 2 coefficients")
    N = c.size - 1
    return N * np.diff(c)


def monotone_difference_matrix(order, include_first_nonneg=False):
    """First-difference constraint matrix A_N.

    Returns the N x (N+1) matrix whose row k has -1 in column k and +1 in
    column k+1, so A_N c >= 0 states that the coefficient sequence c is
    non-decreasing. With ``include_first_nonneg`` a row selecting the first
    coefficient is prepended, used for the transport-map coefficients where
    the dropped constant pins theta_0 = 0 and monotonicity near zero needs
    theta_1 >= 0.
    """
    N = int(order)
    if N < 1:
        raise ValueError("order must be >= 1")
    A = np.zeros((N, N + 1))
    idx = np.arange(N)
    A[idx, idx] = -1.0
    A[idx, idx + 1] = 1.0
    if include_first_nonneg:
        first = np.zeros((1, N + 1))
        first[0, 0] = 1.0
        A = np.vstack([first, A])
    return A


@dataclass(frozen=True)
class CoefficientLayout:
    """Positions of the coefficient blocks inside the stacked vector psi.

    psi = (beta_0, beta_1, ..., beta_q, theta) with each beta_j of length
    N+1 and theta of length N (present only with a distributional
    predictor).
    """

    q: int
    order: int
    has_distributional: bool

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("q must be >= 0")
        if self.order < 1:
            raise ValueError("order must be >= 1")

    @property
    def dim(self):
        base = (self.q + 1) * (self.order + 1)
        return base + (self.order if self.has_distributional else 0)

    def beta_slice(self, j):
        """Slice of psi holding beta_j, j = 0..q."""
        if not 0 <= j <= self.q:
            raise ValueError("coefficient index out of range")
        w = self.order + 1
        return slice(j * w, (j + 1) * w)

    @property
    def theta_slice(self):
        if not self.has_distributional:
            raise ValueError("layout has no distributional predictor")
        start = (self.q + 1) * (self.order + 1)
        return slice(start, start + self.order)


@dataclass(frozen=True)
class ConstraintSystem:
    """Stacked inequality system D psi >= 0 with row provenance labels."""

    matrix: np.ndarray
    row_labels: tuple
    layout: CoefficientLayout

    @property
    def n_rows(self):
        return self.matrix.shape[0]

    def to_csv(self, path):
        header = ",".join(f"c{j}" for j in range(self.matrix.shape[1]))
        np.savetxt(path, self.matrix, delimiter=",", header=header, comments="")


def build_constraint_system(layout, theta_first_nonneg=True):
    """Constraint matrix enforcing joint monotonicity of the fitted model.

    Stacks one first-difference block A_N applied to beta_0 + sum_{j in S}
    beta_j for every subset S of {1..q} (subsets enumerated by binary mask,
    empty set first), then the monotonicity block for theta when a
    distributional predictor is present. ``theta_first_nonneg`` keeps the
    theta_1 >= 0 row; disabling it reproduces the plain A_{N-1} theta block.

    Returns
    -------
    ConstraintSystem
    """
    q, N = layout.q, layout.order
    if q > MAX_SCALAR_COVARIATES:
        raise ValueError("subset enumeration too large: q > 20")
    A = monotone_difference_matrix(N)
    rows = []
    labels = []
    for mask in range(2**q):
        members = [j + 1 for j in range(q) if mask >> j & 1]
        block = np.zeros((N, layout.dim))
        block[:, layout.beta_slice(0)] = A
        for j in members:
            block[:, layout.beta_slice(j)] = A
        rows.append(block)
        name = "beta0" + "".join(f"+beta{j}" for j in members)
        labels.extend(f"{name}: diff {k}" for k in range(N))
    if layout.has_distributional:
        Atheta = monotone_difference_matrix(N - 1, include_first_nonneg=theta_first_nonneg) if N >= 2 else (
            np.array([[1.0]]) if theta_first_nonneg else np.zeros((0, 1))
        )
        block = np.zeros((Atheta.shape[0], layout.dim))
        block[:, layout.theta_slice] = Atheta
        rows.append(block)
        if theta_first_nonneg:
            labels.append("theta: first >= 0")
            labels.extend(f"theta: diff {k}" for k in range(Atheta.shape[0] - 1))
        else:
            labels.extend(f"theta: diff {k}" for k in range(Atheta.shape[0]))
    D = np.vstack(rows) if rows else np.zeros((0, layout.dim))
    return ConstraintSystem(matrix=D, row_labels=tuple(labels), layout=layout)
