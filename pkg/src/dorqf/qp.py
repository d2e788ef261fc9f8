"""Dense inequality-constrained quadratic programming.

Solves min 0.5 x'Hx + g'x subject to D x >= b (b = 0 throughout the
regression) with a dual active-set method in the Goldfarb-Idnani style:
start from the unconstrained minimizer, repeatedly pick a violated
constraint, and take combined primal-dual steps that keep the working set
dual feasible until primal feasibility is reached. Problems here are small
(K_n typically below 40, constraint rows below a few hundred), so the
working-set factorizations are recomputed with dense triangular solves
instead of being updated incrementally.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "QpError",
    "QpSolution",
    "solve_qp",
    "solve_unconstrained_ls",
    "solve_constrained_ls",
    "project_onto_cone",
    "ConeProjector",
]

FEAS_TOL = 1e-8
DUAL_TOL = 1e-8
STAT_TOL = 1e-6
SLACK_TOL = 1e-6
ACTIVE_TOL = 1e-8


def _check_symmetric(H, tol=1e-10):
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.T)) > tol * scale:
        raise ValueError("Hessian must be symmetric")


class QpError(RuntimeError):
    """Raised on solver failure; carries the best iterate when available."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


@dataclass
class QpSolution:
    """Solution of one quadratic program with its optimality certificates."""

    x: np.ndarray
    multipliers: np.ndarray
    active_set: tuple
    objective: float
    iterations: int
    converged: bool
    kkt: dict = field(default_factory=dict)


def _kkt_residuals(H, g, D, b, x, lam):
    grad = H @ x + g
    if D.shape[0]:
        grad = grad - D.T @ lam
        slack = D @ x - b
        primal = float(np.min(slack))
        dual = float(np.min(lam)) if lam.size else 0.0
        comp = float(np.max(np.abs(lam * slack))) if lam.size else 0.0
    else:
        primal, dual, comp = 0.0, 0.0, 0.0
    return {
        "primal": primal,
        "dual": dual,
        "stationarity": float(np.max(np.abs(grad))),
        "complementary_slackness": comp,
    }


def _finish(H, g, D, b, x, lam, iters, converged):
    kkt = _kkt_residuals(H, g, D, b, x, lam)
    if D.shape[0]:
        active = tuple(np.flatnonzero(np.abs(D @ x - b) <= ACTIVE_TOL))
    else:
        active = ()
    obj = float(0.5 * x @ (H @ x) + g @ x)
    return QpSolution(
        x=x,
        multipliers=lam,
        active_set=active,
        objective=obj,
        iterations=iters,
        converged=converged,
        kkt=kkt,
    )


def solve_qp(H, g, D=None, b=None, chol=None, max_iter=None, feas_tol=FEAS_TOL):
    """Minimize 0.5 x'Hx + g'x subject to D x >= b.

    Parameters
    ----------
    H : ndarray, shape (K, K)
        Symmetric positive definite Hessian.
    g : ndarray, shape (K,)
        Linear term.
    D : ndarray, shape (R, K), optional
        Constraint rows; omitted or empty means unconstrained.
    b : ndarray, shape (R,), optional
        Right-hand sides, default zero.
    chol : ndarray, optional
        Precomputed lower Cholesky factor of H, reused across calls that
        share the Hessian (the projection loop of the band construction).
    max_iter : int, optional
        Iteration cap, default 10 * (R + K).

    Returns
    -------
    QpSolution

    Raises
    ------
    QpError
        On iteration-cap overrun (carries the best iterate) or an
        infeasible constraint system.
    np.linalg.LinAlgError
        If H is not positive definite and no factor was supplied.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    K = g.size
    if D is None or np.size(D) == 0:
        D = np.zeros((0, K))
    else:
        D = np.asarray(D, dtype=float)
    R = D.shape[0]
    if b is None:
        b = np.zeros(R)
    else:
        b = np.asarray(b, dtype=float)
    if max_iter is None:
        max_iter = 10 * (R + K)

    L = np.linalg.cholesky(H) if chol is None else chol
    x = solve_triangular(
        L, solve_triangular(L, -g, lower=True, check_finite=False),
        lower=True, trans="T", check_finite=False,
    )
    lam_full = np.zeros(R)
    if R == 0:
        return _finish(H, g, D, b, x, lam_full, 0, True)

    active = []
    lam_a = []
    iters = 0
    while True:
        slack = D @ x - b
        if active:
            slack[active] = 0.0
        p = int(np.argmin(slack))
        if slack[p] >= -feas_tol:
            break
        n_p = D[p]
        lam_p = 0.0
        while True:
            iters += 1
            if iters > max_iter:
                lam_full = np.zeros(R)
                lam_full[active] = lam_a
                if lam_p:
                    lam_full[p] += lam_p
                best = _finish(H, g, D, b, x, lam_full, iters, False)
                raise QpError("QP did not converge within iteration cap", best)
            u_p = solve_triangular(L, n_p, lower=True, check_finite=False)
            if active:
                Ua = solve_triangular(L, D[active].T, lower=True, check_finite=False)
                M = Ua.T @ Ua
                r = np.linalg.solve(M, Ua.T @ u_p)
                w = u_p - Ua @ r
            else:
                r = np.zeros(0)
                w = u_p
            znp = float(w @ w)
            lam_arr = np.asarray(lam_a)
            if active and np.any(r > 0):
                ratios = np.where(r > 0, lam_arr / np.where(r > 0, r, 1.0), np.inf)
                t1 = float(np.min(ratios))
                ties = np.flatnonzero(ratios == t1)
                k_local = int(ties[np.argmin(lam_arr[ties])])
            else:
                t1 = np.inf
                k_local = -1

            if znp <= 1e-12 * max(1.0, float(u_p @ u_p)):
                # constraint normal dependent on the working set: dual step only
                if not np.isfinite(t1):
                    lam_full = np.zeros(R)
                    lam_full[active] = lam_a
                    best = _finish(H, g, D, b, x, lam_full, iters, False)
                    raise QpError("infeasible constraint system", best)
                for i in range(len(active)):
                    lam_a[i] -= t1 * r[i]
                lam_p += t1
                del active[k_local], lam_a[k_local]
                continue

            z = solve_triangular(L, w, lower=True, trans="T", check_finite=False)
            s_p = float(n_p @ x - b[p])
            t2 = -s_p / znp
            t = min(t1, t2)
            x = x + t * z
            for i in range(len(active)):
                lam_a[i] -= t * r[i]
            lam_p += t
            if t2 <= t1:
                active.append(p)
                lam_a.append(lam_p)
                break
            del active[k_local], lam_a[k_local]

    lam_full = np.zeros(R)
    if active:
        lam_full[active] = np.maximum(lam_a, 0.0)
    return _finish(H, g, D, b, x, lam_full, iters, True)


def _chol_from_design(T, ridge):
    """Lower Cholesky factor of T'T + ridge*I, via QR when ill-conditioned."""
    K = T.shape[1]
    H = T.T @ T
    if ridge:
        H = H + ridge * np.eye(K)
    cond = np.linalg.cond(H)
    if np.isfinite(cond) and cond <= 1e14:
        try:
            return H, np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            pass
    # orthogonal factorization of the (possibly ridge-augmented) design
    A = T if ridge == 0.0 else np.vstack([T, np.sqrt(ridge) * np.eye(K)])
    Rf = np.linalg.qr(A, mode="r")
    diag = np.abs(np.diag(Rf))
    if diag.max() == 0.0 or diag.min() <= 1e-13 * diag.max():
        raise np.linalg.LinAlgError("singular normal equations")
    signs = np.sign(np.diag(Rf))
    signs[signs == 0] = 1.0
    return H, Rf.T * signs


def solve_unconstrained_ls(design, ridge=0.0):
    """Least-squares coefficients for the stacked design, no constraints.

    Uses a rank-revealing factorization (lstsq) at ridge 0 and augmented
    normal equations otherwise.
    """
    T, y = design.T_stack, design.response
    if ridge == 0.0:
        x, _, rank, _ = np.linalg.lstsq(T, y, rcond=None)
        if rank < T.shape[1]:
            raise np.linalg.LinAlgError("singular normal equations")
        return x
    H = T.T @ T + ridge * np.eye(T.shape[1])
    return np.linalg.solve(H, T.T @ y)


def solve_constrained_ls(design, constraints, ridge=0.0):
    """Shape-constrained least squares min ||Q_Y - T psi||^2 s.t. D psi >= 0.

    ``objective`` on the returned solution is the residual sum of squares of
    the constrained fit (exclusive of any ridge penalty).
    """
    T, y = design.T_stack, design.response
    try:
        H, L = _chol_from_design(T, ridge)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular normal equations") from exc
    g = -(T.T @ y)
    sol = solve_qp(H, g, constraints.matrix, chol=L)
    resid = y - T @ sol.x
    sol.objective = float(resid @ resid)
    return sol


def project_onto_cone(z, omega, constraints, chol=None):
    """Omega-weighted projection of z onto the cone {psi : D psi >= 0}.

    ``objective`` on the returned solution is the squared Omega-distance
    (psi - z)' Omega (psi - z).
    """
    z = np.asarray(z, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if chol is None:
        _check_symmetric(omega)
    g = -(omega @ z)
    sol = solve_qp(omega, g, constraints.matrix, chol=chol)
    d = sol.x - z
    sol.objective = float(d @ (omega @ d))
    return sol


class ConeProjector:
    """Reusable Omega-projection with a cached Cholesky factor.

    Used where many vectors are projected under one Omega (the B Gaussian
    samples of the band construction).
    """

    def __init__(self, omega, constraints):
        self.omega = np.asarray(omega, dtype=float)
        _check_symmetric(self.omega)
        self.constraints = constraints
        self.chol = np.linalg.cholesky(self.omega)

    def project(self, z):
        return project_onto_cone(z, self.omega, self.constraints, chol=self.chol)

    def project_many(self, Z):
        """Project the rows of Z; returns (projected rows, solutions)."""
        Z = np.asarray(Z, dtype=float)
        out = np.empty_like(Z)
        sols = []
        for i in range(Z.shape[0]):
            sol = self.project(Z[i])
            out[i] = sol.x
            sols.append(sol)
        return out, sols
