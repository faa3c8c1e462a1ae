"""Linear solvers for the per-node regressions.

Two routes solve ``Theta w ~ v``: a plain pseudoinverse (SVD with a relative
singular-value cutoff) and an L1-penalized least squares

    minimize  ||Theta w - v||_2^2 + lambda * ||w||_1

solved by cyclic coordinate descent.  The objective carries no 1/(2n)
normalization, so the whole-path boundary is lambda_max = 2 max_j |theta_j^T v|
and the per-coordinate soft threshold sits at lambda / 2.

The descent runs in Gram space (G = Theta^T Theta, c = Theta^T v): coordinate
updates then cost O(m) and cross-validation folds reuse one Gram factor.  The
inner loop is JIT-compiled with numba.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
from numba import njit

__all__ = [
    "SolverError",
    "LassoFit",
    "least_squares",
    "min_singular_value",
    "lasso_cd",
    "lasso_path",
    "cross_validate",
    "kkt_violation",
    "lasso_objective",
    "lambda_max",
]

_SV_CUTOFF = 1e-10       # relative singular-value threshold for pseudoinverses
_COEF_TOL = 1e-8         # max coefficient change declaring a sweep converged
_KKT_TOL = 1e-6          # certificate tolerance
_MAX_SWEEPS = 100_000


class SolverError(RuntimeError):
    """Raised when a solver cannot certify its result."""


def least_squares(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution via SVD pseudoinverse.

    Singular values below 1e-10 times the largest are treated as zero.
    """
    a = np.asarray(a, dtype=float)
    v = np.asarray(v, dtype=float)
    if a.size == 0 or a.shape[0] < 1:
        raise ValueError("empty matrix")
    x, *_ = np.linalg.lstsq(a, v, rcond=_SV_CUTOFF)
    return x


def min_singular_value(theta: np.ndarray) -> float:
    theta = np.asarray(theta, dtype=float)
    if theta.size == 0:
        raise ValueError("empty matrix")
    return float(np.linalg.svd(theta, compute_uv=False)[-1])


@njit(cache=True)
def _cd_kernel(g, c, lam, w, q, max_sweeps, tol):
    """Cyclic coordinate descent with active-set refinement.

    Mutates ``w`` and the maintained product ``q = G w``.  Returns
    (sweeps_used, last_full_sweep_max_delta, converged).  Convergence is
    declared only when a *full* cyclic sweep moves no coefficient by tol or
    more.
    """
    m = g.shape[0]
    thr = 0.5 * lam
    sweeps = 0
    md = tol + 1.0
    while sweeps < max_sweeps:
        md = 0.0
        for j in range(m):
            gjj = g[j, j]
            if gjj <= 0.0:
                continue
            wj = w[j]
            rho = c[j] - q[j] + gjj * wj
            if rho > thr:
                nw = (rho - thr) / gjj
            elif rho < -thr:
                nw = (rho + thr) / gjj
            else:
                nw = 0.0
            d = nw - wj
            if d != 0.0:
                w[j] = nw
                gj = g[j]
                for i in range(m):
                    q[i] += d * gj[i]
                if abs(d) > md:
                    md = abs(d)
        sweeps += 1
        if md < tol:
            return sweeps, md, True
        while sweeps < max_sweeps:
            mda = 0.0
            for j in range(m):
                if w[j] == 0.0:
                    continue
                gjj = g[j, j]
                if gjj <= 0.0:
                    continue
                wj = w[j]
                rho = c[j] - q[j] + gjj * wj
                if rho > thr:
                    nw = (rho - thr) / gjj
                elif rho < -thr:
                    nw = (rho + thr) / gjj
                else:
                    nw = 0.0
                d = nw - wj
                if d != 0.0:
                    w[j] = nw
                    gj = g[j]
                    for i in range(m):
                        q[i] += d * gj[i]
                    if abs(d) > mda:
                        mda = abs(d)
            sweeps += 1
            if mda < tol:
                break
    return sweeps, md, False


def _kkt_from_gram(g, c, w, lam) -> float:
    grad = 2.0 * (g @ w - c)
    nz = w != 0.0
    viol = 0.0
    if nz.any():
        viol = np.abs(grad[nz] + lam * np.sign(w[nz])).max()
    if (~nz).any():
        viol = max(viol, max(0.0, np.abs(grad[~nz]).max() - lam))
    return float(viol)


def _active_set_polish(g, c, lam, w, kkt_tol):
    """Finisher for ill-conditioned path tails where cyclic descent crawls.

    Feature-sign search: solve the stationarity system on the active set
    with fixed signs (G_SS x = c_S - lam/2 * s, the same piecewise-quadratic
    system a sign-pattern oracle solves); if the solution leaves its sign
    orthant, line-search toward it stopping at every zero crossing and keep
    the best objective point (crossed coordinates drop out of the set);
    activate the worst violating zero coordinate between solves.  Writes the
    best iterate into ``w``; returns its violation.
    """

    def objective(vec):
        return float(vec @ (g @ vec) - 2.0 * (c @ vec) + lam * np.abs(vec).sum())

    cur = w.copy()
    best = w.copy()
    best_viol = _kkt_from_gram(g, c, w, lam)
    sign = np.sign(cur)
    for _ in range(4 * cur.size):
        viol = _kkt_from_gram(g, c, cur, lam)
        if viol < best_viol:
            best_viol = viol
            best = cur.copy()
        if best_viol <= kkt_tol:
            break
        grad = 2.0 * (g @ cur - c)
        inactive = sign == 0.0
        if inactive.any():
            excess = np.where(inactive, np.abs(grad) - lam, -np.inf)
            j = int(np.argmax(excess))
            if excess[j] > kkt_tol:
                sign[j] = -np.sign(grad[j])
        support = np.flatnonzero(sign)
        if support.size == 0:
            break
        sub = g[np.ix_(support, support)]
        rhs = c[support] - 0.5 * lam * sign[support]
        x, *_ = np.linalg.lstsq(sub, rhs, rcond=_SV_CUTOFF)
        if not np.all(np.isfinite(x)):
            break
        cand = np.zeros_like(cur)
        cand[support] = x
        if np.all(np.sign(x) == sign[support]):
            cur = cand
            sign = np.sign(cur)
            continue
        # candidate leaves its orthant: piecewise-quadratic line search
        d = cand - cur
        ds = d[support]
        ws = cur[support]
        moving = ds != 0.0
        tz = -ws[moving] / ds[moving]
        crossings = sorted(
            {float(t) for t in tz if 0.0 < t < 1.0} | {1.0}
        )
        f_cur = objective(cur)
        f_best = f_cur
        trial_best = None
        for t in crossings:
            trial = cur + t * d
            trial[np.abs(trial) <= 1e-14 * np.abs(d).max()] = 0.0
            f_t = objective(trial)
            if f_t < f_best:
                f_best = f_t
                trial_best = trial
        if trial_best is None:
            break  # no descent left along this direction
        cur = trial_best
        sign = np.sign(cur)
    w[:] = best
    return best_viol


def _qp_fallback(g, c, lam, w):
    """Solve the positive/negative split as a bound-constrained QP.

    min_{p,q >= 0} (p-q)^T G (p-q) - 2 c^T (p-q) + lam * 1^T (p+q) is the
    same objective with the absolute value linearized; L-BFGS-B handles the
    box.  Last resort for singular path tails where both descent and the
    sign walk stall between near-degenerate orthants.  Writes the solution
    into ``w``; returns its violation.
    """
    n = c.size

    def fun(z):
        vec = z[:n] - z[n:]
        gv = g @ vec
        f = vec @ gv - 2.0 * (c @ vec) + lam * z.sum()
        grad = 2.0 * (gv - c)
        return f, np.concatenate([grad + lam, lam - grad])

    z0 = np.concatenate([np.maximum(w, 0.0), np.maximum(-w, 0.0)])
    res = scipy.optimize.minimize(
        fun, z0, jac=True, method="L-BFGS-B",
        bounds=[(0.0, None)] * (2 * n),
        options={"maxiter": 20_000, "ftol": 1e-18, "gtol": 1e-10},
    )
    vec = res.x[:n] - res.x[n:]
    vec[np.abs(vec) < 1e-12] = 0.0
    w[:] = vec
    return _kkt_from_gram(g, c, w, lam)


def _solve_gram(g, c, lam, w, max_sweeps=_MAX_SWEEPS, tol=_COEF_TOL, kkt_tol=_KKT_TOL):
    """Run the kernel until the KKT certificate holds; returns final violation.

    Cheap cyclic descent first; if the certificate fails (near-singular Gram
    at small lambda), the active-set finisher takes over, then the remaining
    sweep budget, then the box-QP fallback.  Stages after the first run only
    on instances the stage before failed to certify.
    """
    q = g @ w
    used, _, _ = _cd_kernel(g, c, lam, w, q, min(max_sweeps, 5_000), tol)
    viol = _kkt_from_gram(g, c, w, lam)
    if viol > kkt_tol:
        viol = _active_set_polish(g, c, lam, w, kkt_tol)
    if viol > kkt_tol and used < max_sweeps:
        q = g @ w
        _cd_kernel(g, c, lam, w, q, max_sweeps - used, tol * 1e-2)
        viol = _kkt_from_gram(g, c, w, lam)
        if viol > kkt_tol:
            viol = _active_set_polish(g, c, lam, w, kkt_tol)
    if viol > kkt_tol:
        qp_w = w.copy()
        qp_viol = _qp_fallback(g, c, lam, qp_w)
        if qp_viol < viol:
            w[:] = qp_w
            viol = qp_viol
        if viol > kkt_tol:
            viol = _active_set_polish(g, c, lam, w, kkt_tol)
    return viol


def lambda_max(theta: np.ndarray, v: np.ndarray) -> float:
    """Smallest penalty for which the all-zero vector is optimal."""
    return 2.0 * float(np.abs(np.asarray(theta).T @ np.asarray(v)).max())


def lasso_cd(
    theta: np.ndarray,
    v: np.ndarray,
    lam: float,
    w_init: np.ndarray | None = None,
    max_sweeps: int = _MAX_SWEEPS,
) -> np.ndarray:
    """Coordinate-descent LASSO solve at one penalty value.

    Intended for column-normalized matrices (general column norms are handled
    through the Gram diagonal).  The returned vector satisfies the KKT
    conditions of the objective within 1e-6, else :class:`SolverError` is
    raised with the final violation.
    """
    theta = np.ascontiguousarray(theta, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    g = theta.T @ theta
    c = theta.T @ v
    w = np.zeros(theta.shape[1]) if w_init is None else np.array(w_init, dtype=float)
    viol = _solve_gram(g, c, lam, w, max_sweeps=max_sweeps)
    if viol > _KKT_TOL:
        raise SolverError(
            f"coordinate descent failed to certify optimality; KKT violation {viol:.3e}"
        )
    return w


def kkt_violation(theta: np.ndarray, v: np.ndarray, w: np.ndarray, lam: float) -> float:
    """Max violation of the stationarity conditions at w (0 means certified)."""
    theta = np.asarray(theta, dtype=float)
    g = theta.T @ theta
    c = theta.T @ np.asarray(v, dtype=float)
    return _kkt_from_gram(g, c, np.asarray(w, dtype=float), lam)


def lasso_objective(theta: np.ndarray, v: np.ndarray, w: np.ndarray, lam: float) -> float:
    r = theta @ w - v
    return float(r @ r + lam * np.abs(w).sum())


@dataclass(frozen=True)
class LassoFit:
    """Regularization path and (optionally) its cross-validated selection.

    ``coefficients`` are rescaled to the unnormalized basis when column scales
    are supplied to :func:`cross_validate`.
    """

    lambda_grid: np.ndarray
    path: np.ndarray
    cv_error: np.ndarray | None = None
    chosen_lambda: float | None = None
    coefficients: np.ndarray | None = None

    @property
    def support_sizes(self) -> np.ndarray:
        return (self.path != 0).sum(axis=0)

    def to_json_dict(self, labels=None) -> dict:
        out = {
            "lambda_grid": self.lambda_grid.tolist(),
            "support_sizes": self.support_sizes.tolist(),
            "cv_error": None if self.cv_error is None else self.cv_error.tolist(),
            "chosen_lambda": self.chosen_lambda,
        }
        if self.coefficients is not None:
            if labels is not None:
                out["coefficients"] = {
                    lab: float(wj)
                    for lab, wj in zip(labels, self.coefficients)
                    if wj != 0.0
                }
            else:
                out["coefficients"] = self.coefficients.tolist()
        return out


def _lambda_grid(lam_max: float, grid_size: int, decades: float) -> np.ndarray:
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    if lam_max <= 0.0:
        # target orthogonal to every column; the only sensible fit is w = 0
        return np.array([0.0])
    return lam_max * np.power(10.0, np.linspace(0.0, -decades, grid_size))


def _path_gram(g, c, grid, enforce_kkt=True):
    """Warm-started coefficient path over a descending penalty grid."""
    m = g.shape[0]
    path = np.empty((m, len(grid)))
    w = np.zeros(m)
    for idx, lam in enumerate(grid):
        viol = _solve_gram(g, c, lam, w)
        if enforce_kkt and viol > _KKT_TOL:
            raise SolverError(
                f"path solve at lambda={lam:.3e} failed KKT certificate ({viol:.3e})"
            )
        path[:, idx] = w
    return path


def lasso_path(
    theta: np.ndarray, v: np.ndarray, grid_size: int = 50, decades: float = 4.0
) -> LassoFit:
    """Warm-started regularization path from lambda_max downward."""
    theta = np.ascontiguousarray(theta, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    g = theta.T @ theta
    c = theta.T @ v
    grid = _lambda_grid(2.0 * np.abs(c).max(), grid_size, decades)
    return LassoFit(grid, _path_gram(g, c, grid))


def _fold_bounds(n: int, k: int) -> np.ndarray:
    return np.linspace(0, n, k + 1).astype(int)


def cross_validate(
    theta: np.ndarray,
    v: np.ndarray,
    k: int = 5,
    grid: np.ndarray | None = None,
    grid_size: int = 50,
    decades: float = 4.0,
    column_scales: np.ndarray | None = None,
) -> LassoFit:
    """k-fold cross-validated LASSO with contiguous time-block folds.

    Rows are serially correlated trajectory samples, so folds are contiguous
    blocks rather than shuffled subsets.  For every penalty on the grid the
    model is fit on k-1 blocks and scored on the held-out block; the chosen
    penalty minimizes the total held-out squared error (reported per sample),
    ties resolving to the largest penalty.  Final coefficients are refit on
    all rows at the chosen penalty and divided by ``column_scales`` when
    given (mapping back to the unnormalized basis).
    """
    theta = np.ascontiguousarray(theta, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    n = theta.shape[0]
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < k:
        raise ValueError(f"too few rows ({n}) for {k} folds")
    g = theta.T @ theta
    c = theta.T @ v
    if grid is None:
        grid = _lambda_grid(2.0 * np.abs(c).max(), grid_size, decades)
    else:
        grid = np.asarray(grid, dtype=float)
        if len(grid) < 1 or np.any(np.diff(grid) > 0):
            raise ValueError("grid must be non-empty and descending")

    err = np.zeros(len(grid))
    bounds = _fold_bounds(n, k)
    for f in range(k):
        lo, hi = bounds[f], bounds[f + 1]
        if hi == lo:
            continue
        th_te, v_te = theta[lo:hi], v[lo:hi]
        g_te = th_te.T @ th_te
        c_te = th_te.T @ v_te
        sse0 = float(v_te @ v_te)
        fold_path = _path_gram(g - g_te, c - c_te, grid, enforce_kkt=False)
        for idx in range(len(grid)):
            w = fold_path[:, idx]
            err[idx] += max(0.0, float(w @ g_te @ w - 2.0 * (c_te @ w) + sse0))

    cv_error = err / n
    best = int(np.argmin(cv_error))  # first minimum = largest penalty on ties
    full_path = _path_gram(g, c, grid)
    coef = full_path[:, best].copy()
    if column_scales is not None:
        coef = coef / np.asarray(column_scales, dtype=float)
    return LassoFit(grid, full_path, cv_error, float(grid[best]), coef)
