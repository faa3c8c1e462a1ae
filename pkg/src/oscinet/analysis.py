"""Subspace geometry behind the stability of least-squares recovery.

The unpenalized fit of a partitioned regression [A, B] differs from the fit
of A alone by an amount controlled by the principal angles between Im B and
the orthogonal complement of Im A.  As the largest such angle beta_r
approaches pi/2 the discrepancy blows up like 1/cos(beta_r): nearly-redundant
probe columns can arbitrarily corrupt the coefficients of the columns an
expert actually trusts.  This module computes the angle spectra, solves the
partitioned problem by two independent routes (direct pseudoinverse and the
Schur-complement block formula), and exposes a constructed matrix family on
which the blow-up is exact and testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AngleSpectrum",
    "PartitionedSolution",
    "MSpectrum",
    "orthocomplement_basis",
    "principal_angles",
    "partitioned_l2",
    "m_spectrum",
    "random_subspace_angle_statistic",
    "make_instability_family",
]

_RANK_TOL = 1e-10
_ROUTE_TOL = 1e-8
_COND_LIMIT = 1e12


def _orthonormalize(a: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR with a rank check; returns (Q, R)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{what} must be a 2-D matrix")
    n, p = a.shape
    if p == 0:
        raise ValueError(f"{what} spans a zero-dimensional subspace")
    if p > n:
        raise np.linalg.LinAlgError(f"{what} has more columns than rows")
    q, r = np.linalg.qr(a, mode="reduced")
    norms = np.linalg.norm(a, axis=0)
    if np.any(np.abs(np.diag(r)) < _RANK_TOL * np.maximum(norms, 1e-300)):
        raise np.linalg.LinAlgError(f"{what} is rank deficient")
    return q, r


@dataclass(frozen=True)
class AngleSpectrum:
    """Principal angles in ascending order with their cosines."""

    angles: np.ndarray
    cosines: np.ndarray

    def __post_init__(self):
        ang = np.asarray(self.angles, dtype=float)
        cos = np.asarray(self.cosines, dtype=float)
        if ang.shape != cos.shape or ang.ndim != 1:
            raise ValueError("angles and cosines must be matching vectors")
        if np.any(np.diff(ang) < 0) or np.any(np.diff(cos) > 0):
            raise ValueError("angles must ascend and cosines descend")
        if np.any((cos < 0) | (cos > 1)):
            raise ValueError("cosines must lie in [0, 1]")
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "cosines", cos)

    @property
    def smallest(self) -> float:
        return float(self.angles[0])

    @property
    def largest(self) -> float:
        return float(self.angles[-1])


def orthocomplement_basis(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the column span.

    A full (square) QR factorization supplies the trailing n-p columns.  A
    zero-width input yields the identity; a full-width input yields an
    n x 0 matrix (the complement is trivial).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    n, p = a.shape
    if p == 0:
        return np.eye(n)
    _orthonormalize(a, "matrix")  # rank check only
    q_full, _ = np.linalg.qr(a, mode="complete")
    return q_full[:, p:]


def principal_angles(u: np.ndarray, w: np.ndarray) -> AngleSpectrum:
    """Principal angles between the column spans of two matrices.

    Inputs are orthonormalized internally; the cosines are the singular
    values of Q_u^T Q_w, clipped into [0, 1] against roundoff.
    """
    qu, _ = _orthonormalize(u, "first subspace")
    qw, _ = _orthonormalize(w, "second subspace")
    cos = np.clip(np.linalg.svd(qu.T @ qw, compute_uv=False), 0.0, 1.0)
    # singular values come out descending, so arccos of them ascends
    return AngleSpectrum(np.arccos(cos), cos)


@dataclass(frozen=True)
class PartitionedSolution:
    """Both solution routes for the partitioned least-squares problem."""

    x_star: np.ndarray      # fit of A alone against b + z
    w_hat1: np.ndarray      # A-block coefficients of the joint fit
    w_hat2: np.ndarray      # B-block coefficients of the joint fit
    gap: float              # ||x_star - w_hat1||_2
    route_discrepancy: float
    z_norm: float           # norm of z after projection onto (Im A)^perp
    cond_m: float

    def to_json_dict(self) -> dict:
        return {
            "p": int(self.w_hat1.shape[0]),
            "q": int(self.w_hat2.shape[0]),
            "gap": self.gap,
            "route_discrepancy": self.route_discrepancy,
            "z_norm": self.z_norm,
            "cond_m": self.cond_m,
        }


def partitioned_l2(
    a: np.ndarray, b_mat: np.ndarray, b: np.ndarray, z: np.ndarray
) -> PartitionedSolution:
    """Solve min ||[A,B] w - (b + z)|| two ways and compare with A alone.

    ``b`` must lie in Im A; ``z`` is projected onto (Im A)^perp internally
    (projected norm reported).  The joint coefficients are computed both by a
    direct pseudoinverse solve and by the Schur-complement block formula

        w2 = M^{-1} B^T z,   w1 = A^+ b - A^+ B w2,
        M = B^T B - B^T A (A^T A)^{-1} A^T B,

    and the routes must agree to 1e-8.  M with condition number above 1e12
    raises instead of being inverted.
    """
    a = np.asarray(a, dtype=float)
    b_mat = np.asarray(b_mat, dtype=float)
    b = np.asarray(b, dtype=float)
    z = np.asarray(z, dtype=float)
    n, p = a.shape
    q_cols = b_mat.shape[1]
    if p == 0 or q_cols == 0:
        raise ValueError("both blocks must have at least one column")
    if n <= p + q_cols:
        raise ValueError(f"need more rows than columns ({n} <= {p + q_cols})")

    q_a, _ = _orthonormalize(a, "A block")
    b_out = b - q_a @ (q_a.T @ b)
    if np.linalg.norm(b_out) > 1e-8 * max(1.0, np.linalg.norm(b)):
        raise ValueError("b must lie in the column span of A")
    z_perp = z - q_a @ (q_a.T @ z)
    rhs = b + z_perp

    joint = np.hstack([a, b_mat])
    sv = np.linalg.svd(joint, compute_uv=False)
    if sv[-1] < _RANK_TOL * sv[0]:
        raise np.linalg.LinAlgError("[A, B] is rank deficient")
    w_joint, *_ = np.linalg.lstsq(joint, rhs, rcond=_RANK_TOL)
    w1_direct, w2_direct = w_joint[:p], w_joint[p:]

    a_pinv = np.linalg.pinv(a, rcond=_RANK_TOL)
    atb = np.linalg.solve(a.T @ a, a.T @ b_mat)
    m = b_mat.T @ b_mat - (a.T @ b_mat).T @ atb
    m = 0.5 * (m + m.T)
    sm = np.linalg.svd(m, compute_uv=False)
    cond_m = float(sm[0] / sm[-1]) if sm[-1] > 0 else math.inf
    if cond_m > _COND_LIMIT:
        raise np.linalg.LinAlgError(
            f"Schur complement M is ill-conditioned (cond = {cond_m:.3e})"
        )
    w2_block = np.linalg.solve(m, b_mat.T @ z_perp)
    w1_block = a_pinv @ b - a_pinv @ (b_mat @ w2_block)

    disc = max(
        float(np.abs(w1_direct - w1_block).max(initial=0.0)),
        float(np.abs(w2_direct - w2_block).max(initial=0.0)),
    )
    if disc > _ROUTE_TOL:
        raise np.linalg.LinAlgError(
            f"block formula disagrees with the direct solve by {disc:.3e}"
        )

    x_star = a_pinv @ rhs
    gap = float(np.linalg.norm(x_star - w1_direct))
    return PartitionedSolution(
        x_star, w1_direct, w2_direct, gap, disc, float(np.linalg.norm(z_perp)), cond_m
    )


@dataclass(frozen=True)
class MSpectrum:
    """Spectral diagnostics of the Schur complement against the angle to B."""

    sigma_min_m_inv: float
    cos_beta_r: float
    flag: bool             # sigma_min(M^{-1}) * cos^2(beta_r) <= sigma_max(R_B)^2
    k_constant: float

    def to_json_dict(self) -> dict:
        return {
            "sigma_min_m_inv": self.sigma_min_m_inv,
            "cos_beta_r": self.cos_beta_r,
            "certified": self.flag,
            "k_constant": self.k_constant,
        }


def m_spectrum(a: np.ndarray | None, b_mat: np.ndarray) -> MSpectrum:
    """Smallest singular value of M^{-1} versus the largest principal angle.

    The angle is measured between (Im A)^perp and Im B.  ``a`` may be None or
    zero-width, in which case M = B^T B and the complement is all of R^n.
    The certified inequality is

        sigma_min(M^{-1}) * cos^2(beta_r) <= K,   K = sigma_max(R_B)^2,

    checked with a relative 1e-9 allowance.
    """
    b_arr = np.asarray(b_mat, dtype=float)
    n = b_arr.shape[0]
    q_b, r_b = _orthonormalize(b_arr, "B block")
    k_const = float(np.linalg.svd(r_b, compute_uv=False)[0] ** 2)

    if a is None or np.asarray(a).shape[1] == 0:
        m = b_arr.T @ b_arr
        q_perp = np.eye(n)
    else:
        a = np.asarray(a, dtype=float)
        _orthonormalize(a, "A block")
        atb = np.linalg.solve(a.T @ a, a.T @ b_arr)
        m = b_arr.T @ b_arr - (a.T @ b_arr).T @ atb
        q_perp = orthocomplement_basis(a)
        if q_perp.shape[1] == 0:
            raise ValueError("A spans the whole space; no complement to compare")
    m = 0.5 * (m + m.T)
    sm = np.linalg.svd(m, compute_uv=False)
    if sm[-1] <= _RANK_TOL * sm[0]:
        raise np.linalg.LinAlgError("M is singular")
    cond_m = sm[0] / sm[-1]
    if cond_m > _COND_LIMIT:
        raise np.linalg.LinAlgError(
            f"Schur complement M is ill-conditioned (cond = {cond_m:.3e})"
        )
    sigma_min_m_inv = float(1.0 / sm[0])

    cos = np.clip(np.linalg.svd(q_b.T @ q_perp, compute_uv=False), 0.0, 1.0)
    cos_beta_r = float(cos[-1])
    flag = sigma_min_m_inv * cos_beta_r**2 <= k_const * (1 + 1e-9) + 1e-12
    return MSpectrum(sigma_min_m_inv, cos_beta_r, flag, k_const)


def random_subspace_angle_statistic(
    n: int, xi: float, trials: int, seed: int = 0, squared: bool = False
) -> float:
    """Monte Carlo mean of cos(beta_1) for pairs of random xi*n-dim subspaces.

    beta_1 is the smallest principal angle, so cos(beta_1) is the largest
    singular value of Q_A^T Q_B.  With ``squared`` the average of
    cos^2(beta_1) is returned instead; empirically it is the squared
    statistic whose mean approaches 4*xi*(1-xi) for moderate n.  Each trial
    uses an independent child generator keyed by (seed, trial), so results
    are reproducible and order-independent.
    """
    if not 0.0 < xi < 0.5:
        raise ValueError("xi must lie in (0, 1/2)")
    p = int(round(n * xi))
    if p < 1:
        raise ValueError("n * xi must be at least 1")
    if trials < 1:
        raise ValueError("need at least one trial")
    total = 0.0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        qa, _ = np.linalg.qr(rng.standard_normal((n, p)))
        qb, _ = np.linalg.qr(rng.standard_normal((n, p)))
        top = float(np.linalg.svd(qa.T @ qb, compute_uv=False)[0])
        total += top * top if squared else top
    return total / trials


def make_instability_family(
    beta_r_degrees: float, eps: float = 1.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Explicit (A, B, b, z) in R^6 whose largest principal angle is dialed in.

    A spans {e1, e2}.  B has orthonormal columns tilted into the complement:
    the first leans towards e3 with angle beta_r (between Im B and (Im A)^perp),
    the second towards e4 at a fixed 30 degrees.  b = e1 + 2 e2 lies in Im A
    and z is a fixed unit direction of span{e3..e6} scaled to norm eps.  The
    joint-fit gap then equals

        sqrt(tan^2(beta_r) z3^2 + tan^2(30deg) z4^2),

    which grows without bound as beta_r -> 90 degrees while gap * cos(beta_r)
    stays pinned near |z3|.
    """
    if not 0.0 < beta_r_degrees < 90.0:
        raise ValueError("beta_r must lie strictly between 0 and 90 degrees")
    beta = math.radians(beta_r_degrees)
    tilt = math.radians(30.0)
    a = np.zeros((6, 2))
    a[0, 0] = 1.0
    a[1, 1] = 1.0
    b_mat = np.zeros((6, 2))
    b_mat[0, 0] = math.sin(beta)
    b_mat[2, 0] = math.cos(beta)
    b_mat[1, 1] = math.sin(tilt)
    b_mat[3, 1] = math.cos(tilt)
    b = np.array([1.0, 2.0, 0.0, 0.0, 0.0, 0.0])
    direction = np.array([0.9, 0.7, 0.5, 0.3])
    direction = direction / np.linalg.norm(direction)
    z = np.zeros(6)
    z[2:] = eps * direction
    return a, b_mat, b, z
