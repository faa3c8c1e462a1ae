"""Adapting the function library to the sampled trajectory.

Inner products between library columns are Birkhoff sums over the measured
trajectory, so orthonormalizing against the empirical measure is exactly a
thin QR factorization of the sampled matrix: Theta_original = Theta_ortho @ R
with R upper triangular, positive diagonal.  Because R is triangular, a
coefficient vector supported on the first s basis functions keeps its support
inside the first s coordinates after the change of basis; putting the
expert-expected columns first therefore preserves sparsity while driving the
library's coherence to zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .basis import LibraryMatrix, save_library, load_library

__all__ = [
    "AdaptedLibrary",
    "SupportCheck",
    "empirical_gram",
    "adapt_basis",
    "coherence",
    "rip_bound",
    "sparsity_preserved",
    "save_adapted",
    "load_adapted",
]

_RANK_TOL = 1e-10  # relative residual below which a column is dependent


def _matrix_of(lib) -> np.ndarray:
    if isinstance(lib, LibraryMatrix):
        return lib.values
    a = np.asarray(lib, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    return a


@dataclass(frozen=True)
class AdaptedLibrary:
    """Orthonormalized library together with the triangular change of basis.

    ``ortho.values @ r_factor`` reproduces the original matrix entrywise.
    """

    ortho: LibraryMatrix
    r_factor: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r_factor, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("r_factor must be square")
        if r.shape[0] != self.ortho.n_columns:
            raise ValueError("r_factor size does not match the library")
        if np.any(np.diag(r) <= 0):
            raise ValueError("r_factor diagonal must be positive")
        if np.abs(np.tril(r, -1)).max(initial=0.0) > 0:
            raise ValueError("r_factor must be upper triangular")
        object.__setattr__(self, "r_factor", r)


def empirical_gram(lib) -> np.ndarray:
    """Gram matrix of the library columns under the trajectory measure.

    Entry (i, j) is the Birkhoff average of phi_i * phi_j up to the common
    1/n' prefactor already baked into the columns.
    """
    theta = _matrix_of(lib)
    g = theta.T @ theta
    return 0.5 * (g + g.T)  # symmetrize away roundoff


def adapt_basis(lib: LibraryMatrix) -> AdaptedLibrary:
    """Orthonormalize the library columns in their stored order.

    Thin QR with the sign convention diag(R) > 0.  Raises on numerical rank
    deficiency, naming the first column that is dependent on its
    predecessors (residual after projection below 1e-10 of its norm).
    """
    theta = lib.values
    if theta.shape[0] < theta.shape[1]:
        raise ValueError(
            f"need at least as many rows as columns ({theta.shape[0]} < {theta.shape[1]})"
        )
    q, r = np.linalg.qr(theta, mode="reduced")
    col_norms = np.linalg.norm(theta, axis=0)
    resid = np.abs(np.diag(r))
    dependent = np.nonzero(resid < _RANK_TOL * col_norms)[0]
    if dependent.size:
        j = int(dependent[0])
        raise ValueError(
            f"library is rank deficient: column {lib.descriptors[j].label()!r} "
            "is linearly dependent on earlier columns"
        )
    signs = np.sign(np.diag(r))
    q = q * signs
    r = r * signs[:, None]
    ortho = LibraryMatrix(q, lib.descriptors, np.ones(lib.n_columns))
    return AdaptedLibrary(ortho, r)


def coherence(lib) -> float:
    """Largest off-diagonal inner product between normalized columns."""
    theta = _matrix_of(lib)
    m = theta.shape[1]
    if m == 0:
        raise ValueError("empty library")
    if m == 1:
        warnings.warn("single-column library: coherence is 0 by convention")
        return 0.0
    norms = np.linalg.norm(theta, axis=0)
    bad = np.nonzero(norms == 0)[0]
    if bad.size:
        raise ValueError(f"zero column at index {int(bad[0])}")
    g = (theta / norms).T @ (theta / norms)
    np.fill_diagonal(g, 0.0)
    return float(np.abs(g).max())


def rip_bound(eta: float, s: int) -> float:
    """Certified restricted-isometry bound delta_s <= eta * (s - 1)."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"coherence must lie in [0, 1], got {eta}")
    if int(s) != s or s < 2:
        raise ValueError(f"sparsity level must be an integer >= 2, got {s}")
    return eta * (s - 1)


class SupportCheck(NamedTuple):
    preserved: bool
    support: tuple

    def __bool__(self) -> bool:  # truthiness = the verdict, not tuple length
        return self.preserved


def sparsity_preserved(r_factor: np.ndarray, x_sparse: np.ndarray) -> SupportCheck:
    """Check that the triangular change of basis keeps the leading support.

    ``x_sparse`` supported on its first s entries (s inferred from the last
    nonzero) maps to R @ x with support inside the same first s coordinates;
    this is exact for upper-triangular R, no tolerance involved.  Returns the
    verdict and the 0-based support of the transformed vector.
    """
    r = np.asarray(r_factor, dtype=float)
    if np.abs(np.tril(r, -1)).max(initial=0.0) > 0:
        raise ValueError("r_factor must be upper triangular")
    x = np.asarray(x_sparse, dtype=float)
    nz = np.nonzero(x)[0]
    s = int(nz[-1]) + 1 if nz.size else 0
    y = r @ x
    support = tuple(int(i) for i in np.nonzero(y)[0])
    preserved = all(i < s for i in support) if s else not support
    return SupportCheck(preserved, support)


def save_adapted(adapted: AdaptedLibrary, csv_path, json_path, r_csv_path) -> None:
    """Two CSV matrices (ortho columns, R factor) plus the descriptor JSON."""
    save_library(adapted.ortho, csv_path, json_path)
    np.savetxt(r_csv_path, adapted.r_factor, fmt="%.17g", delimiter=",")


def load_adapted(csv_path, json_path, r_csv_path) -> AdaptedLibrary:
    ortho = load_library(csv_path, json_path)
    r = np.loadtxt(r_csv_path, delimiter=",", ndmin=2)
    return AdaptedLibrary(ortho, r)
