"""Fourier library (design matrix) construction over phase trajectories.

Columns are candidate right-hand-side terms for each node's phase equation:
a constant, sines and cosines of each node's phase, and sines and cosines of
every pairwise phase difference.  Optional higher harmonics of single nodes
can be appended ("basis extension").  Every column carries a typed descriptor
so coefficients can always be mapped back to symbolic terms, and the whole
matrix carries a 1/sqrt(n') prefactor so Gram entries are trajectory averages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .signal import PhaseData

__all__ = [
    "ColumnDescriptor",
    "LibraryMatrix",
    "TargetMatrix",
    "build_library",
    "select_columns",
    "extend_basis",
    "column_normalize",
    "denormalize",
    "save_library",
    "load_library",
]

CONST = "const"
NODE = "node"
PAIR = "pair"


@dataclass(frozen=True)
class ColumnDescriptor:
    """Typed identity of one library column.

    kind "const": the constant term (houses each node's natural frequency).
    kind "node": trig(harmonic * theta_node), node 1-based.
    kind "pair": trig(theta_k - theta_m) with k < m, both 1-based.
    """

    kind: str
    trig: str = ""
    node: int = 0
    harmonic: int = 1
    pair: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.kind == CONST:
            if self.trig or self.node or self.pair != (0, 0):
                raise ValueError("constant descriptor carries no trig/node/pair")
        elif self.kind == NODE:
            if self.trig not in ("sin", "cos") or self.node < 1 or self.harmonic < 1:
                raise ValueError(f"bad node descriptor {self!r}")
        elif self.kind == PAIR:
            k, m = self.pair
            if self.trig not in ("sin", "cos") or not (1 <= k < m):
                raise ValueError(f"bad pair descriptor {self!r}")
        else:
            raise ValueError(f"unknown descriptor kind {self.kind!r}")
        object.__setattr__(self, "pair", tuple(self.pair))

    @staticmethod
    def constant() -> "ColumnDescriptor":
        return ColumnDescriptor(CONST)

    @staticmethod
    def node_harmonic(node: int, harmonic: int, trig: str) -> "ColumnDescriptor":
        return ColumnDescriptor(NODE, trig=trig, node=node, harmonic=harmonic)

    @staticmethod
    def pair_diff(k: int, m: int, trig: str) -> "ColumnDescriptor":
        return ColumnDescriptor(PAIR, trig=trig, pair=(k, m))

    def involves(self, node: int) -> bool:
        if self.kind == NODE:
            return self.node == node
        if self.kind == PAIR:
            return node in self.pair
        return False

    def label(self) -> str:
        """Compact symbolic label, used as the JSON key for coefficients."""
        if self.kind == CONST:
            return "1"
        if self.kind == NODE:
            arg = f"th{self.node}" if self.harmonic == 1 else f"{self.harmonic}*th{self.node}"
            return f"{self.trig}({arg})"
        k, m = self.pair
        return f"{self.trig}(th{k}-th{m})"

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == NODE:
            d.update(trig=self.trig, node=self.node, harmonic=self.harmonic)
        elif self.kind == PAIR:
            d.update(trig=self.trig, k=self.pair[0], m=self.pair[1])
        return d

    @staticmethod
    def from_dict(d: dict) -> "ColumnDescriptor":
        kind = d["kind"]
        if kind == CONST:
            return ColumnDescriptor.constant()
        if kind == NODE:
            return ColumnDescriptor.node_harmonic(d["node"], d["harmonic"], d["trig"])
        if kind == PAIR:
            return ColumnDescriptor.pair_diff(d["k"], d["m"], d["trig"])
        raise ValueError(f"unknown descriptor kind {kind!r}")


def column_values(desc: ColumnDescriptor, phases: np.ndarray) -> np.ndarray:
    """Evaluate one raw basis function (no prefactor) along the trajectory."""
    if desc.kind == CONST:
        return np.ones(phases.shape[0])
    fn = np.sin if desc.trig == "sin" else np.cos
    if desc.kind == NODE:
        return fn(desc.harmonic * phases[:, desc.node - 1])
    k, m = desc.pair
    return fn(phases[:, k - 1] - phases[:, m - 1])


@dataclass(frozen=True)
class LibraryMatrix:
    """Design matrix with one descriptor per column.

    ``values`` carries the 1/sqrt(n') prefactor.  ``column_scales`` is the
    cumulative factor each column has additionally been divided by (all ones
    until :func:`column_normalize`), so coefficients found against the stored
    columns map back to the unnormalized library by dividing by the scales and
    to the raw symbolic basis by further dividing by sqrt(n').
    """

    values: np.ndarray
    descriptors: tuple[ColumnDescriptor, ...]
    column_scales: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        s = np.asarray(self.column_scales, dtype=float)
        if v.ndim != 2 or len(self.descriptors) != v.shape[1] or s.shape != (v.shape[1],):
            raise ValueError("inconsistent library shapes")
        if not np.isfinite(v).all():
            raise ValueError("non-finite library entries")
        if len(set(self.descriptors)) != len(self.descriptors):
            raise ValueError("duplicate descriptors in library")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "descriptors", tuple(self.descriptors))
        object.__setattr__(self, "column_scales", s)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    @cached_property
    def _index(self) -> dict:
        return {d: j for j, d in enumerate(self.descriptors)}

    def column_index(self, desc: ColumnDescriptor) -> int:
        try:
            return self._index[desc]
        except KeyError:
            raise KeyError(f"descriptor {desc.label()} not in library") from None

    def physical_coefficients(self, w: np.ndarray) -> np.ndarray:
        """Map solver coefficients (against stored columns) to raw-basis scale."""
        return np.asarray(w) / (np.sqrt(self.n_rows) * self.column_scales)


@dataclass(frozen=True)
class TargetMatrix:
    """Matrix of smoothed phase derivatives, one column per node."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("target matrix must be 2-D")
        object.__setattr__(self, "values", v)

    @property
    def n_nodes(self) -> int:
        return self.values.shape[1]


def _base_descriptors(n_nodes: int) -> list[ColumnDescriptor]:
    out = [ColumnDescriptor.constant()]
    out += [ColumnDescriptor.node_harmonic(l, 1, "sin") for l in range(1, n_nodes + 1)]
    out += [ColumnDescriptor.node_harmonic(l, 1, "cos") for l in range(1, n_nodes + 1)]
    for k in range(1, n_nodes + 1):
        for m in range(k + 1, n_nodes + 1):
            out.append(ColumnDescriptor.pair_diff(k, m, "sin"))
            out.append(ColumnDescriptor.pair_diff(k, m, "cos"))
    return out


def _assemble(descs, phases) -> np.ndarray:
    n = phases.shape[0]
    if n == 0:
        raise ValueError("empty phase data")
    cols = np.empty((n, len(descs)))
    for j, d in enumerate(descs):
        cols[:, j] = column_values(d, phases)
    return cols / np.sqrt(n)


def build_library(ph: PhaseData, first_harmonics_only: bool = True):
    """Build the design matrix and target matrix from phase data.

    Returns ``(LibraryMatrix, TargetMatrix)``.  The default dictionary holds
    1 + 2N + N(N-1) columns: a constant, first harmonics of every node, and
    both trigs of every pairwise difference.  With ``first_harmonics_only``
    False the higher single-node harmonics m = 2..9 of every node are included
    as well (the fully extended dictionary; see :func:`extend_basis`).
    """
    if ph.n_samples == 0:
        raise ValueError("empty phase data")
    descs = _base_descriptors(ph.n_nodes)
    if not first_harmonics_only:
        for node in range(1, ph.n_nodes + 1):
            descs += _extension_descriptors(node, 9)
    lib = LibraryMatrix(_assemble(descs, ph.phases), tuple(descs), np.ones(len(descs)))
    return lib, TargetMatrix(ph.derivatives.copy())


def select_columns(lib: LibraryMatrix, seed) -> tuple[LibraryMatrix, LibraryMatrix]:
    """Split into expert-seed columns A (seed order) and the remainder B.

    [A, B] is a column permutation of the input library.
    """
    seed = list(seed)
    idx_a = [lib.column_index(d) for d in seed]
    taken = set(idx_a)
    idx_b = [j for j in range(lib.n_columns) if j not in taken]

    def _sub(idx):
        return LibraryMatrix(
            lib.values[:, idx],
            tuple(lib.descriptors[j] for j in idx),
            lib.column_scales[idx].copy(),
        )

    return _sub(idx_a), _sub(idx_b)


def _extension_descriptors(node: int, max_harmonic: int) -> list[ColumnDescriptor]:
    out = []
    for m in range(2, max_harmonic + 1):
        out.append(ColumnDescriptor.node_harmonic(node, m, "sin"))
        out.append(ColumnDescriptor.node_harmonic(node, m, "cos"))
    return out


def extend_basis(
    lib: LibraryMatrix, ph: PhaseData, node: int, max_harmonic: int = 9
) -> LibraryMatrix:
    """Append higher harmonics sin/cos(m * theta_node), m = 2..max_harmonic.

    The default adds exactly 16 new columns per node.  Existing columns are
    untouched; extending a node whose higher harmonics are already present is
    an error.  Extend before normalizing (appended columns get unit scale).
    """
    if not 1 <= node <= ph.n_nodes:
        raise ValueError(f"node {node} out of range")
    if max_harmonic < 2:
        raise ValueError("max_harmonic must be >= 2")
    if ph.n_samples != lib.n_rows:
        raise ValueError("phase data rows do not match library rows")
    new = _extension_descriptors(node, max_harmonic)
    present = set(lib.descriptors)
    for d in new:
        if d in present:
            raise ValueError(f"harmonic already present: {d.label()}")
    vals = _assemble(new, ph.phases)
    return LibraryMatrix(
        np.hstack([lib.values, vals]),
        lib.descriptors + tuple(new),
        np.concatenate([lib.column_scales, np.ones(len(new))]),
    )


def column_normalize(lib: LibraryMatrix) -> LibraryMatrix:
    """Rescale every column to unit Euclidean norm, recording the scales."""
    norms = np.linalg.norm(lib.values, axis=0)
    bad = np.nonzero(norms == 0)[0]
    if bad.size:
        raise ValueError(f"zero column: {lib.descriptors[bad[0]].label()}")
    return LibraryMatrix(lib.values / norms, lib.descriptors, lib.column_scales * norms)


def denormalize(lib: LibraryMatrix) -> LibraryMatrix:
    """Undo :func:`column_normalize`, restoring the plain 1/sqrt(n') scaling."""
    return LibraryMatrix(
        lib.values * lib.column_scales, lib.descriptors, np.ones(lib.n_columns)
    )


def save_library(lib: LibraryMatrix, csv_path, json_path) -> None:
    """Serialize as a CSV matrix plus a JSON descriptor list."""
    np.savetxt(csv_path, lib.values, fmt="%.17g", delimiter=",")
    meta = {
        "descriptors": [d.to_dict() for d in lib.descriptors],
        "column_scales": lib.column_scales.tolist(),
    }
    with open(json_path, "w") as fh:
        json.dump(meta, fh, indent=1)


def load_library(csv_path, json_path) -> LibraryMatrix:
    vals = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    with open(json_path) as fh:
        meta = json.load(fh)
    descs = tuple(ColumnDescriptor.from_dict(d) for d in meta["descriptors"])
    return LibraryMatrix(vals, descs, np.asarray(meta["column_scales"], dtype=float))
