"""Benchmark directed networks and recovery scoring.

Adjacency convention: ``adjacency[i, k] = 1`` means node ``i+1`` is influenced
by node ``k+1`` (rows are targets).  Storage is 0-based; every textual
interface (edge lists, labels, reports) is 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Network",
    "RecoveryScore",
    "make_star",
    "make_twin_stars",
    "make_ring",
    "compare",
    "to_edgelist",
    "from_edgelist",
    "save_edgelist",
    "load_edgelist",
]


@dataclass(frozen=True)
class Network:
    """Binary directed network without self-edges."""

    adjacency: np.ndarray
    name: str = ""

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=int)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if np.trace(a) != 0:
            raise ValueError("self-edges are not allowed")
        object.__setattr__(self, "adjacency", a)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum())

    def edges(self) -> list[tuple[int, int]]:
        """Edge list as (target, source) pairs, 1-based, row-major order."""
        return [(int(i) + 1, int(k) + 1) for i, k in zip(*np.nonzero(self.adjacency))]

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.adjacency.shape == other.adjacency.shape and bool(
            (self.adjacency == other.adjacency).all()
        )


@dataclass(frozen=True)
class RecoveryScore:
    """False-positive / false-negative edge counts against a ground truth."""

    false_positives: int
    false_negatives: int

    @property
    def total(self) -> int:
        return self.false_positives + self.false_negatives

    @property
    def perfect(self) -> bool:
        return self.total == 0


def make_star(n: int) -> Network:
    """Directed star: node 1 drives nodes 2..n, nothing drives node 1."""
    if n < 2:
        raise ValueError("star needs at least 2 nodes")
    a = np.zeros((n, n), dtype=int)
    a[1:, 0] = 1
    return Network(a, name=f"star({n})")


def make_twin_stars(leaves_a: int, leaves_b: int, b_drives_a: bool = False) -> Network:
    """Two stars joined by a single hub-to-hub link.

    Node 1 is hub A, node 2 is hub B.  Nodes 3..2+leaves_a are A's leaves,
    the remaining nodes are B's leaves.  By default the joining link is
    A driving B; pass ``b_drives_a=True`` to flip it.  The wiring in the
    source material is ambiguous, hence the flag.
    """
    if leaves_a < 1 or leaves_b < 1:
        raise ValueError("each hub needs at least one leaf")
    n = 2 + leaves_a + leaves_b
    a = np.zeros((n, n), dtype=int)
    for leaf in range(2, 2 + leaves_a):
        a[leaf, 0] = 1
    for leaf in range(2 + leaves_a, n):
        a[leaf, 1] = 1
    if b_drives_a:
        a[0, 1] = 1
    else:
        a[1, 0] = 1
    return Network(a, name=f"twin_stars({leaves_a},{leaves_b})")


def make_ring(n: int) -> Network:
    """Directed ring: node i+1 driven by node i, node 1 driven by node n."""
    if n < 3:
        raise ValueError("ring needs at least 3 nodes")
    a = np.zeros((n, n), dtype=int)
    for i in range(n - 1):
        a[i + 1, i] = 1
    a[0, n - 1] = 1
    return Network(a, name=f"ring({n})")


def compare(truth: Network, recovered: Network) -> RecoveryScore:
    """Count spurious (#FP) and missed (#FN) edges of `recovered` vs `truth`."""
    if truth.n_nodes != recovered.n_nodes:
        raise ValueError(
            f"node count mismatch: truth has {truth.n_nodes}, recovered has {recovered.n_nodes}"
        )
    t, r = truth.adjacency, recovered.adjacency
    fp = int(((r == 1) & (t == 0)).sum())
    fn = int(((t == 1) & (r == 0)).sum())
    return RecoveryScore(fp, fn)


def to_edgelist(net: Network) -> str:
    """Serialize to the edge-list text format: `nodes N` header, then `i k` lines (i<-k)."""
    lines = [f"nodes {net.n_nodes}"]
    lines += [f"{i} {k}" for i, k in net.edges()]
    return "\n".join(lines) + "\n"


def from_edgelist(text: str) -> Network:
    """Parse the edge-list text format produced by :func:`to_edgelist`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("nodes"):
        raise ValueError("edge list must start with a 'nodes N' header")
    n = int(lines[0].split()[1])
    a = np.zeros((n, n), dtype=int)
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"malformed edge line: {ln!r}")
        i, k = int(parts[0]), int(parts[1])
        if not (1 <= i <= n and 1 <= k <= n):
            raise ValueError(f"edge {i}<-{k} out of range for {n} nodes")
        a[i - 1, k - 1] = 1
    return Network(a)


def save_edgelist(net: Network, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_edgelist(net))


def load_edgelist(path) -> Network:
    with open(path) as fh:
        return from_edgelist(fh.read())
