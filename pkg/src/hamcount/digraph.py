"""
The graph and matrix data model.

Vertices are numbered ``1..n`` in every public signature and file format; the
0-based indices used by numpy stay inside this package.  Matrices are kept as
:class:`LogMatrix` instances holding natural logarithms of the entries, with
``-inf`` standing for a structural zero.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, InvalidGraphError
from .types import FloatArray, Vertex

__all__ = (
    "Edge",
    "WeightedDigraph",
    "UndirectedGraph",
    "LogMatrix",
    "DensityProfile",
    "adjacency_matrix",
    "density",
    "gen_dense_digraph",
    "symmetric_lift",
    "complete_digraph",
    "digraph_from_matrix",
    "validate_cycle",
    "ZERO",
)

log = logging.getLogger(__name__)

#: The structural-zero marker stored in :class:`LogMatrix` entries.
ZERO = -math.inf


class Edge(NamedTuple):
    tail: Vertex
    head: Vertex
    weight: float = 1.0


@dataclasses.dataclass(frozen=True)
class WeightedDigraph:
    """
    A simple digraph on vertices ``1..n`` with positively weighted arcs.

    Arcs are normalized into a tuple sorted by ``(tail, head)`` on construction.
    """

    n: int
    edges: tuple[Edge, ...] = ()

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidGraphError(
                f"a digraph needs at least one vertex, got {self.n}"
            )
        normalized = []
        seen = set()
        for raw in self.edges:
            e = Edge(*raw)
            tail, head, weight = int(e.tail), int(e.head), float(e.weight)
            if not (1 <= tail <= self.n and 1 <= head <= self.n):
                raise InvalidGraphError(
                    f"arc ({tail}, {head}) is out of range 1..{self.n}"
                )
            if tail == head:
                raise InvalidGraphError(f"self-loop at vertex {tail}")
            if not weight > 0 or not math.isfinite(weight):
                raise InvalidGraphError(
                    f"arc ({tail}, {head}) has a non-positive or non-finite"
                    f" weight {weight!r}"
                )
            if (tail, head) in seen:
                raise InvalidGraphError(f"duplicate arc ({tail}, {head})")
            seen.add((tail, head))
            normalized.append(Edge(tail, head, weight))
        normalized.sort(key=lambda e: (e.tail, e.head))
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def m(self) -> int:
        return len(self.edges)

    @functools.cached_property
    def weights(self) -> dict[tuple[Vertex, Vertex], float]:
        return {(e.tail, e.head): e.weight for e in self.edges}

    def has_edge(self, tail: Vertex, head: Vertex) -> bool:
        return (tail, head) in self.weights

    @property
    def is_unweighted(self) -> bool:
        return all(e.weight == 1.0 for e in self.edges)


@dataclasses.dataclass(frozen=True)
class UndirectedGraph:
    """
    A simple undirected graph on vertices ``1..n``; each edge is stored once as
    an ordered pair ``(low, high)``.
    """

    n: int
    edges: tuple[tuple[Vertex, Vertex], ...] = ()

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidGraphError(f"a graph needs at least one vertex, got {self.n}")
        pairs = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if not (1 <= a <= self.n and 1 <= b <= self.n):
                raise InvalidGraphError(
                    f"edge {{{a}, {b}}} is out of range 1..{self.n}"
                )
            if a == b:
                raise InvalidGraphError(f"self-loop at vertex {a}")
            pair = (min(a, b), max(a, b))
            if pair in pairs:
                raise InvalidGraphError(f"duplicate edge {{{a}, {b}}}")
            pairs.add(pair)
        object.__setattr__(self, "edges", tuple(sorted(pairs)))

    @property
    def m(self) -> int:
        return len(self.edges)

    @functools.cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        # bit (v - 1) of masks[u - 1] is set iff {u, v} is an edge
        masks = [0] * self.n
        for a, b in self.edges:
            masks[a - 1] |= 1 << (b - 1)
            masks[b - 1] |= 1 << (a - 1)
        return tuple(masks)


@dataclasses.dataclass(frozen=True, eq=False)
class LogMatrix:
    """
    A dense square matrix of natural-log entries; :data:`ZERO` (``-inf``) marks
    a structural zero.  The wrapped array is read-only.

    Order 0 is accepted only so that the empty-matrix conventions of the exact
    oracles can be expressed.
    """

    entries: FloatArray

    def __post_init__(self) -> None:
        arr = np.array(self.entries, dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError(f"a square matrix is required, got shape {arr.shape}")
        if np.isnan(arr).any() or np.isposinf(arr).any():
            raise DomainError("matrix entries must be finite logarithms or -inf")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_linear(cls, values: Sequence[Sequence[float]] | FloatArray) -> "LogMatrix":
        lin = np.asarray(values, dtype=np.float64)
        if (lin < 0).any():
            raise DomainError("negative entries are not supported")
        with np.errstate(divide="ignore"):
            return cls(np.log(lin))

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    @property
    def nonzero(self) -> np.ndarray:
        return np.isfinite(self.entries)

    @property
    def is_binary(self) -> bool:
        """
        True if every non-zero entry equals one.
        """
        finite = self.entries[self.nonzero]
        return bool(np.all(finite == 0.0))

    def to_linear(self) -> FloatArray:
        return np.exp(self.entries)

    def row_normalized(self) -> tuple[FloatArray, FloatArray]:
        """
        Returns ``(lin, log_scales)`` where each row of ``lin`` is the linear row
        divided by its maximum, so entries lie in ``[0, 1]``.  All-zero rows keep
        zeros and get the scale ``-inf``.
        """
        if self.order == 0:
            return np.zeros((0, 0)), np.zeros(0)
        scales = self.entries.max(axis=1)
        safe = np.where(np.isfinite(scales), scales, 0.0)
        lin = np.exp(self.entries - safe[:, None])
        return lin, scales

    def minor(self, i: int, j: int) -> "LogMatrix":
        """
        ``A_{ij}``: the matrix without row ``i`` and column ``j`` (1-based).
        """
        self._check_index(i)
        self._check_index(j)
        arr = np.delete(np.delete(self.entries, i - 1, axis=0), j - 1, axis=1)
        return LogMatrix(arr)

    def contract(self, i: int) -> "LogMatrix":
        """
        ``A'_{i1}``: swap row ``i`` with the first row, then delete the first row
        and the first column (1-based ``i``).
        """
        self._check_index(i)
        arr = np.array(self.entries)
        arr[[0, i - 1]] = arr[[i - 1, 0]]
        return LogMatrix(arr[1:, 1:])

    def _check_index(self, i: int) -> None:
        if not 1 <= i <= self.order:
            raise DomainError(f"index {i} is out of range 1..{self.order}")

    def __repr__(self) -> str:
        return f"<LogMatrix order={self.order} nonzero={int(self.nonzero.sum())}>"


@dataclasses.dataclass(frozen=True)
class DensityProfile:
    indegree: tuple[int, ...]
    outdegree: tuple[int, ...]

    @property
    def per_vertex(self) -> tuple[int, ...]:
        return tuple(min(a, b) for a, b in zip(self.indegree, self.outdegree))

    @property
    def delta(self) -> int:
        return min(self.per_vertex)

    @property
    def n(self) -> int:
        return len(self.indegree)

    @property
    def alpha(self) -> float:
        return self.delta / self.n


def adjacency_matrix(g: WeightedDigraph) -> LogMatrix:
    arr = np.full((g.n, g.n), ZERO)
    for e in g.edges:
        arr[e.tail - 1, e.head - 1] = math.log(e.weight)
    return LogMatrix(arr)


def density(g: WeightedDigraph) -> DensityProfile:
    indeg = [0] * g.n
    outdeg = [0] * g.n
    for e in g.edges:
        outdeg[e.tail - 1] += 1
        indeg[e.head - 1] += 1
    return DensityProfile(tuple(indeg), tuple(outdeg))


def gen_dense_digraph(n: int, alpha: float, seed: int) -> WeightedDigraph:
    """
    Generates an unweighted digraph whose every vertex keeps both its indegree
    and outdegree at or above ``ceil(alpha * n)``.

    The generator starts from the complete digraph and visits all arcs in a
    seeded random order, deleting an arc whenever both of its endpoints stay
    above the degree floor afterwards.
    """
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    # tolerance so that e.g. 0.7 * 10 does not round up to 8
    floor = math.ceil(alpha * n - 1e-9)
    if floor > n - 1:
        raise DomainError(
            f"alpha={alpha} requires degree {floor} > n - 1 = {n - 1}"
        )
    rng = np.random.default_rng(seed)
    arcs = [(u, v) for u in range(n) for v in range(n) if u != v]
    outdeg = [n - 1] * n
    indeg = [n - 1] * n
    keep = [True] * len(arcs)
    for idx in rng.permutation(len(arcs)):
        u, v = arcs[idx]
        if outdeg[u] > floor and indeg[v] > floor:
            keep[idx] = False
            outdeg[u] -= 1
            indeg[v] -= 1
    edges = tuple(Edge(u + 1, v + 1, 1.0) for (u, v), k in zip(arcs, keep) if k)
    log.debug(
        "generated n=%d alpha=%s seed=%d with %d arcs", n, alpha, seed, len(edges)
    )
    return WeightedDigraph(n, edges)


def complete_digraph(n: int) -> WeightedDigraph:
    """
    The complete unweighted digraph on ``n`` vertices.
    """
    arcs = (Edge(u, v) for u in range(1, n + 1) for v in range(1, n + 1) if u != v)
    return WeightedDigraph(n, tuple(arcs))


def symmetric_lift(g: UndirectedGraph) -> WeightedDigraph:
    """
    Replaces every undirected edge with the two opposite arcs of weight one.
    """
    if g.n < 3:
        raise DomainError(f"the symmetric lift needs n >= 3, got {g.n}")
    edges: list[Edge] = []
    for a, b in g.edges:
        edges.append(Edge(a, b, 1.0))
        edges.append(Edge(b, a, 1.0))
    return WeightedDigraph(g.n, tuple(edges))


def digraph_from_matrix(a: LogMatrix) -> WeightedDigraph:
    if a.order < 1:
        raise InvalidGraphError("an empty matrix has no digraph")
    if a.nonzero.diagonal().any():
        raise InvalidGraphError("non-zero diagonal entries would be self-loops")
    rows, cols = np.nonzero(a.nonzero)
    edges = [
        Edge(int(r) + 1, int(c) + 1, float(math.exp(a.entries[r, c])))
        for r, c in zip(rows, cols)
    ]
    return WeightedDigraph(a.order, tuple(edges))


def validate_cycle(g: WeightedDigraph, vertices: Iterable[Vertex]) -> float:
    """
    Checks that ``vertices`` is ``(1, k_1, ..., k_{n-1}, 1)`` with the interior a
    permutation of ``2..n`` and every consecutive pair an arc of ``g``.

    Returns the log weight of the cycle.
    """
    seq = [int(v) for v in vertices]
    n = g.n
    if len(seq) != n + 1 or seq[0] != 1 or seq[-1] != 1:
        raise InvalidGraphError(
            f"{seq} is not a closed walk from vertex 1 of length {n}"
        )
    if sorted(seq[1:-1]) != list(range(2, n + 1)):
        raise InvalidGraphError(f"{seq} does not visit every vertex exactly once")
    total = 0.0
    weights = g.weights
    for tail, head in zip(seq, seq[1:]):
        w = weights.get((tail, head))
        if w is None:
            raise InvalidGraphError(f"({tail}, {head}) is not an arc of the digraph")
        total += math.log(w)
    return total
