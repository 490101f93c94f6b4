"""
Exact permanent and Hamilton oracles for small matrices.

All oracles work on :class:`~hamcount.digraph.LogMatrix` inputs and return an
:class:`ExactValue`.  Matrices whose non-zero entries are all one (adjacency
matrices of unweighted digraphs) take an integer pathway up to
``Settings.integer_pathway_cap`` so that counts compare exactly; other inputs
are row-normalized before the floating-point evaluation and the row scales are
added back in log space.

The order caps come from :func:`hamcount.config.get_settings`:

* :func:`permanent_ryser` -- ``per_oracle_cap`` (``PER_ORACLE_CAP``)
* :func:`hamilton_dp` -- ``ham_oracle_cap`` (``HAM_ORACLE_CAP``)
* enumeration and expansion oracles -- ``enum_cap``
* :func:`count_hc_undirected` -- ``undirected_cap``
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
import logging
import math
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .config import HAM_ORACLE_CAP_ENV, PER_ORACLE_CAP_ENV, get_settings
from .digraph import ZERO, LogMatrix, UndirectedGraph
from .errors import DomainError, OracleCapError

__all__ = (
    "ExactValue",
    "permanent_ryser",
    "permanent_enum",
    "permanent_expand",
    "hamilton_enum",
    "hamilton_dp",
    "hamilton_expand",
    "cycle_profile",
    "count_hc_undirected",
    "enumerate_cycles",
)

log = logging.getLogger(__name__)

# subsets handled per vectorized block of the Ryser sum
_RYSER_BLOCK_BITS = 14


@dataclasses.dataclass(frozen=True)
class ExactValue:
    """
    A nonnegative exact result kept as its natural logarithm.  ``count`` is set
    when the value was obtained on the integer pathway.
    """

    log_value: float
    count: Optional[int] = None

    @classmethod
    def from_count(cls, count: int) -> "ExactValue":
        return cls(math.log(count) if count > 0 else ZERO, int(count))

    @classmethod
    def zero(cls) -> "ExactValue":
        return cls(ZERO)

    @property
    def is_zero(self) -> bool:
        return self.log_value == ZERO

    @property
    def value(self) -> float:
        """
        The linear value; ``inf`` when it does not fit a double.
        """
        if self.count is not None:
            return float(self.count)
        try:
            return math.exp(self.log_value)
        except OverflowError:
            return math.inf

    def __float__(self) -> float:
        return self.value

    def isclose(self, other: "ExactValue", rel_tol: float = 1e-9) -> bool:
        if self.count is not None and other.count is not None:
            return self.count == other.count
        if self.is_zero or other.is_zero:
            return self.is_zero and other.is_zero
        return abs(self.log_value - other.log_value) <= rel_tol

    def format(self) -> str:
        """
        The integer form for counts, otherwise the decimal value or ``overflow``.
        """
        if self.count is not None:
            return str(self.count)
        value = self.value
        return "overflow" if math.isinf(value) else repr(value)


def _check_cap(
    oracle: str, order: int, cap: int, env_var: Optional[str] = None
) -> None:
    if order > cap:
        raise OracleCapError(oracle, order, cap, env_var)


def _use_integers(a: LogMatrix) -> bool:
    return a.is_binary and a.order <= get_settings().integer_pathway_cap


@functools.lru_cache(maxsize=None)
def _permutations(n: int) -> np.ndarray:
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    perms = perms.reshape(-1, n)
    perms.setflags(write=False)
    return perms


def _from_terms(log_terms: np.ndarray, integral: bool) -> ExactValue:
    if integral:
        return ExactValue.from_count(int(np.isfinite(log_terms).sum()))
    if log_terms.size == 0 or not np.isfinite(log_terms).any():
        return ExactValue.zero()
    return ExactValue(float(logsumexp(log_terms)))


def _permanent_counts(mask: np.ndarray) -> int:
    # dp[S]: number of ways to match the first |S| rows onto the column set S
    n = mask.shape[0]
    dp = np.zeros(1 << n, dtype=np.int64)
    dp[0] = 1
    for k in range(n):
        nxt = np.zeros_like(dp)
        for j in np.flatnonzero(mask[k]):
            shape = (1 << (n - 1 - j), 2, 1 << j)
            nxt.reshape(shape)[:, 1, :] += dp.reshape(shape)[:, 0, :]
        dp = nxt
    return int(dp[-1])


def _ryser_float(lin: np.ndarray) -> float:
    n = lin.shape[0]
    low = min(n, _RYSER_BLOCK_BITS)
    # row sums and sign for every subset of the low columns, bit j <-> column j
    low_sums = np.zeros((1, n))
    low_signs = np.ones(1)
    for j in range(low):
        low_sums = np.vstack([low_sums, low_sums + lin[:, j]])
        low_signs = np.concatenate([low_signs, -low_signs])
    high_cols = lin[:, low:]
    base = np.zeros(n)
    high_sign = 1.0
    partials = []
    # Gray-code walk over the high columns, one bit flip per block
    for k in range(1 << (n - low)):
        if k:
            j = (k & -k).bit_length() - 1
            if (k ^ (k >> 1)) >> j & 1:
                base = base + high_cols[:, j]
            else:
                base = base - high_cols[:, j]
            high_sign = -high_sign
        products = np.prod(low_sums + base, axis=1)
        partials.append(high_sign * float(np.dot(low_signs, products)))
    total = math.fsum(partials)
    return -total if n % 2 else total


def permanent_ryser(a: LogMatrix) -> ExactValue:
    """
    The permanent by Ryser's inclusion-exclusion formula over column subsets,
    walked in Gray-code order.

    0-1 inputs up to ``integer_pathway_cap`` are counted exactly with a subset
    dynamic program instead.
    """
    settings = get_settings()
    n = a.order
    _check_cap("permanent_ryser", n, settings.per_oracle_cap, PER_ORACLE_CAP_ENV)
    if n == 0:
        return ExactValue.from_count(1)
    if _use_integers(a):
        return ExactValue.from_count(_permanent_counts(a.nonzero))
    lin, scales = a.row_normalized()
    if not np.isfinite(scales).all():
        return ExactValue.zero()
    value = _ryser_float(lin)
    if value <= 0:
        return ExactValue.zero()
    return ExactValue(math.log(value) + math.fsum(scales))


def permanent_enum(a: LogMatrix) -> ExactValue:
    """
    The permanent by enumerating all permutations.  The empty matrix has
    permanent one.
    """
    n = a.order
    _check_cap("permanent_enum", n, get_settings().enum_cap)
    if n == 0:
        return ExactValue.from_count(1)
    perms = _permutations(n)
    terms = a.entries[np.arange(n), perms].sum(axis=1)
    return _from_terms(terms, a.is_binary)


def permanent_expand(a: LogMatrix) -> ExactValue:
    """
    The permanent by Laplace expansion along the first column::

        per(A) = sum_i A(i, 1) * per(A_i1)
    """
    _check_cap("permanent_expand", a.order, get_settings().enum_cap)
    result = ExactValue(_permanent_expand(a))
    if a.is_binary:
        return ExactValue.from_count(0 if result.is_zero else round(result.value))
    return result


def _permanent_expand(a: LogMatrix) -> float:
    if a.order == 0:
        return 0.0
    terms = [
        a.entries[i - 1, 0] + _permanent_expand(a.minor(i, 1))
        for i in range(1, a.order + 1)
        if a.entries[i - 1, 0] != ZERO
    ]
    return float(logsumexp(terms)) if terms else ZERO


def _closed_walks(n: int) -> np.ndarray:
    # rows are 0-based vertex sequences (0, k_1, ..., k_{n-1}, 0)
    inner = _permutations(n - 1) + 1
    walks = np.zeros((inner.shape[0], n + 1), dtype=np.intp)
    walks[:, 1:-1] = inner
    return walks


def _cycle_log_terms(a: LogMatrix) -> np.ndarray:
    walks = _closed_walks(a.order)
    return a.entries[walks[:, :-1], walks[:, 1:]].sum(axis=1)


def _require_order(oracle: str, a: LogMatrix) -> None:
    if a.order < 1:
        raise DomainError(f"{oracle}: the Hamilton is undefined for an empty matrix")


def hamilton_enum(a: LogMatrix) -> ExactValue:
    """
    The Hamilton by enumerating the permutations ``(k_1, ..., k_{n-1})`` of
    ``2..n``::

        ham(A) = sum A(1, k_1) A(k_1, k_2) ... A(k_{n-1}, 1)

    An order-1 matrix has ``ham(A) = A(1, 1)``.
    """
    _require_order("hamilton_enum", a)
    n = a.order
    _check_cap("hamilton_enum", n, get_settings().enum_cap)
    if n == 1:
        return _from_terms(a.entries[0], a.is_binary)
    return _from_terms(_cycle_log_terms(a), a.is_binary)


def _popcount_layers(m: int) -> list[np.ndarray]:
    masks = np.arange(1 << m, dtype=np.int64)
    counts = np.zeros_like(masks)
    for b in range(m):
        counts += (masks >> b) & 1
    order = np.argsort(counts, kind="stable")
    bounds = np.cumsum(np.bincount(counts, minlength=m + 1))
    return np.split(masks[order], bounds[:-1])


def _hamilton_paths(weights: np.ndarray) -> np.ndarray:
    """
    Runs the subset recurrence on an order-n weight matrix and returns the
    closing sum ``sum_w dp[full, w] * weights[w, 0]`` as a 0-d array.
    """
    n = weights.shape[0]
    m = n - 1
    inner = weights[1:, 1:]
    dp = np.zeros((1 << m, m), dtype=weights.dtype)
    dp[1 << np.arange(m), np.arange(m)] = weights[0, 1:]
    for layer in _popcount_layers(m)[1:m]:
        extended = dp[layer] @ inner
        for w in range(m):
            missing = ((layer >> w) & 1) == 0
            dp[layer[missing] | (1 << w), w] = extended[missing, w]
    return dp[-1] @ weights[1:, 0]


def hamilton_dp(a: LogMatrix) -> ExactValue:
    """
    The Hamilton by dynamic programming over ``(visited subset of 2..n,
    endpoint)`` states anchored at vertex 1, closing the paths through the
    first column.
    """
    _require_order("hamilton_dp", a)
    settings = get_settings()
    n = a.order
    _check_cap("hamilton_dp", n, settings.ham_oracle_cap, HAM_ORACLE_CAP_ENV)
    if n == 1:
        return hamilton_enum(a)
    if _use_integers(a):
        return ExactValue.from_count(int(_hamilton_paths(a.nonzero.astype(np.int64))))
    lin, scales = a.row_normalized()
    if not np.isfinite(scales).all():
        return ExactValue.zero()
    value = float(_hamilton_paths(lin))
    if value <= 0:
        return ExactValue.zero()
    return ExactValue(math.log(value) + math.fsum(scales))


def hamilton_expand(a: LogMatrix) -> ExactValue:
    """
    The Hamilton by expansion along the first column::

        ham(A) = sum_{i=2..n} A(i, 1) * ham(A'_i1)

    where ``A'_i1`` swaps row ``i`` into the first row and then drops the first
    row and column (see :meth:`LogMatrix.contract`).
    """
    _require_order("hamilton_expand", a)
    _check_cap("hamilton_expand", a.order, get_settings().enum_cap)
    result = ExactValue(_hamilton_expand(a))
    if a.is_binary:
        return ExactValue.from_count(0 if result.is_zero else round(result.value))
    return result


def _hamilton_expand(a: LogMatrix) -> float:
    if a.order == 1:
        return float(a.entries[0, 0])
    terms = [
        a.entries[i - 1, 0] + _hamilton_expand(a.contract(i))
        for i in range(2, a.order + 1)
        if a.entries[i - 1, 0] != ZERO
    ]
    return float(logsumexp(terms)) if terms else ZERO


def _cycle_counts(perms: np.ndarray) -> np.ndarray:
    rows, n = perms.shape
    index = np.arange(rows)
    counts = np.zeros(rows, dtype=np.intp)
    # i closes a cycle of its own iff it is the smallest element on it
    for i in range(n):
        x = np.full(rows, i)
        smallest = np.ones(rows, dtype=bool)
        for _ in range(n - 1):
            x = perms[index, x]
            smallest &= x >= i
        counts += smallest
    return counts


def cycle_profile(a: LogMatrix) -> tuple[ExactValue, ...]:
    """
    Splits the permanent by cycle structure: entry ``k`` is the total weight of
    the 1-factors made of exactly ``k`` disjoint cycles, for ``k = 0..n``.

    Entry 1 is the Hamilton when the diagonal is zero, and the entries sum to
    the permanent.
    """
    n = a.order
    _check_cap("cycle_profile", n, get_settings().enum_cap)
    if n == 0:
        return (ExactValue.from_count(1),)
    perms = _permutations(n)
    terms = a.entries[np.arange(n), perms].sum(axis=1)
    counts = _cycle_counts(perms)
    integral = a.is_binary
    return tuple(_from_terms(terms[counts == k], integral) for k in range(n + 1))


def _count_by_enumeration(g: UndirectedGraph) -> int:
    n = g.n
    adj = np.zeros((n, n), dtype=bool)
    for a, b in g.edges:
        adj[a - 1, b - 1] = adj[b - 1, a - 1] = True
    walks = _closed_walks(n)
    # one orientation per cycle: the neighbor after vertex 1 is the smaller one
    walks = walks[walks[:, 1] < walks[:, -2]]
    return int(adj[walks[:, :-1], walks[:, 1:]].all(axis=1).sum())


def _count_by_paths(g: UndirectedGraph) -> int:
    n = g.n
    nbrs = g.neighbor_masks
    full = (1 << n) - 1
    # paths from vertex 1 (bit 0) keyed by (visited set, endpoint)
    paths: dict[tuple[int, int], int] = {
        (1 | 1 << v, v): 1 for v in range(1, n) if nbrs[0] >> v & 1
    }
    for _ in range(n - 2):
        grown: dict[tuple[int, int], int] = {}
        for (visited, end), ways in paths.items():
            free = nbrs[end] & ~visited
            while free:
                bit = free & -free
                free ^= bit
                key = (visited | bit, bit.bit_length() - 1)
                grown[key] = grown.get(key, 0) + ways
        paths = grown
    closing = sum(
        ways
        for (visited, end), ways in paths.items()
        if visited == full and nbrs[end] & 1
    )
    return closing // 2


def count_hc_undirected(g: UndirectedGraph) -> int:
    """
    The number of Hamiltonian cycles of an undirected graph, counting a cycle
    and its reversal once.
    """
    settings = get_settings()
    _check_cap("count_hc_undirected", g.n, settings.undirected_cap)
    if g.n < 3:
        return 0
    if g.n <= settings.enum_cap:
        return _count_by_enumeration(g)
    return _count_by_paths(g)


def enumerate_cycles(a: LogMatrix) -> list[tuple[tuple[int, ...], float]]:
    """
    Lists every Hamiltonian cycle ``(1, k_1, ..., k_{n-1}, 1)`` of non-zero
    weight together with its log weight, in lexicographic order.
    """
    _require_order("enumerate_cycles", a)
    n = a.order
    _check_cap("enumerate_cycles", n, get_settings().enum_cap)
    if n == 1:
        if a.entries[0, 0] == ZERO:
            return []
        return [((1, 1), float(a.entries[0, 0]))]
    walks = _closed_walks(n)
    terms = a.entries[walks[:, :-1], walks[:, 1:]].sum(axis=1)
    keep = np.flatnonzero(np.isfinite(terms))
    return [(tuple(int(v) + 1 for v in walks[i]), float(terms[i])) for i in keep]
