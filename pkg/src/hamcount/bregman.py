"""
The generalized Bregman bound.

For a nonnegative matrix with entries in ``[0, 1]`` and row sums ``r(i)``::

    g(r)  = r + ln(r) / 2 + e - 1      (r >= 1)
          = 1 + (e - 1) r              (0 <= r <= 1)
    Br(A) = prod_i g(r(i)) / e

bounds the permanent from above.  Everything here works with ``log Br``.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import overload

import numpy as np

from .config import get_settings
from .digraph import LogMatrix
from .errors import BoundViolationError, DomainError
from .types import FloatArray

__all__ = (
    "g",
    "log_g",
    "br",
    "br_of_sums",
    "br_minor_all",
    "RowSums",
)

log = logging.getLogger(__name__)


@overload
def g(r: float) -> float:
    ...


@overload
def g(r: FloatArray) -> FloatArray:
    ...


def g(r):
    """
    The piecewise bound function, continuous at ``r = 1`` where both branches
    give ``e``.  Accepts scalars and arrays.
    """
    arr = np.asarray(r, dtype=np.float64)
    if (arr < 0).any():
        raise DomainError(f"g() is defined for r >= 0, got {r!r}")
    upper = arr + 0.5 * np.log(np.maximum(arr, 1.0)) + math.e - 1.0
    lower = 1.0 + (math.e - 1.0) * arr
    out = np.where(arr >= 1.0, upper, lower)
    if out.ndim == 0:
        return float(out)
    return out


def log_g(r):
    return np.log(g(r))


def br_of_sums(sums: FloatArray) -> float:
    """
    ``log Br`` for the given row sums.
    """
    return float(np.sum(log_g(sums) - 1.0))


def br(a: LogMatrix) -> float:
    """
    Returns ``log Br(A)``.

    Entries above one by no more than ``Settings.entry_tolerance`` are clamped
    to one; larger entries raise :exc:`BoundViolationError`.
    """
    if a.order == 0:
        raise DomainError("Br() of an empty matrix")
    tolerance = get_settings().entry_tolerance
    lin = a.to_linear()
    if (lin > 1.0 + tolerance).any():
        raise BoundViolationError(
            f"entry {lin.max()!r} exceeds 1; Br() needs entries in [0, 1]"
        )
    above = lin > 1.0
    if above.any():
        log.warning("clamped %d matrix entries to 1", int(above.sum()))
        lin = np.minimum(lin, 1.0)
    return br_of_sums(lin.sum(axis=1))


@dataclasses.dataclass(slots=True)
class RowSums:
    """
    Row sums of the active submatrix of a sampler trial together with its
    ``log Br``.  Owned and updated by a single trial.
    """

    sums: FloatArray
    log_br: float

    @classmethod
    def of(cls, lin: FloatArray) -> "RowSums":
        sums = lin.sum(axis=1)
        return cls(sums, br_of_sums(sums))

    def refresh(self, lin: FloatArray) -> None:
        """
        Recomputes the sums and ``log Br`` from scratch to shed accumulated
        rounding.
        """
        self.sums = lin.sum(axis=1)
        self.log_br = br_of_sums(self.sums)

    def reduce(self, col1: FloatArray) -> FloatArray:
        """
        Row sums with the first column removed; tiny negative results from
        rounding are clamped to zero.
        """
        reduced = self.sums - col1
        lowest = reduced.min(initial=0.0)
        if lowest < 0.0:
            if lowest < -get_settings().clamp_tolerance:
                raise BoundViolationError(
                    f"reduced row sum {lowest!r} is negative beyond the tolerance"
                )
            reduced = np.maximum(reduced, 0.0)
        return reduced

    def minors(self, col1: FloatArray) -> tuple[FloatArray, FloatArray]:
        """
        Returns the reduced row sums and ``log Br`` of every row-deleted minor.
        """
        reduced = self.reduce(col1)
        return reduced, _minor_terms(reduced)

    def descend(self, i: int, reduced: FloatArray, log_br: float) -> None:
        """
        Moves to the contracted submatrix after selecting the 0-based row
        position ``i``: row 0 takes the place of row ``i``, then row 0 is
        dropped.
        """
        reduced[i] = reduced[0]
        self.sums = reduced[1:]
        self.log_br = log_br

    def recompute(self) -> float:
        return br_of_sums(self.sums)


def _minor_terms(reduced: FloatArray) -> FloatArray:
    log_factors = log_g(reduced) - 1.0
    return float(np.sum(log_factors)) - log_factors


def br_minor_all(rs: RowSums, col1: FloatArray) -> FloatArray:
    """
    ``log Br(D_k1)`` for every row ``k`` at once, in ``O(r)``.

    Deleting the first column turns the row sums into ``r(j) - D(j, 1)``; the
    bound of the minor without row ``k`` is the shared product over all rows
    divided by the ``k``-th factor, which in log space is a subtraction.
    """
    col1 = np.asarray(col1, dtype=np.float64)
    if col1.shape != rs.sums.shape:
        raise DomainError(
            f"column of length {col1.shape[0]} does not match {rs.sums.shape[0]} rows"
        )
    return rs.minors(col1)[1]
