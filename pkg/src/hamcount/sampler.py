"""
One acceptance/rejection trial over the Hamilton expansion.

A trial walks the columns of the scaled matrix ``C`` from left to right.  At
the level with ``r`` active rows it picks the first-column entry in row
position ``i`` of the current submatrix ``D`` with probability::

    p(i) = D(i, 1) Br(D'_i1) / Br(D)        (i = 2..r)

and rejects with the remaining probability ``p(0)``.  ``D'_i1`` moves row
``i`` to the top and drops the first row and column; the trial never copies a
submatrix and tracks the active rows in an index array instead.  At ``r = 1``
it accepts with probability ``D / Br(D)``.

An accepted trial yields its selection vector ``pi`` and, through
:func:`recover`, the Hamiltonian cycle it selected.  Every cycle ``H`` is
produced with probability ``W(H) / Br(C)``.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import Optional, Sequence

import numpy as np

from .bregman import RowSums
from .config import Settings, get_settings
from .digraph import LogMatrix
from .errors import DomainError, SamplerNumericError
from .scaling import ScaledInstance
from .types import Position, RandomStream, Vertex

__all__ = (
    "SelectionVector",
    "HamiltonianCycle",
    "TrialOutcome",
    "run_trial",
    "recover",
    "shc_trace",
    "trial_rng",
)

log = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class SelectionVector:
    """
    ``pi(k)`` is the 1-based row position picked at level ``k``; it lies in
    ``2..n-k+1`` for ``k < n`` and ``pi(n) = 1``.
    """

    pi: tuple[int, ...]

    def __post_init__(self) -> None:
        pi = tuple(int(v) for v in self.pi)
        n = len(pi)
        if n < 1:
            raise DomainError("an empty selection vector")
        if pi[-1] != 1:
            raise DomainError(f"the last entry of {pi} must be 1")
        for k, v in enumerate(pi[:-1], start=1):
            if not 2 <= v <= n - k + 1:
                raise DomainError(
                    f"pi({k}) = {v} is outside 2..{n - k + 1} in {pi}"
                )
        object.__setattr__(self, "pi", pi)

    @property
    def n(self) -> int:
        return len(self.pi)

    def __getitem__(self, k: int) -> int:
        # 1-based, as in the recovery procedure
        return self.pi[k - 1]


@dataclasses.dataclass(frozen=True)
class HamiltonianCycle:
    vertices: tuple[Vertex, ...]
    log_weight: float = 0.0

    @property
    def edges(self) -> tuple[tuple[Vertex, Vertex], ...]:
        return tuple(zip(self.vertices, self.vertices[1:]))

    def __str__(self) -> str:
        return " ".join(map(str, self.vertices))


@dataclasses.dataclass(frozen=True)
class TrialOutcome:
    accepted: bool
    levels_completed: int
    rejection_level: Optional[int] = None
    selection: Optional[SelectionVector] = None
    cycle: Optional[HamiltonianCycle] = None
    #: levels whose selection probabilities were renormalized
    clamp_events: int = 0


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """
    The counter-based random stream owned by trial ``index`` of a run.
    """
    stream = np.random.SeedSequence([seed, index])
    return np.random.Generator(np.random.Philox(stream))


def _as_selection(pi: SelectionVector | Sequence[int]) -> SelectionVector:
    if isinstance(pi, SelectionVector):
        return pi
    return SelectionVector(tuple(pi))


def recover(
    pi: SelectionVector | Sequence[int],
    a: Optional[LogMatrix] = None,
) -> HamiltonianCycle:
    """
    Maps a selection vector back to its cycle ``(1, k_1, ..., k_{n-1}, 1)`` in
    ``O(n^2)``.  The log weight is taken from ``a`` when it is given.
    """
    sel = _as_selection(pi)
    n = sel.n
    k = [0] * n
    if n >= 2:
        k[n - 1] = sel[1]
        for i in range(n - 2, 0, -1):
            cur = sel[k[i + 1]]
            for j in range(k[i + 1], 1, -1):
                if cur == sel[j - 1] - 1:
                    cur = 1
                else:
                    cur += 1
            k[i] = cur
    vertices = (1, *k[1:], 1)
    log_weight = 0.0
    if a is not None:
        log_weight = math.fsum(
            a.entries[tail - 1, head - 1]
            for tail, head in zip(vertices, vertices[1:])
        )
    return HamiltonianCycle(vertices, log_weight)


def shc_trace(
    a: LogMatrix,
    pi: SelectionVector | Sequence[int],
) -> list[Position]:
    """
    Replays the selections of ``pi`` on ``a`` and returns the positions
    ``(row, column)`` of the picked entries in the original matrix.  The
    ``k``-th position always lies in column ``k``.
    """
    sel = _as_selection(pi)
    n = a.order
    if sel.n != n:
        raise DomainError(f"a selection vector of length {sel.n} for order {n}")
    rows = list(range(1, n + 1))
    positions: list[Position] = []
    for level in range(1, n + 1):
        i = sel[level] - 1
        positions.append((rows[i], level))
        rows[i] = rows[0]
        del rows[0]
    return positions


def _clamp(p: np.ndarray | float, total: float, level: int, tolerance: float):
    if total > 1.0 + tolerance:
        raise SamplerNumericError(level, total)
    log.warning(
        "renormalized selection probabilities at level %d (sum %r)", level, total
    )
    return p / total


def run_trial(
    inst: ScaledInstance,
    rng: RandomStream,
    *,
    settings: Optional[Settings] = None,
) -> TrialOutcome:
    """
    Runs one trial on a scaled instance, consuming one uniform variate per
    level reached.
    """
    if settings is None:
        settings = get_settings()
    tolerance = settings.clamp_tolerance
    n = inst.order
    lin = inst.lin
    logc = inst.c.entries
    rows = np.arange(n)
    state = RowSums.of(lin)
    interval = settings.recompute_interval(n)
    pi: list[int] = []
    clamps = 0
    for col in range(n - 1):
        level = col + 1
        if col and col % interval == 0:
            state.refresh(lin[rows][:, col:])
        reduced, minors = state.minors(lin[rows, col])
        log_p = logc[rows[1:], col] + minors[1:] - state.log_br
        p = np.exp(log_p)
        total = float(p.sum())
        if total > 1.0:
            p = _clamp(p, total, level, tolerance)
            clamps += 1
        u = rng.random()
        i = int(np.searchsorted(np.cumsum(p), u, side="right"))
        if i >= p.shape[0]:
            return TrialOutcome(False, col, level, clamp_events=clamps)
        pos = i + 1
        pi.append(pos + 1)
        state.descend(pos, reduced, float(minors[pos]))
        rows[pos] = rows[0]
        rows = rows[1:]
    last = int(rows[0])
    p_last = math.exp(logc[last, n - 1] - state.log_br)
    if p_last > 1.0:
        p_last = _clamp(p_last, p_last, n, tolerance)
        clamps += 1
    u = rng.random()
    if u >= p_last:
        return TrialOutcome(False, n - 1, n, clamp_events=clamps)
    pi.append(1)
    selection = SelectionVector(tuple(pi))
    return TrialOutcome(
        accepted=True,
        levels_completed=n,
        selection=selection,
        cycle=recover(selection, inst.c),
        clamp_events=clamps,
    )

