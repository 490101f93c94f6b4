"""
Executes sampler trials in chunks and reduces them deterministically.

Trial ``i`` of a run always draws from :func:`~hamcount.sampler.trial_rng`
``(seed, i)``, chunks always cover the same consecutive index ranges, and the
reduction walks the trials in index order.  Counts therefore do not depend on
how many workers executed the chunks.

.. code-block:: python3

   async with TrialRunner(instance, seed=7, threads=4) as runner:
       tally = await runner.run(max_trials=10_000, target=500)
"""

from __future__ import annotations

import asyncio
import dataclasses
import functools
import itertools
import logging
from concurrent.futures import Executor, ProcessPoolExecutor
from contextvars import ContextVar
from typing import Callable, Optional

from .config import Settings, current_settings, get_settings, resetting
from .errors import DomainError, TrialGroupError
from .sampler import TrialOutcome, run_trial, trial_rng
from .scaling import ScaledInstance

__all__ = (
    "TrialGroup",
    "current_trialgroup",
    "ChunkSummary",
    "TrialTally",
    "TrialRunner",
    "run_chunk",
)

log = logging.getLogger(__name__)

current_trialgroup: ContextVar["TrialGroup"] = ContextVar("current_trialgroup")


class TrialGroup(asyncio.TaskGroup):
    """
    A task group for the chunks of one wave of trials.  It publishes itself in
    :data:`current_trialgroup`, counts the chunks spawned in it and reports
    failures as :exc:`TrialGroupError`.

    ``span`` is the ``(start, stop)`` trial-index range the group covers; it
    names the group when no explicit name is given.
    """

    def __init__(self, *, name=None, span: Optional[tuple[int, int]] = None):
        super().__init__()
        self.span = span
        self.chunk_count = 0
        if name is not None:
            self._name = str(name)
        elif span is not None:
            self._name = f"trials[{span[0]}:{span[1]}]"
        else:
            self._name = f"trials-{_name_counter()}"

    def get_name(self):
        return self._name

    def create_task(self, coro, *, name=None, context=None):
        self.chunk_count += 1
        if name is None:
            name = f"{self._name}#{self.chunk_count}"
        return super().create_task(coro, name=name, context=context)

    async def __aenter__(self):
        self._current_trialgroup_token = current_trialgroup.set(self)
        return await super().__aenter__()

    async def __aexit__(self, et, exc, tb):
        try:
            return await super().__aexit__(et, exc, tb)
        except BaseExceptionGroup as eg:
            raise TrialGroupError(
                f"{self._name}: {len(eg.exceptions)} of {self.chunk_count} "
                "chunk(s) failed",
                eg.exceptions,
            ) from None
        finally:
            current_trialgroup.reset(self._current_trialgroup_token)


_name_counter = itertools.count(1).__next__


@dataclasses.dataclass(frozen=True)
class ChunkSummary:
    """
    The accepted trials and the clamp events of the index range
    ``[start, stop)``.  ``outcomes`` parallels ``accepted`` when the chunk
    was asked to keep them and is empty otherwise.
    """

    start: int
    stop: int
    accepted: tuple[int, ...]
    outcomes: tuple[TrialOutcome, ...]
    clamps: tuple[tuple[int, int], ...]


def run_chunk(
    inst: ScaledInstance,
    seed: int,
    start: int,
    stop: int,
    settings: Settings,
    keep_outcomes: bool = False,
) -> ChunkSummary:
    """
    Runs trials ``start..stop-1``.  This is the unit shipped to executors, so
    the settings travel with it instead of through the context.
    """
    accepted = []
    outcomes = []
    clamps = []
    with resetting(current_settings, settings):
        for index in range(start, stop):
            outcome = run_trial(inst, trial_rng(seed, index), settings=settings)
            if outcome.accepted:
                accepted.append(index)
                if keep_outcomes:
                    outcomes.append(outcome)
            if outcome.clamp_events:
                clamps.append((index, outcome.clamp_events))
    return ChunkSummary(start, stop, tuple(accepted), tuple(outcomes), tuple(clamps))


@dataclasses.dataclass
class TrialTally:
    #: trials consumed, including the one that reached the target
    trials: int = 0
    acceptances: int = 0
    #: accepted outcomes in index order; filled only with ``keep_outcomes``
    accepted: list[TrialOutcome] = dataclasses.field(default_factory=list)
    #: accepted trials that passed the counting predicate
    counted: int = 0
    clamp_events: int = 0
    stopped_early: bool = False


class TrialRunner:
    """
    Runs the trials of one scaled instance.

    ``threads <= 1`` keeps the chunks on the loop's default executor;
    larger values start a process pool of that size for the lifetime of the
    ``async with`` block.
    """

    def __init__(
        self,
        inst: ScaledInstance,
        seed: int,
        *,
        threads: int = 1,
        settings: Optional[Settings] = None,
        name: Optional[str] = None,
    ) -> None:
        if threads < 1:
            raise DomainError(f"threads must be positive, got {threads}")
        self.inst = inst
        self.seed = seed
        self.threads = threads
        self.settings = settings if settings is not None else get_settings()
        self.chunk_size = max(1, self.settings.chunk_size)
        self.name = name
        self._executor: Optional[Executor] = None

    async def __aenter__(self) -> "TrialRunner":
        if self.threads > 1:
            self._executor = ProcessPoolExecutor(max_workers=self.threads)
        return self

    async def __aexit__(self, *exc_info) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True, cancel_futures=True)
            self._executor = None

    async def _run_chunk(
        self, start: int, stop: int, keep_outcomes: bool
    ) -> ChunkSummary:
        loop = asyncio.get_running_loop()
        log.debug("dispatching trials %d..%d", start, stop - 1)
        return await loop.run_in_executor(
            self._executor,
            functools.partial(
                run_chunk,
                self.inst,
                self.seed,
                start,
                stop,
                self.settings,
                keep_outcomes,
            ),
        )

    async def run_wave(
        self, start: int, stop: int, *, keep_outcomes: bool = False
    ) -> list[ChunkSummary]:
        """
        Runs the trials ``start..stop-1`` concurrently, chunk by chunk, and
        returns the chunk summaries in index order.
        """
        bounds = range(start, stop, self.chunk_size)
        async with TrialGroup(name=self.name, span=(start, stop)) as tg:
            tasks = [
                tg.create_task(
                    self._run_chunk(
                        lo, min(lo + self.chunk_size, stop), keep_outcomes
                    )
                )
                for lo in bounds
            ]
        return [t.result() for t in tasks]

    async def run(
        self,
        max_trials: int,
        *,
        target: Optional[int] = None,
        counts: Optional[Callable[[TrialOutcome], bool]] = None,
        keep_outcomes: bool = False,
    ) -> TrialTally:
        """
        Runs trials until ``target`` accepted trials passing ``counts`` have
        been seen, or until ``max_trials`` trials have run.  Without a target
        exactly ``max_trials`` trials run.

        Accepted outcomes are collected in :attr:`TrialTally.accepted` only
        with ``keep_outcomes``; otherwise the tally holds counters alone.
        """
        if max_trials < 0:
            raise DomainError(f"max_trials must be nonnegative, got {max_trials}")
        tally = TrialTally()
        # the predicate is evaluated here, so it needs the outcomes too
        ship = keep_outcomes or counts is not None
        wave_size = self.chunk_size * self.threads
        next_index = 0
        while next_index < max_trials:
            stop = min(next_index + wave_size, max_trials)
            for summary in await self.run_wave(next_index, stop, keep_outcomes=ship):
                if _absorb(tally, summary, target, counts, keep_outcomes):
                    tally.stopped_early = True
                    log.info(
                        "reached %d counted acceptances after %d trials",
                        tally.counted,
                        tally.trials,
                    )
                    return tally
            next_index = stop
            log.info(
                "trials=%d accepted=%d counted=%d",
                tally.trials,
                tally.acceptances,
                tally.counted,
            )
        return tally


def _absorb(
    tally: TrialTally,
    summary: ChunkSummary,
    target: Optional[int],
    counts: Optional[Callable[[TrialOutcome], bool]],
    keep_outcomes: bool,
) -> bool:
    last = summary.stop - 1
    reached = False
    outcomes = summary.outcomes or itertools.repeat(None)
    for index, outcome in zip(summary.accepted, outcomes):
        tally.acceptances += 1
        if keep_outcomes:
            tally.accepted.append(outcome)
        if counts is None or counts(outcome):
            tally.counted += 1
        if target is not None and tally.counted >= target:
            last = index
            reached = True
            break
    tally.clamp_events += sum(c for index, c in summary.clamps if index <= last)
    tally.trials = last + 1
    return reached
