"""
Approximate counting and perfect sampling of Hamiltonian cycles.

:func:`estimate` pads and scales the adjacency matrix of a digraph, runs
sampler trials and returns::

    ham~(A) = Br(C) * s / (t * l)

where ``s`` of ``t`` trials accepted.  Two stopping rules are available:

* :class:`FixedBudget` runs ``t = ceil(4 N (eps/2)^-2 ln(1/delta))`` trials,
  which gives a ``(1 +- eps)`` estimate with probability ``1 - delta`` when
  ``N >= Br(C) / ham(C)``.
* :class:`Adaptive` runs until ``ceil(4 (eps/2)^-2 ln(2/delta))`` trials have
  accepted, which adapts to the unknown acceptance rate.

:func:`sample_cycles` keeps the accepted cycles instead: each cycle of the
digraph is returned with probability proportional to its weight.
"""

from __future__ import annotations

import asyncio
import dataclasses
import logging
import math
import time
from typing import Literal, Optional, Union

from .bregman import br
from .config import Settings, get_settings
from .digraph import (
    UndirectedGraph,
    WeightedDigraph,
    adjacency_matrix,
    density,
    symmetric_lift,
    validate_cycle,
)
from .errors import DomainError, NoAcceptanceError, SamplingBudgetError
from .runner import TrialRunner
from .sampler import HamiltonianCycle, TrialOutcome
from .scaling import ScaledInstance, prepare

__all__ = (
    "FixedBudget",
    "Adaptive",
    "EstimatorConfig",
    "EstimateReport",
    "SampleReport",
    "REPORT_KEYS",
    "DEFAULT_MAX_TRIALS",
    "sample_budget",
    "adaptive_target",
    "suggest_N",
    "complexity_exponent",
    "aestimate",
    "estimate",
    "estimate_undirected",
    "asample_cycles",
    "sample_cycles",
)

log = logging.getLogger(__name__)

DEFAULT_MAX_TRIALS = 10_000_000

REPORT_KEYS = (
    "n",
    "alpha",
    "epsilon",
    "delta",
    "seed",
    "mode",
    "t",
    "s",
    "log_br_c",
    "log_l",
    "log_estimate",
    "estimate",
    "clamp_events",
    "scaling_iters",
    "wall_ms",
)


def _check_unit_interval(name: str, value: float) -> None:
    if not 0.0 < value <= 1.0:
        raise DomainError(f"{name} must lie in (0, 1], got {value}")


@dataclasses.dataclass(frozen=True)
class FixedBudget:
    #: ``None`` asks :func:`suggest_N` for a value
    N: Optional[float] = None

    def __post_init__(self) -> None:
        if self.N is not None and not self.N >= 1:
            raise DomainError(f"N must be at least 1, got {self.N}")


@dataclasses.dataclass(frozen=True)
class Adaptive:
    #: ``None`` uses :func:`adaptive_target`
    target_acceptances: Optional[int] = None

    def __post_init__(self) -> None:
        if self.target_acceptances is not None and self.target_acceptances < 1:
            raise DomainError(
                f"target_acceptances must be positive, got {self.target_acceptances}"
            )


Mode = Union[FixedBudget, Adaptive]


@dataclasses.dataclass(frozen=True)
class EstimatorConfig:
    epsilon: float = 0.25
    delta: float = 0.1
    mode: Mode = dataclasses.field(default_factory=Adaptive)
    seed: int = 0
    max_trials: int = DEFAULT_MAX_TRIALS
    #: worker count of the trial runner; does not change any result
    threads: int = 1

    def __post_init__(self) -> None:
        _check_unit_interval("epsilon", self.epsilon)
        _check_unit_interval("delta", self.delta)
        if self.max_trials < 1:
            raise DomainError(f"max_trials must be positive, got {self.max_trials}")
        if self.seed < 0:
            raise DomainError(f"seed must be nonnegative, got {self.seed}")
        if self.threads < 1:
            raise DomainError(f"threads must be positive, got {self.threads}")

    @property
    def mode_name(self) -> Literal["fixed", "adaptive"]:
        return "fixed" if isinstance(self.mode, FixedBudget) else "adaptive"


def _format(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclasses.dataclass(frozen=True)
class EstimateReport:
    n: int
    alpha: float
    epsilon: float
    delta: float
    seed: int
    mode: str
    t: int
    s: int
    log_br_c: float
    log_l: float
    log_estimate: float
    clamp_events: int
    scaling_iters: int
    wall_ms: float
    #: N is set in fixed mode, target in adaptive mode
    N: Optional[float] = None
    target: Optional[int] = None
    scaling_deviation: Optional[float] = None

    @property
    def estimate(self) -> float:
        """
        The linear estimate; ``inf`` when it does not fit a double.
        """
        try:
            return math.exp(self.log_estimate)
        except OverflowError:
            return math.inf

    @property
    def log_upper_bound(self) -> float:
        """
        ``log(Br(C) / l)``, an upper bound on the Hamilton of the padded input.
        """
        return self.log_br_c - self.log_l

    def as_dict(self, *, timing: bool = True) -> dict[str, str]:
        estimate = self.estimate
        values = {
            "n": self.n,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "seed": self.seed,
            "mode": self.mode,
            "t": self.t,
            "s": self.s,
            "log_br_c": self.log_br_c,
            "log_l": self.log_l,
            "log_estimate": self.log_estimate,
            "estimate": "overflow" if math.isinf(estimate) else estimate,
            "clamp_events": self.clamp_events,
            "scaling_iters": self.scaling_iters,
            "wall_ms": round(self.wall_ms, 3) if timing else None,
        }
        return {key: _format(values[key]) for key in REPORT_KEYS}

    def to_text(self, *, timing: bool = True) -> str:
        """
        Serializes the report as ``key=value`` lines in :data:`REPORT_KEYS`
        order.  ``timing=False`` prints ``wall_ms=NA``.
        """
        items = self.as_dict(timing=timing).items()
        return "".join(f"{key}={value}\n" for key, value in items)


def sample_budget(epsilon: float, delta: float, N: float) -> int:
    """
    ``t = ceil(4 N (eps/2)^-2 ln(1/delta))``, at least one trial.
    """
    _check_unit_interval("epsilon", epsilon)
    _check_unit_interval("delta", delta)
    if not N >= 1:
        raise DomainError(f"N must be at least 1, got {N}")
    t = 4.0 * N * (epsilon / 2.0) ** -2 * math.log(1.0 / delta)
    # the tolerance keeps float noise from adding a trial
    return max(1, math.ceil(t - 1e-9))


def adaptive_target(epsilon: float, delta: float) -> int:
    """
    The number of acceptances adaptive mode waits for,
    ``ceil(4 (eps/2)^-2 ln(2/delta))``.
    """
    _check_unit_interval("epsilon", epsilon)
    _check_unit_interval("delta", delta)
    return math.ceil(4.0 * (epsilon / 2.0) ** -2 * math.log(2.0 / delta) - 1e-9)


def _check_alpha(alpha: float) -> None:
    if not 0.75 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0.75, 1], got {alpha}")


def complexity_exponent(alpha: float) -> float:
    """
    The exponent of the overall running time bound ``O(n^x)`` for an
    ``alpha n``-dense digraph: ``2.5 + 0.5/(2a - 1) + 1/(2a - 1.5)``.
    """
    _check_alpha(alpha)
    return 2.5 + 0.5 / (2 * alpha - 1) + 1.0 / (2 * alpha - 1.5)


def suggest_N(g: WeightedDigraph, alpha: float, c: float = 1.0) -> float:
    """
    An advisory fixed-mode budget ``c * n^(0.5 + 0.5/(2a - 1) + 1/(2a - 1.5))``
    combining the bound-to-permanent and the permanent-to-Hamilton ratios of
    ``alpha n``-dense digraphs.
    """
    _check_alpha(alpha)
    exponent = 0.5 + 0.5 / (2 * alpha - 1) + 1.0 / (2 * alpha - 1.5)
    return c * float(g.n) ** exponent


@dataclasses.dataclass(frozen=True)
class _Prepared:
    inst: ScaledInstance
    log_br_c: float
    alpha: float


def _prepare(g: WeightedDigraph, epsilon: float) -> _Prepared:
    if g.n < 2:
        raise DomainError(f"counting needs n >= 2, got {g.n}")
    inst = prepare(adjacency_matrix(g), epsilon)
    return _Prepared(inst, br(inst.c), density(g).alpha)


async def aestimate(
    g: WeightedDigraph,
    cfg: EstimatorConfig,
    *,
    settings: Optional[Settings] = None,
) -> EstimateReport:
    """
    Estimates ``ham(A_G)``.  Raises :exc:`NoAcceptanceError` carrying the
    report when no trial accepted.
    """
    started = time.perf_counter()
    if settings is None:
        settings = get_settings()
    prep = _prepare(g, cfg.epsilon)
    N: Optional[float] = None
    target: Optional[int] = None
    async with TrialRunner(
        prep.inst, cfg.seed, threads=cfg.threads, settings=settings
    ) as runner:
        match cfg.mode:
            case FixedBudget(N=given):
                N = given if given is not None else suggest_N(g, prep.alpha)
                t = sample_budget(cfg.epsilon, cfg.delta, N)
                if t > cfg.max_trials:
                    log.warning(
                        "the budget of %d trials exceeds max_trials; running %d",
                        t,
                        cfg.max_trials,
                    )
                    t = cfg.max_trials
                tally = await runner.run(t)
            case Adaptive(target_acceptances=given):
                target = given
                if target is None:
                    target = adaptive_target(cfg.epsilon, cfg.delta)
                tally = await runner.run(cfg.max_trials, target=target)
                if not tally.stopped_early:
                    log.warning(
                        "stopped at max_trials=%d with %d of %d acceptances",
                        cfg.max_trials,
                        tally.acceptances,
                        target,
                    )
    s, t = tally.acceptances, tally.trials
    if tally.clamp_events:
        log.warning(
            "renormalized selection probabilities %d time(s)", tally.clamp_events
        )
    log_estimate = (
        prep.log_br_c - prep.inst.log_l + math.log(s) - math.log(t)
        if s > 0
        else -math.inf
    )
    report = EstimateReport(
        n=g.n,
        alpha=prep.alpha,
        epsilon=cfg.epsilon,
        delta=cfg.delta,
        seed=cfg.seed,
        mode=cfg.mode_name,
        t=t,
        s=s,
        log_br_c=prep.log_br_c,
        log_l=prep.inst.log_l,
        log_estimate=log_estimate,
        clamp_events=tally.clamp_events,
        scaling_iters=prep.inst.diagnostics.sweeps,
        wall_ms=(time.perf_counter() - started) * 1000.0,
        N=N,
        target=target,
        scaling_deviation=prep.inst.diagnostics.deviation,
    )
    if s == 0:
        raise NoAcceptanceError(report)
    return report


def estimate(
    g: WeightedDigraph,
    cfg: EstimatorConfig,
    *,
    settings: Optional[Settings] = None,
) -> EstimateReport:
    return asyncio.run(aestimate(g, cfg, settings=settings))


def estimate_undirected(
    g: UndirectedGraph,
    cfg: EstimatorConfig,
    *,
    settings: Optional[Settings] = None,
) -> EstimateReport:
    """
    Estimates the number of undirected Hamiltonian cycles as half of the
    directed count of the symmetric lift.
    """
    report = estimate(symmetric_lift(g), cfg, settings=settings)
    return dataclasses.replace(report, log_estimate=report.log_estimate - math.log(2))


@dataclasses.dataclass(frozen=True)
class SampleReport:
    requested: int
    cycles: tuple[HamiltonianCycle, ...]
    trials: int
    #: all accepted trials, including those discarded below
    accepted: int
    #: accepted cycles that run through padded non-edges
    discarded: int
    clamp_events: int
    wall_ms: float


def _uses_real_edges(g: WeightedDigraph):
    def check(outcome: TrialOutcome) -> bool:
        assert outcome.cycle is not None
        return all(g.has_edge(tail, head) for tail, head in outcome.cycle.edges)

    return check


async def asample_cycles(
    g: WeightedDigraph,
    count: int,
    seed: int,
    *,
    epsilon: float = 0.25,
    max_trials: int = DEFAULT_MAX_TRIALS,
    threads: int = 1,
    settings: Optional[Settings] = None,
) -> SampleReport:
    """
    Draws ``count`` Hamiltonian cycles of ``g``, each with probability
    proportional to its weight.

    Raises :exc:`SamplingBudgetError` with the cycles found so far when
    ``max_trials`` trials do not produce enough of them.
    """
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    started = time.perf_counter()
    if settings is None:
        settings = get_settings()
    prep = _prepare(g, epsilon)
    counts = _uses_real_edges(g)
    async with TrialRunner(
        prep.inst, seed, threads=threads, settings=settings
    ) as runner:
        tally = await runner.run(
            max_trials, target=count, counts=counts, keep_outcomes=True
        )
    cycles = []
    for outcome in tally.accepted:
        if counts(outcome):
            assert outcome.cycle is not None
            vertices = outcome.cycle.vertices
            cycles.append(HamiltonianCycle(vertices, validate_cycle(g, vertices)))
    if len(cycles) < count:
        raise SamplingBudgetError(count, cycles, tally.trials)
    return SampleReport(
        requested=count,
        cycles=tuple(cycles),
        trials=tally.trials,
        accepted=tally.acceptances,
        discarded=tally.acceptances - len(cycles),
        clamp_events=tally.clamp_events,
        wall_ms=(time.perf_counter() - started) * 1000.0,
    )


def sample_cycles(
    g: WeightedDigraph,
    count: int,
    seed: int,
    **kwargs,
) -> SampleReport:
    return asyncio.run(asample_cycles(g, count, seed, **kwargs))
