"""
Reproducible experiment procedures.

Every procedure derives its per-cell seeds from the caller's seed, so a fixed
seed gives an identical table.  Results are lists of frozen records whose
fields double as the CSV columns written by :func:`write_csv`:

``ratio``
    ``n, alpha, seed, per_value, ham_value, ratio, bound_exponent``
``reduce``
    ``n, m, hc_undirected, dhc_directed, consistent``
``validate``
    ``n, seed, ham, estimate, lower, upper, passed, t, s``
``cost``
    ``n, trials, median_ms, ratio_to_previous``
"""

from __future__ import annotations

import asyncio
import csv
import dataclasses
import functools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import IO, Any, Iterable, Optional, Sequence

import numpy as np
from scipy.stats import chisquare

from .config import Settings, current_settings, get_settings, resetting
from .digraph import (
    UndirectedGraph,
    WeightedDigraph,
    adjacency_matrix,
    complete_digraph,
    gen_dense_digraph,
    symmetric_lift,
)
from .errors import DomainError, NoAcceptanceError
from .estimator import DEFAULT_MAX_TRIALS, Adaptive, EstimatorConfig, aestimate
from .exact import (
    count_hc_undirected,
    enumerate_cycles,
    hamilton_dp,
    permanent_ryser,
)
from .runner import TrialRunner
from .sampler import run_trial, trial_rng
from .scaling import pad_zeros, prepare

__all__ = (
    "RatioRecord",
    "RatioFit",
    "RatioStudy",
    "ReductionRecord",
    "ValidationRow",
    "ValidationSummary",
    "PaddingRecord",
    "UniformityRecord",
    "CostRecord",
    "cell_seed",
    "ratio_bound_exponent",
    "ratio_record",
    "ratio_experiment",
    "reduction_check",
    "avalidation_sweep",
    "validation_sweep",
    "auniformity_check",
    "padding_check",
    "uniformity_check",
    "trial_cost_profile",
    "write_csv",
)

log = logging.getLogger(__name__)

#: fitted exponents above ``bound + FIT_SLACK`` are flagged
FIT_SLACK = 1.0


def cell_seed(seed: int, *keys: int) -> int:
    """
    A 32-bit seed for one experiment cell, derived from the run seed.
    """
    state = np.random.SeedSequence([seed, *keys]).generate_state(1)
    return int(state[0])


def ratio_bound_exponent(alpha: float) -> float:
    return 1.0 + 1.0 / (2.0 * alpha - 1.5)


@dataclasses.dataclass(frozen=True)
class RatioRecord:
    n: int
    alpha: float
    seed: int
    per_value: str
    ham_value: str
    ratio: float
    bound_exponent: float


@dataclasses.dataclass(frozen=True)
class RatioFit:
    #: least-squares slope of log(ratio) against log(n)
    exponent: Optional[float]
    log_constant: Optional[float]
    bound_exponent: float
    points: int
    flagged: bool


@dataclasses.dataclass(frozen=True)
class RatioStudy:
    records: tuple[RatioRecord, ...]
    fit: RatioFit


def ratio_record(g: WeightedDigraph, alpha: float, seed: int) -> RatioRecord:
    """
    Compares the permanent and the Hamilton of the 0-1 adjacency matrix of
    ``g``; the ratio is ``inf`` when ``g`` has no Hamiltonian cycle.
    """
    adj = adjacency_matrix(g)
    per = permanent_ryser(adj)
    ham = hamilton_dp(adj)
    ratio = math.inf if ham.is_zero else math.exp(per.log_value - ham.log_value)
    return RatioRecord(
        n=g.n,
        alpha=alpha,
        seed=seed,
        per_value=per.format(),
        ham_value=ham.format(),
        ratio=ratio,
        bound_exponent=ratio_bound_exponent(alpha),
    )


def _ratio_cell(
    n: int, seed: int, alpha: float, settings: Settings
) -> RatioRecord:
    with resetting(current_settings, settings):
        return ratio_record(gen_dense_digraph(n, alpha, seed), alpha, seed)


def _fit(records: Sequence[RatioRecord], alpha: float) -> RatioFit:
    bound = ratio_bound_exponent(alpha)
    usable = [r for r in records if math.isfinite(r.ratio)]
    if len({r.n for r in usable}) < 2:
        return RatioFit(None, None, bound, len(usable), False)
    x = np.log([r.n for r in usable])
    y = np.log([r.ratio for r in usable])
    slope, intercept = np.polyfit(x, y, 1)
    flagged = bool(slope > bound + FIT_SLACK)
    if flagged:
        log.warning(
            "fitted ratio exponent %.3f exceeds the bound %.3f by more than %.1f",
            slope,
            bound,
            FIT_SLACK,
        )
    return RatioFit(float(slope), float(intercept), bound, len(usable), flagged)


def ratio_experiment(
    n_values: Iterable[int],
    alpha: float,
    trials_per_n: int,
    seed: int,
    *,
    workers: int = 1,
) -> RatioStudy:
    """
    Measures ``per / ham`` on ``trials_per_n`` random ``alpha n``-dense
    digraphs for every ``n`` and fits the growth exponent.

    Records come out ordered by ``(n, instance)``; ``workers > 1`` evaluates
    the instances in a process pool.
    """
    if not 0.75 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0.75, 1], got {alpha}")
    if trials_per_n < 1:
        raise DomainError(f"trials_per_n must be positive, got {trials_per_n}")
    cells = [
        (n, cell_seed(seed, n, k))
        for n in sorted(set(n_values))
        for k in range(trials_per_n)
    ]
    settings = get_settings()
    job = functools.partial(_ratio_cell, alpha=alpha, settings=settings)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(job, *zip(*cells)))
    else:
        records = [job(n, s) for n, s in cells]
    for r in records:
        log.info(
            "ratio n=%d seed=%d per=%s ham=%s", r.n, r.seed, r.per_value, r.ham_value
        )
    return RatioStudy(tuple(records), _fit(records, alpha))


@dataclasses.dataclass(frozen=True)
class ReductionRecord:
    n: int
    m: int
    hc_undirected: int
    dhc_directed: int
    consistent: bool

    def __str__(self) -> str:
        verdict = "consistent" if self.consistent else "INCONSISTENT"
        return f"hc={self.hc_undirected} dhc={self.dhc_directed} {verdict}"


def reduction_check(g: UndirectedGraph) -> ReductionRecord:
    """
    Checks that the symmetric lift of ``g`` has exactly twice as many directed
    Hamiltonian cycles as ``g`` has undirected ones.
    """
    cap = get_settings().undirected_cap
    if not 3 <= g.n <= cap:
        raise DomainError(f"reduction_check needs 3 <= n <= {cap}, got {g.n}")
    hc = count_hc_undirected(g)
    dhc = hamilton_dp(adjacency_matrix(symmetric_lift(g)))
    assert dhc.count is not None
    return ReductionRecord(g.n, g.m, hc, dhc.count, dhc.count == 2 * hc)


@dataclasses.dataclass(frozen=True)
class ValidationRow:
    n: int
    seed: int
    ham: float
    estimate: float
    lower: float
    upper: float
    passed: bool
    t: int
    s: int


@dataclasses.dataclass(frozen=True)
class ValidationSummary:
    rows: tuple[ValidationRow, ...]
    target_coverage: float

    @property
    def coverage(self) -> Optional[float]:
        if not self.rows:
            return None
        return sum(r.passed for r in self.rows) / len(self.rows)


async def avalidation_sweep(
    n_range: Sequence[int],
    alpha: float,
    runs: int,
    epsilon: float,
    delta: float,
    seed: int,
    *,
    threads: int = 1,
    max_trials: Optional[int] = None,
) -> ValidationSummary:
    """
    Runs the adaptive estimator on ``runs`` random ``alpha n``-dense digraphs,
    cycling through ``n_range``, and checks each estimate against the exact
    Hamilton.  An estimate passes when it lies within
    ``[(1 - eps) ham, (1 + eps)(1 + eps/3) ham]``; the upper end allows for
    the padding.
    """
    if runs < 0:
        raise DomainError(f"runs must be nonnegative, got {runs}")
    if runs and not n_range:
        raise DomainError("an empty n_range")
    rows = []
    for k in range(runs):
        n = n_range[k % len(n_range)]
        instance_seed = cell_seed(seed, n, k)
        g = gen_dense_digraph(n, alpha, instance_seed)
        exact = hamilton_dp(adjacency_matrix(g))
        ham = exact.count if exact.count is not None else exact.value
        cfg = EstimatorConfig(
            epsilon=epsilon,
            delta=delta,
            mode=Adaptive(),
            seed=instance_seed,
            threads=threads,
            max_trials=DEFAULT_MAX_TRIALS if max_trials is None else max_trials,
        )
        try:
            report = await aestimate(g, cfg)
            value, t, s = report.estimate, report.t, report.s
        except NoAcceptanceError as e:
            value, t, s = 0.0, e.report.t, 0
        lower = (1.0 - epsilon) * ham
        upper = (1.0 + epsilon) * (1.0 + epsilon / 3.0) * ham
        rows.append(
            ValidationRow(
                n=n,
                seed=instance_seed,
                ham=ham,
                estimate=value,
                lower=lower,
                upper=upper,
                passed=lower <= value <= upper,
                t=t,
                s=s,
            )
        )
        log.info(
            "validation run %d/%d n=%d passed=%s", k + 1, runs, n, rows[-1].passed
        )
    return ValidationSummary(tuple(rows), 1.0 - delta)


def validation_sweep(*args, **kwargs) -> ValidationSummary:
    return asyncio.run(avalidation_sweep(*args, **kwargs))


@dataclasses.dataclass(frozen=True)
class PaddingRecord:
    ham: float
    ham_padded: float
    bound: float
    ok: bool


def padding_check(g: WeightedDigraph, epsilon: float) -> PaddingRecord:
    """
    Checks that padding the zeros with ``gamma`` raises the Hamilton by at
    most a factor ``1 + eps/3``.
    """
    adj = adjacency_matrix(g)
    ham = hamilton_dp(adj)
    padded = hamilton_dp(pad_zeros(adj, epsilon))
    bound_log = ham.log_value + math.log1p(epsilon / 3.0)
    ok = padded.log_value <= bound_log + 1e-9
    return PaddingRecord(ham.value, padded.value, math.exp(bound_log), ok)


@dataclasses.dataclass(frozen=True)
class UniformityRecord:
    classes: int
    samples: int
    statistic: float
    p_value: float
    significance: float
    passed: bool


async def auniformity_check(
    g: WeightedDigraph,
    samples: int,
    seed: int,
    *,
    epsilon: float = 0.25,
    significance: float = 1e-3,
    max_trials: int = DEFAULT_MAX_TRIALS,
    threads: int = 1,
) -> UniformityRecord:
    if samples < 1:
        raise DomainError(f"samples must be positive, got {samples}")
    inst = prepare(adjacency_matrix(g), epsilon)
    # every cycle of C, real or padded, is drawn with probability W_C(H) / Br(C)
    real = enumerate_cycles(adjacency_matrix(g))
    index = {vertices: i for i, (vertices, _) in enumerate(real)}
    log_ham_c = hamilton_dp(inst.c).log_value
    probs = np.array(
        [
            math.exp(inst.c.entries[_edge_index(v)].sum() - log_ham_c)
            for v, _ in real
        ]
    )
    padded_prob = max(0.0, 1.0 - float(probs.sum()))
    async with TrialRunner(inst, seed, threads=threads) as runner:
        tally = await runner.run(max_trials, target=samples, keep_outcomes=True)
    observed = np.zeros(len(real) + 1)
    for outcome in tally.accepted:
        assert outcome.cycle is not None
        observed[index.get(outcome.cycle.vertices, len(real))] += 1
    expected = np.append(probs, padded_prob)
    # below this the padded class is rounding noise
    if padded_prob <= 1e-9:
        observed, expected = observed[:-1], expected[:-1]
    total = observed.sum()
    expected = expected / expected.sum() * total
    statistic, p_value = chisquare(observed, expected)
    return UniformityRecord(
        classes=len(observed),
        samples=int(total),
        statistic=float(statistic),
        p_value=float(p_value),
        significance=significance,
        passed=bool(p_value >= significance),
    )


def _edge_index(vertices: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(vertices) - 1
    return v[:-1], v[1:]


def uniformity_check(
    g: WeightedDigraph,
    samples: int,
    seed: int,
    **kwargs: Any,
) -> UniformityRecord:
    """
    Chi-square goodness of fit of sampled cycles against the weight-proportional
    law.  Cycles of ``g`` form one class each; cycles through padded non-edges
    are pooled into a single class.
    """
    return asyncio.run(auniformity_check(g, samples, seed, **kwargs))


@dataclasses.dataclass(frozen=True)
class CostRecord:
    n: int
    trials: int
    median_ms: float
    ratio_to_previous: Optional[float]


def trial_cost_profile(
    n_values: Iterable[int],
    trials: int,
    seed: int,
    *,
    epsilon: float = 0.25,
) -> list[CostRecord]:
    """
    Times single trials on complete digraphs.  With quadratic per-trial work
    the median grows about four times when ``n`` doubles.
    """
    if trials < 1:
        raise DomainError(f"trials must be positive, got {trials}")
    settings = get_settings()
    records: list[CostRecord] = []
    previous: Optional[float] = None
    for n in n_values:
        inst = prepare(adjacency_matrix(complete_digraph(n)), epsilon)
        inst.lin  # warm the cached linear matrix outside the timed region
        timings = np.empty(trials)
        for i in range(trials):
            rng = trial_rng(seed, i)
            started = time.perf_counter()
            run_trial(inst, rng, settings=settings)
            timings[i] = time.perf_counter() - started
        median_ms = float(np.median(timings)) * 1000.0
        ratio = median_ms / previous if previous else None
        records.append(CostRecord(n, trials, median_ms, ratio))
        log.info("n=%d median trial %.4f ms", n, median_ms)
        previous = median_ms
    return records


def write_csv(
    rows: Iterable[Any],
    stream: IO[str],
    record_type: Optional[type] = None,
) -> None:
    """
    Writes dataclass records as a comma-separated table with a header row.

    The header comes from ``record_type`` when given, so that an empty table
    still has one; without it an empty input writes nothing.
    """
    rows = list(rows)
    if record_type is None:
        if not rows:
            return
        record_type = type(rows[0])
    fields = [f.name for f in dataclasses.fields(record_type)]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_cell(getattr(row, name)) for name in fields])


def _cell(value: Any) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return repr(value)
    return str(value)
