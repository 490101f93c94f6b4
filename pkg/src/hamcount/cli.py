"""
The ``hamcount`` command.

Every subcommand writes data to stdout and diagnostics to stderr.  Data
output opens with the run manifest as ``# key=value`` comment lines: the
command, its flags (worker counts excluded), the seed, the package version
and the sha256 digest of each input file.  Two runs with equal manifests
print the same data; pass ``--no-timing`` to blank the wall-clock fields.

Exit codes:

== ===================================================
0  success
1  unexpected error
2  usage error
3  unreadable or invalid graph file
4  matrix scaling did not converge
5  no acceptance, or sampling ran out of trials
6  exact oracle cap exceeded
7  argument outside its domain
8  numeric bound violation
== ===================================================
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import IO, Any, Callable, Optional, Sequence

from . import __version__
from .config import Settings, current_settings, resetting
from .digraph import (
    LogMatrix,
    WeightedDigraph,
    adjacency_matrix,
    digraph_from_matrix,
    gen_dense_digraph,
    symmetric_lift,
)
from .errors import (
    DomainError,
    HamCountError,
    NoAcceptanceError,
    SamplingBudgetError,
)
from .estimator import (
    DEFAULT_MAX_TRIALS,
    Adaptive,
    EstimateReport,
    EstimatorConfig,
    FixedBudget,
    estimate,
    estimate_undirected,
    sample_cycles,
)
from .exact import hamilton_dp, permanent_ryser
from .experiments import (
    RatioRecord,
    UniformityRecord,
    ValidationRow,
    ratio_experiment,
    reduction_check,
    uniformity_check,
    validation_sweep,
    write_csv,
)
from .fileio import (
    file_digest,
    read_graph,
    read_matrix,
    read_undirected,
    write_graph,
)

__all__ = ("main", "build_parser")

log = logging.getLogger(__name__)

#: flags that only change how fast a command runs
_EXECUTION_FLAGS = frozenset({"threads", "workers", "verbose", "func", "command"})

Handler = Callable[[argparse.Namespace, IO[str]], int]


def _int_range(text: str) -> list[int]:
    """
    Parses ``"8..12"``, ``"8,10,12"`` or ``"8"``.
    """
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer range: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError(f"an empty integer range: {text!r}")
    return values


def _manifest(
    args: argparse.Namespace,
    inputs: Sequence[str] = (),
    **extra: Any,
) -> list[str]:
    lines = [f"# command={args.command}"]
    for key in sorted(vars(args)):
        if key in _EXECUTION_FLAGS:
            continue
        value = getattr(args, key)
        if isinstance(value, list):
            value = ",".join(map(str, value))
        lines.append(f"# {key}={'NA' if value is None else value}")
    lines.append(f"# version={__version__}")
    for path in inputs:
        if path != "-":
            lines.append(f"# sha256={file_digest(path)}")
    for key, value in extra.items():
        lines.append(f"# {key}={value}")
    return lines


def _emit(out: IO[str], lines: Sequence[str]) -> None:
    for line in lines:
        out.write(line)
        out.write("\n")


def _source(path: str):
    return sys.stdin.buffer if path == "-" else path


def _load_digraph(path: str, fmt: str) -> WeightedDigraph:
    match fmt:
        case "graph":
            return read_graph(_source(path))
        case "undirected":
            return symmetric_lift(read_undirected(_source(path)))
        case "matrix":
            return digraph_from_matrix(read_matrix(_source(path)))
    raise DomainError(f"unknown input format {fmt!r}")


def _load_matrix(path: str, fmt: str) -> LogMatrix:
    if fmt == "matrix":
        return read_matrix(_source(path))
    return adjacency_matrix(_load_digraph(path, fmt))


def cmd_count(args: argparse.Namespace, out: IO[str]) -> int:
    if args.mode == "fixed":
        mode: FixedBudget | Adaptive = FixedBudget(args.N)
    else:
        mode = Adaptive(args.target)
    cfg = EstimatorConfig(
        epsilon=args.epsilon,
        delta=args.delta,
        mode=mode,
        seed=args.seed,
        max_trials=args.max_trials,
        threads=args.threads,
    )
    exit_code = 0
    try:
        if args.format == "undirected":
            report = estimate_undirected(read_undirected(_source(args.graph_file)), cfg)
        else:
            report = estimate(_load_digraph(args.graph_file, args.format), cfg)
    except NoAcceptanceError as e:
        log.error("%s", e)
        report = e.report
        exit_code = e.exit_code
    _emit(out, _manifest(args, [args.graph_file], **_budget_notes(args, report)))
    out.write(report.to_text(timing=not args.no_timing))
    if exit_code:
        out.write(f"log_upper_bound={report.log_upper_bound!r}\n")
    return exit_code


def _budget_notes(args: argparse.Namespace, report: EstimateReport) -> dict:
    if report.N is not None:
        source = "flag" if args.N is not None else "suggest_N"
        return {"budget_N": repr(report.N), "N_source": source}
    return {"acceptance_target": report.target}


def cmd_sample(args: argparse.Namespace, out: IO[str]) -> int:
    g = _load_digraph(args.graph_file, args.format)
    try:
        report = sample_cycles(
            g,
            args.count,
            args.seed,
            epsilon=args.epsilon,
            max_trials=args.max_trials,
            threads=args.threads,
        )
    except SamplingBudgetError as e:
        log.error("%s", e)
        _emit(out, _manifest(args, [args.graph_file]))
        _emit(out, [str(cycle) for cycle in e.cycles])
        _emit(out, [f"# trials={e.trials}", f"# cycles={len(e.cycles)}"])
        return e.exit_code
    wall_ms = "NA" if args.no_timing else repr(round(report.wall_ms, 3))
    _emit(out, _manifest(args, [args.graph_file]))
    _emit(out, [str(cycle) for cycle in report.cycles])
    _emit(
        out,
        [
            f"# trials={report.trials}",
            f"# accepted={report.accepted}",
            f"# discarded={report.discarded}",
            f"# acceptance_rate={report.accepted / report.trials!r}",
            f"# clamp_events={report.clamp_events}",
            f"# wall_ms={wall_ms}",
        ],
    )
    return 0


def cmd_exact(args: argparse.Namespace, out: IO[str]) -> int:
    a = _load_matrix(args.graph_file, args.format)
    lines = []
    if args.what in ("ham", "both"):
        ham = hamilton_dp(a)
        lines += [f"log_ham={ham.log_value!r}", f"ham={ham.format()}"]
    if args.what in ("per", "both"):
        per = permanent_ryser(a)
        lines += [f"log_per={per.log_value!r}", f"per={per.format()}"]
    _emit(out, _manifest(args, [args.graph_file]))
    _emit(out, lines)
    return 0


def cmd_gen(args: argparse.Namespace, out: IO[str]) -> int:
    g = gen_dense_digraph(args.n, args.alpha, args.seed)
    if args.out is None:
        _emit(out, _manifest(args))
        write_graph(g, out)
    else:
        with open(args.out, "w", encoding="utf-8") as f:
            _emit(f, _manifest(args))
            write_graph(g, f)
        log.info("wrote %d vertices and %d arcs to %s", g.n, g.m, args.out)
    return 0


def cmd_ratio(args: argparse.Namespace, out: IO[str]) -> int:
    study = ratio_experiment(
        args.n, args.alpha, args.trials_per_n, args.seed, workers=args.workers
    )
    fit = study.fit
    _emit(out, _manifest(args))
    write_csv(study.records, out, RatioRecord)
    _emit(
        out,
        [
            f"# fit_exponent={'NA' if fit.exponent is None else repr(fit.exponent)}",
            f"# bound_exponent={fit.bound_exponent!r}",
            f"# points={fit.points}",
            f"# flagged={fit.flagged}",
        ],
    )
    return 0


def cmd_reduce(args: argparse.Namespace, out: IO[str]) -> int:
    record = reduction_check(read_undirected(_source(args.graph_file)))
    _emit(out, _manifest(args, [args.graph_file]))
    out.write(f"{record}\n")
    return 0 if record.consistent else 1


def cmd_validate(args: argparse.Namespace, out: IO[str]) -> int:
    summary = validation_sweep(
        args.n,
        args.alpha,
        args.runs,
        args.epsilon,
        args.delta,
        args.seed,
        threads=args.threads,
        max_trials=args.max_trials,
    )
    coverage = summary.coverage
    _emit(out, _manifest(args))
    write_csv(summary.rows, out, ValidationRow)
    _emit(
        out,
        [
            f"# coverage={'NA' if coverage is None else repr(coverage)}",
            f"# target_coverage={summary.target_coverage!r}",
        ],
    )
    return 0


def cmd_uniform(args: argparse.Namespace, out: IO[str]) -> int:
    record = uniformity_check(
        _load_digraph(args.graph_file, args.format),
        args.samples,
        args.seed,
        epsilon=args.epsilon,
        significance=args.significance,
        max_trials=args.max_trials,
        threads=args.threads,
    )
    _emit(out, _manifest(args, [args.graph_file]))
    write_csv([record], out, UniformityRecord)
    return 0


def _add_input(p: argparse.ArgumentParser, formats: Sequence[str]) -> None:
    p.add_argument("graph_file", help="input file, or '-' for stdin")
    p.add_argument(
        "--format",
        choices=formats,
        default=formats[0],
        help="input file format (default: %(default)s)",
    )


def _add_trial_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument(
        "--max-trials",
        type=int,
        default=DEFAULT_MAX_TRIALS,
        help="stop after this many trials (default: %(default)s)",
    )
    p.add_argument(
        "--threads",
        type=int,
        default=1,
        help="worker processes for the trials; results do not depend on it",
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="-v logs progress, -vv logs debugging details",
    )
    common.add_argument("--seed", type=int, default=0)
    common.add_argument(
        "--no-timing",
        action="store_true",
        help="print wall-clock fields as NA",
    )

    parser = argparse.ArgumentParser(
        prog="hamcount",
        description=(
            "Approximate counting and perfect sampling of Hamiltonian cycles"
            " in dense digraphs"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", parents=[common], help="estimate ham(A_G)")
    _add_input(p, ("graph", "undirected", "matrix"))
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--mode", choices=("fixed", "adaptive"), default="adaptive")
    p.add_argument(
        "--N",
        type=float,
        default=None,
        help="fixed-mode budget factor (default: suggested from the density)",
    )
    p.add_argument(
        "--target",
        type=int,
        default=None,
        help="adaptive-mode acceptance target (default: from epsilon and delta)",
    )
    _add_trial_flags(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser(
        "sample", parents=[common], help="draw weight-proportional cycles"
    )
    _add_input(p, ("graph", "undirected", "matrix"))
    p.add_argument("--count", type=int, default=1)
    _add_trial_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("exact", parents=[common], help="exact ham and per")
    _add_input(p, ("graph", "undirected", "matrix"))
    p.add_argument("--what", choices=("ham", "per", "both"), default="both")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("gen", parents=[common], help="random dense digraph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("ratio", parents=[common], help="per/ham growth study")
    p.add_argument("--n", type=_int_range, required=True, help="e.g. 8..12")
    p.add_argument("--alpha", type=float, default=0.85)
    p.add_argument("--trials-per-n", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser(
        "reduce", parents=[common], help="check #DHC(lift) = 2 #HC"
    )
    p.add_argument("graph_file", help="undirected graph file, or '-' for stdin")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser(
        "validate", parents=[common], help="estimator against the exact oracle"
    )
    p.add_argument("--n", type=_int_range, default=[8, 9, 10])
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--delta", type=float, default=0.1)
    _add_trial_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser(
        "uniform", parents=[common], help="chi-square test of the sampling law"
    )
    _add_input(p, ("graph", "undirected", "matrix"))
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--significance", type=float, default=1e-3)
    _add_trial_flags(p)
    p.set_defaults(func=cmd_uniform)

    return parser


def _setup_logging(verbose: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(
    argv: Optional[Sequence[str]] = None,
    *,
    stdout: Optional[IO[str]] = None,
) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    out = sys.stdout if stdout is None else stdout
    handler: Handler = args.func
    try:
        with resetting(current_settings, Settings.from_env()):
            return handler(args, out)
    except HamCountError as e:
        log.error("%s", e)
        return e.exit_code
    except Exception:
        log.exception("unexpected error in %s", args.command)
        return 1
