"""
Exception types shared by all hamcount modules.

Every error raised on purpose by the library derives from :exc:`HamCountError`,
whose ``exit_code`` attribute is what the command-line front-end returns to the
shell.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, Sequence

if TYPE_CHECKING:
    from .estimator import EstimateReport
    from .sampler import HamiltonianCycle

__all__ = (
    "HamCountError",
    "InvalidGraphError",
    "GraphFormatError",
    "DomainError",
    "OracleCapError",
    "BoundViolationError",
    "SamplerNumericError",
    "ScalingError",
    "NoAcceptanceError",
    "SamplingBudgetError",
    "TrialGroupError",
)


class HamCountError(Exception):
    """
    The root of all hamcount errors.
    """

    exit_code: int = 1


class InvalidGraphError(HamCountError, ValueError):
    """
    Raised when a graph violates its invariants: self-loops, duplicate arcs,
    vertices out of range or non-positive weights.
    """

    exit_code = 3


class GraphFormatError(HamCountError):
    """
    Raised when a graph or matrix file cannot be parsed.

    The message always names the offending line.
    """

    exit_code = 3

    def __init__(self, reason: str, *, lineno: int | None = None, path: Any = None):
        self.reason = reason
        self.lineno = lineno
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if lineno is not None:
            where.append(f"line {lineno}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {reason}" if prefix else reason)


class DomainError(HamCountError, ValueError):
    """
    Raised when an argument lies outside the domain of an operation.
    """

    exit_code = 7


class OracleCapError(DomainError):
    """
    Raised when an exact oracle is asked for an order above its configured cap.
    """

    exit_code = 6

    def __init__(self, oracle: str, order: int, cap: int, env_var: str | None = None):
        self.oracle = oracle
        self.order = order
        self.cap = cap
        self.env_var = env_var
        msg = f"{oracle}: order {order} exceeds the cap {cap}"
        if env_var is not None:
            msg += f" (override with {env_var})"
        super().__init__(msg)


class BoundViolationError(HamCountError):
    """
    Raised when a quantity that the Bregman machinery relies on leaves its valid
    range beyond the rounding tolerance.
    """

    exit_code = 8


class SamplerNumericError(BoundViolationError):
    """
    Raised when the selection probabilities at one level of a trial sum to more
    than one beyond the clamp tolerance.
    """

    def __init__(self, level: int, total: float) -> None:
        self.level = level
        self.total = total
        super().__init__(
            f"selection probabilities at level {level} sum to {total!r} > 1"
        )


class ScalingError(HamCountError):
    """
    Raised when matrix scaling runs out of sweeps before reaching its band.
    """

    exit_code = 4

    def __init__(self, sweeps: int, deviation: float, band: float) -> None:
        self.sweeps = sweeps
        self.deviation = deviation
        self.band = band
        super().__init__(
            f"scaling did not converge after {sweeps} sweeps "
            f"(deviation {deviation:.3e}, required < {band:.3e})"
        )


class NoAcceptanceError(HamCountError):
    """
    Raised when a run ends without a single accepted trial.

    The attached report still carries the trial count and the upper bound
    ``Br(C)/l`` on the Hamilton.
    """

    exit_code = 5

    def __init__(self, report: EstimateReport) -> None:
        self.report = report
        super().__init__(
            f"no acceptance in {report.t} trials; estimate lower-bounded by 0, "
            f"upper bound Br(C)/l = exp({report.log_upper_bound:.6f})"
        )


class SamplingBudgetError(HamCountError):
    """
    Raised when perfect sampling runs out of trials before collecting the
    requested number of cycles.  The cycles collected so far are attached.
    """

    exit_code = 5

    def __init__(
        self,
        requested: int,
        cycles: Sequence[HamiltonianCycle],
        trials: int,
    ) -> None:
        self.requested = requested
        self.cycles = list(cycles)
        self.trials = trials
        super().__init__(
            f"collected {len(self.cycles)} of {requested} cycles "
            f"within {trials} trials"
        )


class TrialGroupError(ExceptionGroup):
    """
    Represents a collection of errors raised by trial chunks running inside a
    :class:`~hamcount.runner.TrialGroup`.
    """

    def __init__(self, msg: str, errors=()) -> None:
        super().__init__(msg, errors)
        self.__errors__ = errors

    def get_error_types(self) -> set[type[Exception]]:
        return {type(e) for e in self.exceptions}
