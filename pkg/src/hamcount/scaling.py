"""
Zero padding and matrix scaling.

:func:`prepare` pads the structural zeros of an adjacency matrix with
``gamma = (eps / 3) / (n - 1)!`` and then scales the strictly positive result:

1. find diagonal ``X`` and ``Y`` such that every row and column sum of
   ``B = X A Y`` lies within ``0.1 / n**2`` of one (iterative proportional
   fitting, alternating row and column normalization);
2. rescale each row of ``B`` by its largest entry, ``C = Z B``, so that all
   entries of ``C`` lie in ``[0, 1]`` and every row reaches one;
3. record ``l = prod(X) prod(Y) prod(Z)``, so that ``ham(C) = l ham(A)`` and
   ``per(C) = l per(A)``.

All of the arithmetic stays in log space.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
import math
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .config import get_settings
from .digraph import LogMatrix
from .errors import DomainError, ScalingError
from .types import FloatArray

__all__ = (
    "ScalingDiagnostics",
    "ScaledInstance",
    "padding_log_gamma",
    "pad_zeros",
    "scale",
    "prepare",
)

log = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ScalingDiagnostics:
    sweeps: int
    deviation: float
    band: float


@dataclasses.dataclass(frozen=True, eq=False)
class ScaledInstance:
    """
    The scaled matrix ``C`` with entries in ``[0, 1]``, ``log l`` and the
    padding that produced its input.
    """

    c: LogMatrix
    log_l: float
    gamma_log: Optional[float]
    epsilon: Optional[float]
    diagnostics: ScalingDiagnostics
    #: row and column sums of the intermediate ``B``
    b_row_sums: FloatArray = dataclasses.field(repr=False)
    b_col_sums: FloatArray = dataclasses.field(repr=False)

    @property
    def order(self) -> int:
        return self.c.order

    @functools.cached_property
    def lin(self) -> FloatArray:
        """
        ``C`` in linear space.  Padded entries may underflow to zero here; the
        sampler takes their logarithms from :attr:`c` instead.
        """
        lin = self.c.to_linear()
        lin.setflags(write=False)
        return lin


def padding_log_gamma(n: int, epsilon: float) -> float:
    """
    ``log gamma = log(eps / 3) - log((n - 1)!)``, without forming the factorial.
    """
    return math.log(epsilon / 3.0) - float(gammaln(n))


def pad_zeros(a: LogMatrix, epsilon: float) -> LogMatrix:
    """
    Replaces every structural zero, the diagonal included, with ``gamma``.
    """
    if a.order < 2:
        raise DomainError(f"padding needs order >= 2, got {a.order}")
    if not 0.0 < epsilon <= 1.0:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    entries = np.where(a.nonzero, a.entries, padding_log_gamma(a.order, epsilon))
    return LogMatrix(entries)


def _deviation(log_b: FloatArray) -> tuple[float, FloatArray, FloatArray]:
    rows = np.exp(logsumexp(log_b, axis=1))
    cols = np.exp(logsumexp(log_b, axis=0))
    deviation = max(np.abs(rows - 1.0).max(), np.abs(cols - 1.0).max())
    return float(deviation), rows, cols


def scale(
    a_padded: LogMatrix,
    *,
    epsilon: Optional[float] = None,
    gamma_log: Optional[float] = None,
) -> ScaledInstance:
    """
    Scales a strictly positive matrix; ``epsilon`` and ``gamma_log`` are only
    recorded on the result.

    Raises :exc:`ScalingError` when ``Settings.max_sweeps`` sweeps do not reach
    the band.
    """
    settings = get_settings()
    n = a_padded.order
    if n < 1:
        raise DomainError("cannot scale an empty matrix")
    if not a_padded.nonzero.all():
        raise DomainError("scale() needs a strictly positive matrix; pad it first")
    band = settings.scaling_band / n**2
    log_b = np.array(a_padded.entries)
    log_x = np.zeros(n)
    log_y = np.zeros(n)
    sweeps = 0
    deviation, rows, cols = _deviation(log_b)
    while deviation >= band:
        if sweeps >= settings.max_sweeps:
            raise ScalingError(sweeps, deviation, band)
        x = logsumexp(log_b, axis=1)
        log_b -= x[:, None]
        log_x -= x
        y = logsumexp(log_b, axis=0)
        log_b -= y[None, :]
        log_y -= y
        sweeps += 1
        deviation, rows, cols = _deviation(log_b)
        if sweeps % 1000 == 0:
            log.debug("scaling sweep %d: deviation %.3e", sweeps, deviation)
    log_z = -log_b.max(axis=1)
    log_c = log_b + log_z[:, None]
    log_l = math.fsum(log_x) + math.fsum(log_y) + math.fsum(log_z)
    log.info(
        "scaled order %d in %d sweeps (deviation %.3e < %.3e)",
        n,
        sweeps,
        deviation,
        band,
    )
    return ScaledInstance(
        c=LogMatrix(log_c),
        log_l=log_l,
        gamma_log=gamma_log,
        epsilon=epsilon,
        diagnostics=ScalingDiagnostics(sweeps, deviation, band),
        b_row_sums=rows,
        b_col_sums=cols,
    )


def prepare(a: LogMatrix, epsilon: float) -> ScaledInstance:
    """
    Pads and scales an adjacency matrix in one go.
    """
    padded = pad_zeros(a, epsilon)
    return scale(
        padded,
        epsilon=epsilon,
        gamma_log=padding_log_gamma(a.order, epsilon),
    )
