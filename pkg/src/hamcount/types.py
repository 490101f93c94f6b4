from __future__ import annotations

from typing import Protocol, TypeAlias, runtime_checkable

import numpy as np
import numpy.typing as npt

__all__ = (
    "Vertex",
    "Position",
    "FloatArray",
    "IntArray",
    "RandomStream",
)

Vertex: TypeAlias = int
Position: TypeAlias = tuple[int, int]
FloatArray: TypeAlias = npt.NDArray[np.float64]
IntArray: TypeAlias = npt.NDArray[np.int64]


@runtime_checkable
class RandomStream(Protocol):
    """
    The part of :class:`numpy.random.Generator` a trial consumes.
    """

    def random(self, size: int | None = None) -> float | FloatArray:
        ...
