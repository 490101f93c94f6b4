"""
Tunable limits and tolerances, kept in a context variable so that callers can
override them for a scope without threading extra arguments through every
function.

.. code-block:: python3

   with hamcount.override_settings(ham_oracle_cap=16):
       hamcount.hamilton_dp(matrix)  # raises OracleCapError above order 16

The oracle caps default from the ``HAM_ORACLE_CAP`` and ``PER_ORACLE_CAP``
environment variables when they are set.
"""

from __future__ import annotations

import dataclasses
import os
from contextvars import ContextVar
from typing import Generic, Mapping, Optional, TypeVar

from .errors import DomainError

__all__ = (
    "Settings",
    "current_settings",
    "get_settings",
    "override_settings",
    "resetting",
    "HAM_ORACLE_CAP_ENV",
    "PER_ORACLE_CAP_ENV",
)

T = TypeVar("T")

HAM_ORACLE_CAP_ENV = "HAM_ORACLE_CAP"
PER_ORACLE_CAP_ENV = "PER_ORACLE_CAP"


@dataclasses.dataclass(frozen=True)
class Settings:
    ham_oracle_cap: int = 22
    per_oracle_cap: int = 24
    enum_cap: int = 9
    undirected_cap: int = 12
    integer_pathway_cap: int = 20
    scaling_band: float = 0.1
    max_sweeps: int = 1_000_000
    entry_tolerance: float = 1e-12
    clamp_tolerance: float = 1e-9
    # None means ceil(n / 4) levels
    recompute_every: Optional[int] = None
    chunk_size: int = 256

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "Settings":
        """
        Build the default settings, taking the oracle caps from the environment
        when they are present.
        """
        if environ is None:
            environ = os.environ
        overrides = {}
        for env_var, field in (
            (HAM_ORACLE_CAP_ENV, "ham_oracle_cap"),
            (PER_ORACLE_CAP_ENV, "per_oracle_cap"),
        ):
            raw = environ.get(env_var)
            if raw is None or not raw.strip():
                continue
            try:
                value = int(raw)
            except ValueError:
                raise DomainError(
                    f"{env_var} must be an integer, got {raw!r}"
                ) from None
            if value < 1:
                raise DomainError(f"{env_var} must be positive, got {value}")
            overrides[field] = value
        return cls(**overrides)

    def recompute_interval(self, n: int) -> int:
        if self.recompute_every is not None:
            return max(1, self.recompute_every)
        return max(1, -(-n // 4))


current_settings: ContextVar[Settings] = ContextVar("current_settings")


def get_settings() -> Settings:
    try:
        return current_settings.get()
    except LookupError:
        settings = Settings.from_env()
        current_settings.set(settings)
        return settings


class resetting(Generic[T]):
    """
    A context manager to auto-reset the given context variable.
    It supports both the standard contextmanager protocol and the
    async-contextmanager protocol.
    """

    def __init__(self, ctxvar: ContextVar[T], value: T) -> None:
        self._ctxvar = ctxvar
        self._value = value

    def __enter__(self) -> T:
        self._token = self._ctxvar.set(self._value)
        return self._value

    async def __aenter__(self) -> T:
        self._token = self._ctxvar.set(self._value)
        return self._value

    def __exit__(self, *exc_info) -> Optional[bool]:
        self._ctxvar.reset(self._token)
        return None

    async def __aexit__(self, *exc_info) -> Optional[bool]:
        self._ctxvar.reset(self._token)
        return None


def override_settings(**changes) -> resetting[Settings]:
    """
    Returns a :class:`resetting` scope with the given fields replaced on top of
    the currently active settings.
    """
    return resetting(current_settings, dataclasses.replace(get_settings(), **changes))
