"""Trend classes shared by every stage, plus the package error hierarchy."""

from __future__ import annotations

from enum import IntEnum


class Trend(IntEnum):
    """Three-way trend class with the canonical integer encoding."""

    BEARISH = 0
    NEUTRAL = 1
    BULLISH = 2

    @property
    def term(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value: "str | int | Trend") -> "Trend":
        if isinstance(value, Trend):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown trend class {value!r}") from None
        return cls(int(value))


# Labels (market-derived) and descriptive indicator terms share one vocabulary.
TrendLabel = Trend
TrendTerm = Trend


class TrendlabError(Exception):
    """Base class for all package errors."""


class DataError(TrendlabError):
    """Input data violates a format or domain invariant."""


class InsufficientHistoryError(DataError):
    pass


class DegenerateError(TrendlabError):
    """A computation collapsed to a degenerate case (zero width, zero variance)."""


class OptimizationError(TrendlabError):
    pass


class ConfigError(TrendlabError):
    pass
