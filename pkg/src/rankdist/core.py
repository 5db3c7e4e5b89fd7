"""Shared domain types: cardinality spectra, compositions and energia constraints.

A *spectrum* is the sorted list of user cardinalities of the signs in a
dictionary.  A *composition* assigns a non-negative occupation number to each
cardinality bin, with the occupations summing to the dictionary length ``N``.
The *energia* of a composition is the occupation-weighted sum of
cardinalities; equiprobable compositions are studied under a one-sided bound
on it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "CardinalitySpectrum",
    "Composition",
    "Direction",
    "EnergiaConstraint",
    "energia_of",
    "satisfies",
    "user_cardinality_transform",
    "excess_factor",
    "excess_minimizer",
]


def _frozen_array(values, dtype):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CardinalitySpectrum:
    """Non-decreasing user cardinalities ``w_1 <= ... <= w_s``.

    Values are stable-sorted on construction, so signs sharing a cardinality
    keep their input order.
    """

    values: np.ndarray
    mean: float = field(init=False)

    def __post_init__(self):
        raw = np.asarray(self.values, dtype=np.float64).ravel()
        if raw.size == 0:
            raise DomainError("spectrum must contain at least one cardinality")
        if not np.all(np.isfinite(raw)) or np.any(raw <= 0):
            raise DomainError("cardinalities must be finite and strictly positive")
        order = np.argsort(raw, kind="stable")
        object.__setattr__(self, "values", _frozen_array(raw[order], np.float64))
        object.__setattr__(self, "mean", math.fsum(self.values) / raw.size)

    @property
    def s(self) -> int:
        return int(self.values.size)

    @property
    def w_min(self) -> float:
        return float(self.values[0])

    @property
    def w_max(self) -> float:
        return float(self.values[-1])

    @property
    def total(self) -> float:
        return math.fsum(self.values)

    def __len__(self):
        return self.s

    @classmethod
    def uniform_grid(cls, s: int, upper: float = 1.0) -> "CardinalitySpectrum":
        """Evenly spaced cardinalities ``upper * i / s`` for ``i = 1..s``."""
        return cls(upper * np.arange(1, s + 1) / s)


@dataclass(frozen=True, eq=False)
class Composition:
    """Occupation numbers ``N_i`` of the bins of a spectrum."""

    counts: np.ndarray
    total: int = None

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size == 0:
            raise DimensionError("counts must be a non-empty 1-d sequence")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.round(counts)):
                raise DomainError("occupation numbers must be integers")
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise DomainError("occupation numbers must be non-negative")
        total = int(counts.sum())
        if self.total is not None and int(self.total) != total:
            raise DomainError(f"counts sum to {total}, expected N={self.total}")
        if total < 1:
            raise DomainError("composition must contain at least one sign")
        object.__setattr__(self, "counts", _frozen_array(counts, np.int64))
        object.__setattr__(self, "total", total)

    @property
    def s(self) -> int:
        return int(self.counts.size)

    def cumulative(self) -> np.ndarray:
        """Cumulative counts ``B_l = N_1 + ... + N_l`` for ``l = 1..s``."""
        return np.cumsum(self.counts)

    def cumulative_probability(self) -> np.ndarray:
        return self.cumulative() / self.total

    def __add__(self, other):
        if not isinstance(other, Composition):
            return NotImplemented
        if other.s != self.s:
            raise DimensionError(f"cannot add compositions of length {self.s} and {other.s}")
        return Composition(self.counts + other.counts)

    def __eq__(self, other):
        if not isinstance(other, Composition):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash(tuple(self.counts.tolist()))

    def __repr__(self):
        return f"Composition({self.counts.tolist()})"


class Direction(enum.Enum):
    AT_MOST = "at_most"
    AT_LEAST = "at_least"

    @classmethod
    def parse(cls, value) -> "Direction":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown constraint direction {value!r}")


@dataclass(frozen=True)
class EnergiaConstraint:
    """One-sided bound on the energia ``sum N_i w_i``.

    ``AT_MOST`` is the regime below the uniform-occupation energia
    ``N * mean(w)``, ``AT_LEAST`` the regime above it, where the solved
    inverse temperature is negative.
    """

    energia: float
    direction: Direction = Direction.AT_LEAST

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction.parse(self.direction))
        e = float(self.energia)
        if not math.isfinite(e) or e < 0:
            raise DomainError("energia must be a finite non-negative number")
        object.__setattr__(self, "energia", e)

    @classmethod
    def from_expectation(cls, expectation: float, n: int, direction=Direction.AT_LEAST):
        """Build from the mean cardinality per sign, ``E = M * N``."""
        return cls(float(expectation) * n, direction)

    def expectation(self, n: int) -> float:
        return self.energia / n

    def admissible(self, spec: CardinalitySpectrum, n: int) -> bool:
        uniform = n * spec.mean
        if self.direction is Direction.AT_LEAST:
            return uniform <= self.energia <= spec.w_max * n
        return self.energia < uniform

    def holds(self, energia: float) -> bool:
        if self.direction is Direction.AT_LEAST:
            return energia >= self.energia
        return energia <= self.energia


def _counts_of(comp):
    if isinstance(comp, Composition):
        return comp.counts
    return np.asarray(comp, dtype=np.int64)


def energia_of(comp, spec: CardinalitySpectrum) -> float:
    """Energia ``sum_i N_i w_i`` of a composition, summed with ``math.fsum``."""
    counts = _counts_of(comp)
    if counts.size != spec.s:
        raise DimensionError(
            f"composition has {counts.size} bins but spectrum has {spec.s}"
        )
    return math.fsum((counts * spec.values).tolist())


def satisfies(comp, spec: CardinalitySpectrum, constraint: EnergiaConstraint, n=None) -> bool:
    """True iff the composition has ``n`` signs and respects the energia bound."""
    counts = _counts_of(comp)
    e = energia_of(counts, spec)
    if n is None:
        n = comp.total if isinstance(comp, Composition) else int(counts.sum())
    return int(counts.sum()) == int(n) and constraint.holds(e)


def _check_shape_params(alpha, gamma):
    if not (alpha > 0 and gamma > 0):
        raise DomainError("alpha and gamma must be positive")


def excess_factor(omega, alpha: float, gamma: float):
    """Relative additional expense ``alpha*w**gamma + 1/(alpha*w**gamma)``."""
    _check_shape_params(alpha, gamma)
    w = np.asarray(omega, dtype=np.float64)
    if np.any(w <= 0):
        raise DomainError("real cardinality must be positive")
    u = alpha * w**gamma
    out = u + 1.0 / u
    return float(out) if out.ndim == 0 else out


def user_cardinality_transform(omega, alpha: float, gamma: float):
    """Map real cardinality to user cardinality.

    ``w~ = w * (1 + alpha * w**gamma + w**(-gamma) / alpha)``.  The extra
    terms model upkeep that grows for expensive items and insecurity that
    grows for cheap ones, so ``w~/w`` is not monotone in ``w``.
    """
    w = np.asarray(omega, dtype=np.float64)
    out = w * (1.0 + excess_factor(w, alpha, gamma))
    return float(out) if np.ndim(out) == 0 else out


def excess_minimizer(alpha: float, gamma: float) -> float:
    """Cardinality ``alpha**(-1/gamma)`` where the additional expense is smallest."""
    _check_shape_params(alpha, gamma)
    return float(alpha ** (-1.0 / gamma))
