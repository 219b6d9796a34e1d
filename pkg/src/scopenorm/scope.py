"""Scope and verbosity of a document.

Document length factors into two quantities: the scope (how much ground
the document covers) and the verbosity (how repetitively it covers it),
related by ``length = verbosity * scope``.  This module computes the
scope under three measures, the verbosity derived from it, and the
verbosity-normalized term frequency that the two-stage retrieval models
are built on.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError

LENGTH_POWER = "lengthpower"
UNIQ_LENGTH = "uniqlength"
ENTROPY_POWER = "entropypower"


@dataclass(frozen=True)
class ScopeMeasure:
    """Selects how document scope is computed.

    kind is one of:
      * ``lengthpower``  -- length**beta, with 0 <= beta <= 1
      * ``uniqlength``   -- number of distinct terms
      * ``entropypower`` -- exp of the term-distribution entropy

    The beta bound is what keeps scope non-decreasing and verbosity
    non-decreasing in document length; values outside [0, 1] break one
    of the two and are rejected.
    """

    kind: str
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in (LENGTH_POWER, UNIQ_LENGTH, ENTROPY_POWER):
            raise ConfigError(f"unknown scope measure kind: {self.kind!r}")
        if self.kind == LENGTH_POWER:
            if self.beta is None:
                raise ConfigError("lengthpower requires a beta value")
            if not 0.0 <= self.beta <= 1.0:
                raise ConfigError(
                    f"lengthpower beta must lie in [0, 1] (monotone scope and "
                    f"verbosity both fail otherwise); got {self.beta}"
                )
        elif self.beta is not None:
            raise ConfigError(f"{self.kind} does not take a beta parameter")

    @classmethod
    def length_power(cls, beta: float) -> "ScopeMeasure":
        return cls(LENGTH_POWER, float(beta))

    @classmethod
    def uniq_length(cls) -> "ScopeMeasure":
        return cls(UNIQ_LENGTH)

    @classmethod
    def entropy_power(cls) -> "ScopeMeasure":
        return cls(ENTROPY_POWER)

    @classmethod
    def parse(cls, spec: str) -> "ScopeMeasure":
        """Parse a configuration string: ``lengthpower:<beta>``,
        ``uniqlength``, or ``entropypower``."""
        spec = spec.strip().lower()
        if spec.startswith(LENGTH_POWER):
            rest = spec[len(LENGTH_POWER):]
            if not rest.startswith(":"):
                raise ConfigError("lengthpower needs a beta, e.g. 'lengthpower:0.5'")
            try:
                beta = float(rest[1:])
            except ValueError:
                raise ConfigError(f"bad lengthpower beta: {rest[1:]!r}") from None
            return cls.length_power(beta)
        if spec == UNIQ_LENGTH:
            return cls.uniq_length()
        if spec == ENTROPY_POWER:
            return cls.entropy_power()
        raise ConfigError(f"unknown scope measure: {spec!r}")

    def __str__(self):
        if self.kind == LENGTH_POWER:
            return f"{LENGTH_POWER}:{self.beta:g}"
        return self.kind


def entropy_power(terms: Sequence[str]) -> float:
    """exp(-sum p ln p) over the maximum-likelihood term distribution;
    0 for an empty document."""
    n = len(terms)
    if n == 0:
        return 0.0
    entropy = 0.0
    for count in Counter(terms).values():
        p = count / n
        entropy -= p * math.log(p)
    return math.exp(entropy)


def scope_value(terms: Sequence[str], measure: ScopeMeasure) -> float:
    """Scope of a document under the given measure; 0 for an empty document."""
    n = len(terms)
    if n == 0:
        return 0.0
    if measure.kind == LENGTH_POWER:
        return float(n) ** measure.beta
    if measure.kind == UNIQ_LENGTH:
        return float(len(set(terms)))
    return entropy_power(terms)


def verbosity(terms: Sequence[str], measure: ScopeMeasure) -> float:
    """length / scope; fixed at 1 for an empty document so that scoring
    code never divides by zero (all term frequencies are 0 anyway)."""
    n = len(terms)
    if n == 0:
        return 1.0
    return n / scope_value(terms, measure)


def vn_term_frequency(term: str, terms: Sequence[str], measure: ScopeMeasure,
                      k: float = 1.0) -> float:
    """Verbosity-normalized term frequency: k * tf * scope / length."""
    if k <= 0:
        raise ConfigError(f"verbosity scaling parameter k must be > 0, got {k}")
    n = len(terms)
    if n == 0:
        return 0.0
    tf = sum(1 for t in terms if t == term)
    return k * tf * scope_value(terms, measure) / n


@dataclass(frozen=True)
class DocProfile:
    """Cached per-document quantities under one scope measure.

    measure is None for views that only ever need the raw length (the
    unnormalized retrieval models)."""

    length: int
    scope: float
    verbosity: float
    measure: ScopeMeasure | None

    @classmethod
    def of(cls, terms: Sequence[str], measure: ScopeMeasure) -> "DocProfile":
        n = len(terms)
        s = scope_value(terms, measure)
        v = 1.0 if n == 0 else n / s
        return cls(length=n, scope=s, verbosity=v, measure=measure)
