"""Finite record universes: sequences, histograms, enumeration with budgets.

A universe is an ordered list of per-individual record alphabets. A dataset is a
sequence (one record per individual); mechanisms only ever see its histogram
over the pooled alphabet of non-absent symbols. The absent record is the BOT
symbol and contributes no histogram mass.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import prod
from typing import Iterator, Sequence, Tuple

BOT = "⊥"

DEFAULT_ENUMERATION_BUDGET = 10_000_000


class UniverseError(ValueError):
    """Malformed universe, sequence, or histogram."""


class EnumerationBudgetError(RuntimeError):
    """An enumeration would exceed the configured budget.

    Carries the offending cardinality so callers can report it.
    """

    def __init__(self, cardinality, budget):
        super().__init__(
            f"enumeration of {cardinality} items exceeds budget {budget}"
        )
        self.cardinality = cardinality
        self.budget = budget


def _check_budget(cardinality, budget):
    if budget is None:
        budget = DEFAULT_ENUMERATION_BUDGET
    if cardinality > budget:
        raise EnumerationBudgetError(cardinality, budget)


@dataclass(frozen=True)
class RecordUniverse:
    """Per-individual record alphabets over a shared symbol pool.

    alphabets[i] lists the admissible records of individual i, in the order
    that defines table layouts everywhere else. The pooled alphabet is the
    first-appearance union of non-BOT symbols across individuals and fixes the
    coordinate order of histograms.
    """

    alphabets: Tuple[Tuple[str, ...], ...]

    def __post_init__(self):
        if not self.alphabets:
            raise UniverseError("universe needs at least one individual")
        norm = []
        for i, alpha in enumerate(self.alphabets):
            alpha = tuple(alpha)
            if not alpha:
                raise UniverseError(f"alphabet of individual {i} is empty")
            if len(set(alpha)) != len(alpha):
                raise UniverseError(f"alphabet of individual {i} repeats a symbol")
            for sym in alpha:
                if not isinstance(sym, str) or sym == "":
                    raise UniverseError(
                        f"alphabet of individual {i} has a non-string or empty symbol"
                    )
            norm.append(alpha)
        object.__setattr__(self, "alphabets", tuple(norm))
        pooled = []
        for alpha in self.alphabets:
            for sym in alpha:
                if sym != BOT and sym not in pooled:
                    pooled.append(sym)
        object.__setattr__(self, "pooled_alphabet", tuple(pooled))
        object.__setattr__(self, "_histogram_cache", {})

    @property
    def n(self) -> int:
        return len(self.alphabets)

    def sequence_count(self) -> int:
        return prod(len(a) for a in self.alphabets)

    def validate_sequence(self, seq: Sequence[str]) -> Tuple[str, ...]:
        seq = tuple(seq)
        if len(seq) != self.n:
            raise UniverseError(
                f"sequence length {len(seq)} does not match {self.n} individuals"
            )
        for i, sym in enumerate(seq):
            if sym not in self.alphabets[i]:
                raise UniverseError(
                    f"symbol {sym!r} is not in the alphabet of individual {i}"
                )
        return seq

    def iter_sequences(self, budget=None) -> Iterator[Tuple[str, ...]]:
        """All dataset sequences in lexicographic alphabet order."""
        _check_budget(self.sequence_count(), budget)
        return itertools.product(*self.alphabets)

    def to_histogram(self, seq: Sequence[str], *, validate=True) -> Tuple[int, ...]:
        """Histogram of a sequence over the pooled alphabet (BOT drops out)."""
        if validate:
            seq = self.validate_sequence(seq)
        idx = self._pooled_index()
        counts = [0] * len(self.pooled_alphabet)
        for sym in seq:
            if sym != BOT:
                counts[idx[sym]] += 1
        return tuple(counts)

    def _pooled_index(self):
        cache = self._histogram_cache
        if "index" not in cache:
            cache["index"] = {s: j for j, s in enumerate(self.pooled_alphabet)}
        return cache["index"]

    def achievable_histograms(self, budget=None) -> Tuple[Tuple[int, ...], ...]:
        """Sorted tuple of histograms achievable by some sequence."""
        cache = self._histogram_cache
        if "achievable" not in cache:
            seen = set()
            for seq in self.iter_sequences(budget):
                seen.add(self.to_histogram(seq, validate=False))
            cache["achievable"] = tuple(sorted(seen))
        return cache["achievable"]

    def sequences_with_histogram(self, hist, budget=None):
        """All sequences producing a given histogram, lexicographic order."""
        hist = tuple(hist)
        out = []
        for seq in self.iter_sequences(budget):
            if self.to_histogram(seq, validate=False) == hist:
                out.append(seq)
        return out

    def histogram_label(self, hist) -> str:
        """Human-readable rendering, e.g. ``a=2,b=0``; counts-only when pooled
        alphabet is empty."""
        hist = tuple(hist)
        if len(hist) != len(self.pooled_alphabet):
            raise UniverseError(
                f"histogram length {len(hist)} does not match pooled alphabet"
            )
        if not hist:
            return "(empty)"
        return ",".join(f"{s}={c}" for s, c in zip(self.pooled_alphabet, hist))

    def histogram_key(self, hist) -> str:
        """Canonical machine key: comma-joined counts in pooled order."""
        hist = tuple(hist)
        if len(hist) != len(self.pooled_alphabet):
            raise UniverseError(
                f"histogram length {len(hist)} does not match pooled alphabet"
            )
        return ",".join(str(c) for c in hist)

    def parse_histogram_key(self, key: str) -> Tuple[int, ...]:
        parts = [p.strip() for p in str(key).split(",")]
        try:
            hist = tuple(int(p) for p in parts)
        except ValueError as exc:
            raise UniverseError(f"bad histogram key {key!r}") from exc
        if len(hist) != len(self.pooled_alphabet):
            raise UniverseError(
                f"histogram key {key!r} has {len(hist)} counts, expected "
                f"{len(self.pooled_alphabet)}"
            )
        if any(c < 0 for c in hist):
            raise UniverseError(f"negative count in histogram key {key!r}")
        return hist


def l1_distance(h1, h2) -> int:
    """L1 distance between two histograms of equal length."""
    h1, h2 = tuple(h1), tuple(h2)
    if len(h1) != len(h2):
        raise UniverseError("histograms have different lengths")
    return sum(abs(a - b) for a, b in zip(h1, h2))


def uniform_universe(n: int, alphabet: Sequence[str]) -> RecordUniverse:
    """n individuals sharing one alphabet."""
    if n < 1:
        raise UniverseError("need at least one individual")
    alpha = tuple(alphabet)
    return RecordUniverse(tuple(alpha for _ in range(n)))
