"""Discrete mechanisms as histogram-indexed channels, plus the ratio scans
that characterize their worst-case behavior.

A channel maps each achievable dataset histogram to a distribution over a
finite outcome set. Keying rows by histogram makes permutation invariance
structural rather than something to check. Neighborhood for every ratio scan
is the record-change metric: two histograms are within distance k when some
sequence realizing the first can be turned into one realizing the second by
editing at most k coordinates (replacements count once).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

from .probability import (
    TOL,
    Prob,
    log_ratio,
    parse_probability,
    ratio_div,
)
from .universe import (
    BOT,
    DEFAULT_ENUMERATION_BUDGET,
    EnumerationBudgetError,
    RecordUniverse,
)


class ChannelError(ValueError):
    """Malformed channel: bad rows, bad outcomes, bad normalization."""


@dataclass(frozen=True, eq=False)
class Channel:
    """Finite channel from achievable histograms to outcomes.

    rows maps every achievable histogram to a probability tuple aligned with
    ``outcomes``. Construction validates coverage, alignment, nonnegativity,
    and row normalization within 1e-9.
    """

    universe: RecordUniverse
    outcomes: Tuple
    rows: Dict[Tuple[int, ...], Tuple[Prob, ...]]

    def __post_init__(self):
        if not self.outcomes:
            raise ChannelError("channel needs at least one outcome")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ChannelError("outcome labels repeat")
        achievable = set(self.universe.achievable_histograms())
        keys = set(self.rows)
        missing = achievable - keys
        if missing:
            raise ChannelError(
                f"no row for achievable histogram {sorted(missing)[0]}"
            )
        extra = keys - achievable
        if extra:
            raise ChannelError(
                f"row for unachievable histogram {sorted(extra)[0]}"
            )
        for h, row in self.rows.items():
            if len(row) != len(self.outcomes):
                raise ChannelError(
                    f"row {h} has {len(row)} entries for {len(self.outcomes)} outcomes"
                )
            total = 0
            for p in row:
                if p < 0:
                    raise ChannelError(f"negative probability in row {h}")
                total += p
            if abs(float(total) - 1.0) > TOL:
                raise ChannelError(
                    f"row {h} sums to {float(total)!r}, expected 1"
                )

    def row(self, hist) -> Tuple[Prob, ...]:
        hist = tuple(hist)
        try:
            return self.rows[hist]
        except KeyError:
            raise ChannelError(f"no row for histogram {hist}") from None

    def outcome_index(self, label) -> int:
        try:
            return self.outcomes.index(label)
        except ValueError:
            raise ChannelError(f"unknown outcome {label!r}") from None

    def describe(self) -> dict:
        return {
            "outcome_count": len(self.outcomes),
            "row_count": len(self.rows),
        }


def matrix_channel(universe: RecordUniverse, outcomes, raw_rows) -> Channel:
    """Channel from explicit rows; raw_rows maps histogram tuples (or
    canonical count-key strings) to probability lists."""
    rows = {}
    for key, row in raw_rows.items():
        if isinstance(key, str):
            hist = universe.parse_histogram_key(key)
        else:
            hist = tuple(key)
        rows[hist] = tuple(parse_probability(p) for p in row)
    return Channel(universe, tuple(outcomes), rows)


# ---------------------------------------------------------------------------
# Built-in mechanisms
# ---------------------------------------------------------------------------


def geometric_counting_channel(
    universe: RecordUniverse,
    target_symbol: str,
    *,
    ratio=None,
    epsilon: Optional[float] = None,
    max_count: Optional[int] = None,
) -> Channel:
    r"""Truncated symmetric geometric noise on a counting query.

    The query counts individuals whose record equals ``target_symbol``. With
    noise parameter alpha = exp(-epsilon), interior outcomes j get mass
    (1 - alpha)/(1 + alpha) * alpha^|j - c| and the folded boundary outcomes
    absorb their tails: alpha^c / (1 + alpha) at 0 and alpha^(m - c) / (1 + alpha)
    at m. Rows are exactly epsilon-differentially private and rational when
    alpha is given as a rational ``ratio``.
    """
    if (ratio is None) == (epsilon is None):
        raise ChannelError("give exactly one of ratio or epsilon")
    if ratio is not None:
        alpha = parse_probability(ratio, allow_unit_excess=True)
        if not (0 < alpha < 1):
            raise ChannelError("ratio must be strictly between 0 and 1")
    else:
        if epsilon <= 0:
            raise ChannelError("epsilon must be positive")
        alpha = math.exp(-epsilon)
    if target_symbol not in universe.pooled_alphabet:
        raise ChannelError(
            f"target symbol {target_symbol!r} not in the pooled alphabet"
        )
    t_idx = universe.pooled_alphabet.index(target_symbol)
    cap = max(h[t_idx] for h in universe.achievable_histograms())
    m = cap if max_count is None else max_count
    if m < cap:
        raise ChannelError(
            f"max_count {m} is below the largest achievable count {cap}"
        )

    one = Fraction(1)

    def row_for(c: int) -> Tuple[Prob, ...]:
        if m == 0:
            return (one,)
        out = []
        for j in range(m + 1):
            if j == 0:
                out.append(alpha**c / (1 + alpha))
            elif j == m:
                out.append(alpha ** (m - c) / (1 + alpha))
            else:
                out.append((1 - alpha) / (1 + alpha) * alpha ** abs(j - c))
        return tuple(out)

    rows = {
        h: row_for(h[t_idx]) for h in universe.achievable_histograms()
    }
    return Channel(universe, tuple(range(m + 1)), rows)


def randomized_response_channel(universe: RecordUniverse, keep_prob) -> Channel:
    """Per-record randomized response, reported as an output histogram.

    Each record is kept with probability ``keep_prob`` and otherwise resampled
    uniformly from the shared alphabet (the kept value included, so the
    diagonal is keep + (1 - keep)/m). The outcome is the histogram of the
    perturbed sequence; by symmetry the row depends only on the input
    histogram, which is checked structurally by computing from a canonical
    representative.
    """
    alpha0 = universe.alphabets[0]
    for a in universe.alphabets:
        if a != alpha0:
            raise ChannelError(
                "randomized response needs one shared alphabet for everyone"
            )
    keep = parse_probability(keep_prob)
    m = len(alpha0)
    base = (1 - keep) / m
    kernel = {}
    for v in alpha0:
        kernel[v] = {w: (keep + base if w == v else base) for w in alpha0}

    achievable = universe.achievable_histograms()
    outcomes = tuple(universe.histogram_key(h) for h in achievable)
    pooled_index = {s: j for j, s in enumerate(universe.pooled_alphabet)}
    zero = tuple(0 for _ in universe.pooled_alphabet)

    rows = {}
    for h in achievable:
        rep = universe.sequences_with_histogram(h)[0]
        states: Dict[Tuple[int, ...], Prob] = {zero: Fraction(1)}
        for v in rep:
            nxt: Dict[Tuple[int, ...], Prob] = {}
            for partial, p in states.items():
                for w, q in kernel[v].items():
                    if q == 0:
                        continue
                    if w == BOT:
                        key = partial
                    else:
                        lst = list(partial)
                        lst[pooled_index[w]] += 1
                        key = tuple(lst)
                    nxt[key] = nxt.get(key, 0) + p * q
            states = nxt
        rows[h] = tuple(states.get(out_h, Fraction(0)) for out_h in achievable)
    return Channel(universe, outcomes, rows)


# ---------------------------------------------------------------------------
# Change-metric neighborhoods
# ---------------------------------------------------------------------------


def change_histogram_pairs(
    universe: RecordUniverse, k: int, budget: Optional[int] = None
):
    """Unordered pairs of distinct achievable histograms reachable from each
    other by editing at most k records of some realizing sequence.

    For k >= n this is every pair. Returned sorted for deterministic scans.
    """
    if k < 1:
        raise ChannelError("k must be at least 1")
    n = universe.n
    if budget is None:
        budget = DEFAULT_ENUMERATION_BUDGET
    hists = universe.achievable_histograms(budget)
    if k >= n:
        pairs = {
            (a, b)
            for a, b in itertools.combinations(hists, 2)
        }
        return sorted(pairs)
    pairs = set()
    work = 0
    for seq in universe.iter_sequences(budget):
        h1 = universe.to_histogram(seq, validate=False)
        for positions in _position_subsets(n, k):
            value_sets = [universe.alphabets[i] for i in positions]
            for replacement in itertools.product(*value_sets):
                work += 1
                if work > budget:
                    raise EnumerationBudgetError(work, budget)
                edited = list(seq)
                for i, v in zip(positions, replacement):
                    edited[i] = v
                h2 = universe.to_histogram(tuple(edited), validate=False)
                if h2 == h1:
                    continue
                pairs.add((h1, h2) if h1 < h2 else (h2, h1))
    return sorted(pairs)


def change_sequence_pairs(
    universe: RecordUniverse, k: int, budget: Optional[int] = None
):
    """Ordered pairs of distinct sequences differing in at most k coordinates,
    deduplicated and sorted. Used to enumerate worst-case prior candidates."""
    if k < 1:
        raise ChannelError("k must be at least 1")
    n = universe.n
    if budget is None:
        budget = DEFAULT_ENUMERATION_BUDGET
    pairs = set()
    work = 0
    for seq in universe.iter_sequences(budget):
        for positions in _position_subsets(n, min(k, n)):
            value_sets = [universe.alphabets[i] for i in positions]
            for replacement in itertools.product(*value_sets):
                work += 1
                if work > budget:
                    raise EnumerationBudgetError(work, budget)
                if all(seq[i] == v for i, v in zip(positions, replacement)):
                    continue
                edited = list(seq)
                for i, v in zip(positions, replacement):
                    edited[i] = v
                edited = tuple(edited)
                pairs.add((seq, edited))
                pairs.add((edited, seq))
    return sorted(pairs)


def _position_subsets(n: int, k: int):
    for size in range(1, k + 1):
        yield from itertools.combinations(range(n), size)


@dataclass(frozen=True)
class RatioScan:
    """Result of a worst-case row-ratio scan.

    ratio is on the likelihood-ratio scale (Fraction when the channel is
    rational, math.inf on a hard distinguishing event); nats = log(ratio).
    The witness is the maximizing (numerator histogram, denominator
    histogram, outcome label), None when the scan is vacuous.
    """

    ratio: Prob
    nats: float
    num_hist: Optional[Tuple[int, ...]] = None
    den_hist: Optional[Tuple[int, ...]] = None
    outcome: Optional[object] = None
    note: str = ""

    def witness(self) -> Optional[dict]:
        if self.num_hist is None:
            return None
        return {
            "numerator_histogram": list(self.num_hist),
            "denominator_histogram": list(self.den_hist),
            "outcome": self.outcome,
        }


def _scan_pairs(channel: Channel, pairs) -> RatioScan:
    best = None
    wit = None
    for h1, h2 in pairs:
        row1 = channel.rows[h1]
        row2 = channel.rows[h2]
        for j, label in enumerate(channel.outcomes):
            for num_h, den_h, num, den in (
                (h1, h2, row1[j], row2[j]),
                (h2, h1, row2[j], row1[j]),
            ):
                r = ratio_div(num, den)
                if r is None:
                    continue
                if best is None or r > best:
                    best = r
                    wit = (num_h, den_h, label)
    if best is None:
        return RatioScan(
            ratio=Fraction(1),
            nats=0.0,
            note="no comparable pairs; condition is vacuous",
        )
    return RatioScan(
        ratio=best,
        nats=log_ratio(best),
        num_hist=wit[0],
        den_hist=wit[1],
        outcome=wit[2],
    )


def lipschitz_ratio(
    channel: Channel, k: int, budget: Optional[int] = None
) -> RatioScan:
    """Largest row likelihood ratio between histograms within k record
    changes. k >= n reproduces the unrestricted all-pairs ratio."""
    pairs = change_histogram_pairs(channel.universe, k, budget)
    return _scan_pairs(channel, pairs)


def dp_epsilon(channel: Channel, budget: Optional[int] = None) -> RatioScan:
    """Exact differential privacy level: log of the largest one-change row
    ratio. The ratio field carries the exact likelihood-ratio value."""
    return lipschitz_ratio(channel, 1, budget)


def postprocess(channel: Channel, outcome_map) -> Channel:
    """Apply a deterministic outcome-merging map; the image ordering follows
    first appearance along the original outcome tuple."""
    merged_order = []
    for label in channel.outcomes:
        if label not in outcome_map:
            raise ChannelError(f"outcome map misses outcome {label!r}")
        img = outcome_map[label]
        if img not in merged_order:
            merged_order.append(img)
    index = {img: j for j, img in enumerate(merged_order)}
    rows = {}
    for h, row in channel.rows.items():
        acc = [Fraction(0)] * len(merged_order)
        for label, p in zip(channel.outcomes, row):
            j = index[outcome_map[label]]
            acc[j] = acc[j] + p
        rows[h] = tuple(acc)
    return Channel(channel.universe, tuple(merged_order), rows)
