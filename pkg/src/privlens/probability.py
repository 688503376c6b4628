"""Shared numeric conventions: the Fraction/float tower, zero handling, formatting.

Probabilities live in a two-level tower. Values entered as integers or rational
strings become ``fractions.Fraction`` and every derived quantity stays exact;
values entered as decimal floats stay floats and arithmetic degrades gracefully
(Fraction * float is a float under plain Python operators). Logarithms are taken
only at report time.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Prob = Union[Fraction, float]

# Tolerance for row/table normalization checks and verdict comparisons.
TOL = 1e-9

# Residual mass placed on the numerator branch of near-point-mass priors. Small
# enough that the measured sup sits within ~1e-30 of the limiting ratio on the
# exact path, large enough to keep every conditioning event strictly positive.
DEFAULT_ETA = Fraction(1, 10**30)


class ProbabilityError(ValueError):
    """A value could not be interpreted as a probability."""


def parse_probability(value, *, allow_unit_excess=False) -> Prob:
    """Parse a JSON-ish value into the tower.

    int -> Fraction (exact), float -> float, str -> Fraction (accepts "3/4",
    "0.25", "1"). Negative values are rejected; values above 1 are rejected
    unless allow_unit_excess is set (weights and distortion values reuse this
    parser).
    """
    if isinstance(value, bool):
        raise ProbabilityError(f"not a probability: {value!r}")
    if isinstance(value, int):
        out: Prob = Fraction(value)
    elif isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise ProbabilityError(f"not a finite probability: {value!r}")
        out = value
    elif isinstance(value, str):
        try:
            out = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ProbabilityError(f"cannot parse probability {value!r}") from exc
    elif isinstance(value, Fraction):
        out = value
    else:
        raise ProbabilityError(f"cannot parse probability {value!r}")
    if out < 0:
        raise ProbabilityError(f"negative probability {value!r}")
    if not allow_unit_excess and out > 1:
        raise ProbabilityError(f"probability above 1: {value!r}")
    return out


def format_number(value):
    """Render a tower value for a report.

    Fractions become strings ("3/4", "3") so exactness survives JSON. Floats
    stay JSON numbers. Infinities become the strings "inf" / "-inf" because
    JSON has no infinity literal.
    """
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            raise ProbabilityError("refusing to serialize NaN")
        return value
    if isinstance(value, int):
        return value
    return value


def ratio_div(num: Prob, den: Prob):
    """num / den under the audit conventions.

    Positive over zero is +inf (a hard distinguishing event). Zero over zero is
    None (the pair is excluded from maxima). Exactness is preserved when both
    sides are Fractions.
    """
    if den == 0:
        if num == 0:
            return None
        return math.inf
    return num / den


def log_ratio(value) -> float:
    """Natural log of a ratio-scale value, with inf passed through."""
    if value is None:
        raise ProbabilityError("cannot take log of an excluded ratio")
    if isinstance(value, float) and math.isinf(value):
        return math.inf
    if value == 0:
        return -math.inf
    if isinstance(value, Fraction):
        # Avoid float overflow on extreme exact ratios.
        return math.log(value.numerator) - math.log(value.denominator)
    return math.log(value)


def nats_to_bits(nats: float) -> float:
    if math.isinf(nats):
        return nats
    return nats / math.log(2.0)


def entropy_nats(weights) -> float:
    """Shannon entropy of a distribution given as an iterable of masses.

    Zero-mass cells contribute zero. Works on mixed Fraction/float input and
    returns a float in nats.
    """
    total = 0.0
    for w in weights:
        if w == 0:
            continue
        wf = float(w)
        total -= wf * math.log(wf)
    return total


def check_distribution(weights, *, what="distribution", tol=TOL):
    """Validate nonnegativity and normalization, return the values unchanged."""
    s = sum(weights)
    for w in weights:
        if w < 0:
            raise ProbabilityError(f"{what} has a negative entry: {w!r}")
    if abs(float(s) - 1.0) > tol:
        raise ProbabilityError(f"{what} sums to {float(s)!r}, expected 1 within {tol}")
    return weights
