"""Composition across mechanisms and across epochs.

Two distinct regimes live here. Running several mechanisms on the same
records composes into a product channel over outcome tuples. Running across
epochs draws fresh records each epoch (independent priors), so per-epoch
leakage adds on the log scale; the additive total is verified against a
direct enumeration of the full product space rather than trusting the
factorization.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Dict, Optional, Sequence, Tuple

from .leakage import Quantity, max_mi
from .mechanism import Channel, ChannelError, lipschitz_ratio
from .prior import JointPrior, PriorError
from .probability import Prob, log_ratio, nats_to_bits, parse_probability
from .universe import DEFAULT_ENUMERATION_BUDGET, EnumerationBudgetError
from .audit import Verdict, leq_with_tol


class CompositionError(ValueError):
    """Mismatched components in a composition."""


def product_channel(channels: Sequence[Channel],
                    budget: Optional[int] = None) -> Channel:
    """Simultaneous release of several mechanisms run on the same dataset.

    All channels must share one universe. Outcomes are tuples of component
    outcomes; each row is the product of the component rows.
    """
    if not channels:
        raise CompositionError("need at least one channel")
    u = channels[0].universe
    for c in channels[1:]:
        if c.universe is not u and c.universe.alphabets != u.alphabets:
            raise CompositionError("channels are over different universes")
    if budget is None:
        budget = DEFAULT_ENUMERATION_BUDGET
    n_out = prod(len(c.outcomes) for c in channels)
    cardinality = n_out * len(u.achievable_histograms())
    if cardinality > budget:
        raise EnumerationBudgetError(cardinality, budget)
    outcomes = tuple(itertools.product(*(c.outcomes for c in channels)))
    rows = {}
    for h in u.achievable_histograms():
        comp_rows = [c.rows[h] for c in channels]
        row = []
        for combo in itertools.product(*(range(len(c.outcomes)) for c in channels)):
            p: Prob = Fraction(1)
            for r, j in zip(comp_rows, combo):
                p = p * r[j]
            row.append(p)
        rows[h] = tuple(row)
    return Channel(u, outcomes, rows)


def certify_composition(
    channels: Sequence[Channel],
    k: int,
    *,
    epsilons: Optional[Sequence[float]] = None,
    exp_epsilons: Optional[Sequence] = None,
    budget: Optional[int] = None,
) -> Verdict:
    """Certify that the joint release stays within the summed levels.

    Per-component levels may be given in nats or as exact ratio-scale values.
    The measured side is the exact k-change scan of the product channel, so
    the verdict covers every prior in the k-block family at once.
    """
    if (epsilons is None) == (exp_epsilons is None):
        raise CompositionError("give exactly one of epsilons or exp_epsilons")
    if exp_epsilons is not None:
        units = [parse_probability(e, allow_unit_excess=True) for e in exp_epsilons]
    else:
        units = [math.exp(float(e)) for e in epsilons]
    if len(units) != len(channels):
        raise CompositionError("need one level per channel")
    per_component = []
    for c, unit in zip(channels, units):
        scan = lipschitz_ratio(c, k, budget)
        per_component.append({
            "measured_ratio": scan.ratio,
            "bound_ratio": unit,
            "satisfied": leq_with_tol(scan.ratio, unit),
        })
    bound: Prob = Fraction(1)
    for unit in units:
        bound = bound * unit
    combined = product_channel(channels, budget)
    scan = lipschitz_ratio(combined, k, budget)
    notes = []
    if not all(row["satisfied"] for row in per_component):
        notes.append("a component exceeds its own level; the summed bound "
                     "may still hold but is not implied")
    return Verdict(
        claim="composition stays within the summed levels",
        params={"k": k, "components": len(channels)},
        measured_ratio=scan.ratio,
        measured_nats=scan.nats,
        bound_ratio=bound,
        bound_nats=log_ratio(bound),
        satisfied=leq_with_tol(scan.ratio, bound),
        conclusive=True,
        witness=scan.witness(),
        notes=tuple(notes),
        details={"per_component": per_component},
    )


# ---------------------------------------------------------------------------
# Epochs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpochModel:
    """Independent epochs: one (prior, channel) pair per epoch over the same
    population. Records are redrawn each epoch from that epoch's prior."""

    epochs: Tuple[Tuple[JointPrior, Channel], ...]

    def __post_init__(self):
        if not self.epochs:
            raise CompositionError("need at least one epoch")
        n = self.epochs[0][0].universe.n
        for t, (p, c) in enumerate(self.epochs):
            if p.universe.alphabets != c.universe.alphabets:
                raise CompositionError(f"epoch {t}: prior and channel disagree")
            if p.universe.n != n:
                raise CompositionError(
                    f"epoch {t} has {p.universe.n} individuals, expected {n}"
                )

    @property
    def n(self) -> int:
        return self.epochs[0][0].universe.n


@dataclass(frozen=True)
class EpochReport:
    per_epoch: Tuple[Quantity, ...]
    total_ratio: Prob
    total_nats: float
    total_bits: float


def epoch_leakage(model: EpochModel, target,
                  budget: Optional[int] = None) -> EpochReport:
    """Per-epoch worst-case leakage about the target and the additive total.

    Epochs are independent, so the worst posterior-to-prior jump for the
    whole trajectory is the product of the per-epoch jumps.
    """
    quantities = []
    total: Prob = Fraction(1)
    nats = 0.0
    for p, c in model.epochs:
        q = max_mi(p, c, target, budget)
        quantities.append(q)
        total = total * q.ratio
        nats += q.nats
    return EpochReport(
        per_epoch=tuple(quantities),
        total_ratio=total,
        total_nats=nats,
        total_bits=nats_to_bits(nats),
    )


def direct_epoch_max_mi(model: EpochModel, target,
                        budget: Optional[int] = None) -> Quantity:
    """The same quantity measured from first principles: enumerate the full
    product space of per-epoch sequences and outcome tuples, aggregate the
    joint of (per-epoch target records, outcome tuple), and take the largest
    pointwise mutual information. Exists to check the additive path."""
    if isinstance(target, int):
        tgt = (target,)
    else:
        tgt = tuple(sorted(set(int(i) for i in target)))
    for i in tgt:
        if not (0 <= i < model.n):
            raise CompositionError(f"target {i} out of range")
    if budget is None:
        budget = DEFAULT_ENUMERATION_BUDGET
    support = 1
    out_card = 1
    for p, c in model.epochs:
        support *= p.support_size()
        out_card *= len(c.outcomes)
    if support * out_card > budget:
        raise EnumerationBudgetError(support * out_card, budget)

    epoch_supports = [list(p.iter_support()) for p, _ in model.epochs]
    p_x: Dict[tuple, Prob] = {}
    joint: Dict[tuple, Prob] = {}
    p_r: Dict[tuple, Prob] = {}
    for combo in itertools.product(*epoch_supports):
        mass: Prob = Fraction(1)
        for _, p in combo:
            mass = mass * p
        xkey = tuple(
            tuple(seq[i] for i in tgt) for (seq, _) in combo
        )
        p_x[xkey] = p_x.get(xkey, 0) + mass
        rows = []
        for (seq, _), (p, c) in zip(combo, model.epochs):
            h = p.universe.to_histogram(seq, validate=False)
            rows.append(c.rows[h])
        for out_combo in itertools.product(
            *(range(len(c.outcomes)) for _, c in model.epochs)
        ):
            w = mass
            for row, j in zip(rows, out_combo):
                w = w * row[j]
            if w == 0:
                continue
            joint[(xkey, out_combo)] = joint.get((xkey, out_combo), 0) + w
            p_r[out_combo] = p_r.get(out_combo, 0) + w

    best = None
    wit = None
    for (xkey, out_combo), w in sorted(joint.items()):
        r = (w / p_x[xkey]) / p_r[out_combo]
        if best is None or r > best:
            best = r
            wit = (xkey, out_combo)
    if best is None:
        return Quantity(nats=0.0, bits=0.0, ratio=Fraction(1),
                        notes=("empty joint",))
    nats = log_ratio(best)
    labels = tuple(
        model.epochs[t][1].outcomes[j] for t, j in enumerate(wit[1])
    )
    return Quantity(
        nats=nats,
        bits=nats_to_bits(nats),
        ratio=best,
        witness={
            "records_by_epoch": [list(x) for x in wit[0]],
            "outcomes_by_epoch": list(labels),
        },
    )


def equal_epoch_reduction(prior: JointPrior, channels: Sequence[Channel],
                          target, budget: Optional[int] = None) -> dict:
    """Same records observed through several mechanisms: the trajectory
    leakage equals the product-channel leakage. Returns both measurements
    (product-channel route and a direct tuple-space enumeration) and whether
    they agree exactly."""
    combined = product_channel(channels, budget)
    via_product = max_mi(prior, combined, target, budget)

    if isinstance(target, int):
        tgt = (target,)
    else:
        tgt = tuple(sorted(set(int(i) for i in target)))
    u = prior.universe
    p_x: Dict[tuple, Prob] = {}
    joint: Dict[tuple, Prob] = {}
    p_r: Dict[tuple, Prob] = {}
    for seq, mass in prior.iter_support():
        xv = tuple(seq[i] for i in tgt)
        p_x[xv] = p_x.get(xv, 0) + mass
        h = u.to_histogram(seq, validate=False)
        rows = [c.rows[h] for c in channels]
        for out_combo in itertools.product(
            *(range(len(c.outcomes)) for c in channels)
        ):
            w = mass
            for row, j in zip(rows, out_combo):
                w = w * row[j]
            if w == 0:
                continue
            joint[(xv, out_combo)] = joint.get((xv, out_combo), 0) + w
            p_r[out_combo] = p_r.get(out_combo, 0) + w
    best = None
    for (xv, out_combo), w in sorted(joint.items()):
        r = (w / p_x[xv]) / p_r[out_combo]
        if best is None or r > best:
            best = r
    direct_nats = log_ratio(best) if best is not None else 0.0
    agree = False
    if best is not None:
        if isinstance(best, Fraction) and isinstance(via_product.ratio, Fraction):
            agree = best == via_product.ratio
        else:
            agree = abs(float(best) - float(via_product.ratio)) <= 1e-9 * max(
                1.0, abs(float(via_product.ratio))
            )
    return {
        "via_product_channel": via_product,
        "direct_ratio": best,
        "direct_nats": direct_nats,
        "agree": agree,
    }
