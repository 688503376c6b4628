"""Adversarial leakage measurements for a prior and a channel.

Everything here works on the exact joint distribution of (target records,
outcome) assembled from the prior's support and the channel rows. Maxima range
over positive-probability records and positive-probability outcomes only;
zero-probability joint cells are skipped (they can never attain a maximum
because every outcome column contains a ratio of at least one). Ratio-scale
results stay exact Fractions whenever both inputs are rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

from .prior import JointPrior, PriorError, dataset_distribution
from .mechanism import Channel, ChannelError
from .probability import Prob, log_ratio, nats_to_bits, ratio_div
from .universe import DEFAULT_ENUMERATION_BUDGET, EnumerationBudgetError


class LeakageError(ValueError):
    """Prior and channel disagree, or a target is malformed."""


@dataclass(frozen=True)
class Quantity:
    """One leakage number on every scale that makes sense for it.

    ratio is present for max-type quantities (exp of the nats value, exact
    when inputs are rational) and None for averaged ones. notes flag vacuous
    cases instead of inventing values.
    """

    nats: float
    bits: float
    ratio: Optional[Prob] = None
    witness: Optional[dict] = None
    notes: Tuple[str, ...] = ()


def _normalize_target(prior: JointPrior, target) -> Tuple[int, ...]:
    if isinstance(target, int):
        target = (target,)
    tgt = tuple(sorted(set(int(i) for i in target)))
    if not tgt:
        raise LeakageError("target must name at least one individual")
    for i in tgt:
        if not (0 <= i < prior.universe.n):
            raise LeakageError(f"target {i} out of range for n={prior.universe.n}")
    return tgt


def _check_compatible(prior: JointPrior, channel: Channel):
    if prior.universe is not channel.universe and (
        prior.universe.alphabets != channel.universe.alphabets
    ):
        raise LeakageError("prior and channel are over different universes")


class JointTables:
    """Exact joint of (X_target, outcome) plus both marginals.

    p_x maps target value tuples to prior mass, p_r is aligned with the
    channel outcomes, joint maps (value tuple, outcome index) to mass. Keys
    appear in deterministic sorted order so every scan below is reproducible
    bit for bit.
    """

    def __init__(self, prior: JointPrior, channel: Channel, target,
                 budget: Optional[int] = None):
        _check_compatible(prior, channel)
        self.prior = prior
        self.channel = channel
        self.target = _normalize_target(prior, target)
        if budget is None:
            budget = DEFAULT_ENUMERATION_BUDGET
        if prior.support_size() > budget:
            raise EnumerationBudgetError(prior.support_size(), budget)
        u = prior.universe
        n_out = len(channel.outcomes)
        p_x: Dict[Tuple[str, ...], Prob] = {}
        joint: Dict[Tuple[Tuple[str, ...], int], Prob] = {}
        p_r = [Fraction(0)] * n_out
        for seq, p in prior.iter_support():
            xv = tuple(seq[i] for i in self.target)
            p_x[xv] = p_x.get(xv, 0) + p
            row = channel.rows[u.to_histogram(seq, validate=False)]
            for j in range(n_out):
                q = row[j]
                if q == 0:
                    continue
                w = p * q
                joint[(xv, j)] = joint.get((xv, j), 0) + w
                p_r[j] = p_r[j] + w
        self.p_x = {k: p_x[k] for k in sorted(p_x)}
        self.p_r = p_r
        self.joint = joint

    def posterior(self, xv, j) -> Prob:
        w = self.joint.get((xv, j), 0)
        if self.p_r[j] == 0:
            raise LeakageError(f"outcome index {j} has probability zero")
        return w / self.p_r[j]


def max_mi(prior, channel, target, budget=None, tables=None) -> Quantity:
    """Largest pointwise mutual information between the target's records and
    the outcome: the worst-case multiplicative posterior-to-prior jump."""
    t = tables or JointTables(prior, channel, target, budget)
    best = None
    wit = None
    for xv, px in t.p_x.items():
        if px == 0:
            continue
        for j, label in enumerate(t.channel.outcomes):
            pr = t.p_r[j]
            if pr == 0:
                continue
            w = t.joint.get((xv, j), 0)
            if w == 0:
                continue
            r = (w / px) / pr
            if best is None or r > best:
                best = r
                wit = (xv, label)
    if best is None:
        # Degenerate: the channel has no positive-probability outcome, which
        # row validation rules out; kept for completeness.
        return Quantity(nats=0.0, bits=0.0, ratio=Fraction(1),
                        notes=("no positive joint cells",))
    nats = log_ratio(best)
    return Quantity(
        nats=nats,
        bits=nats_to_bits(nats),
        ratio=best,
        witness={"records": list(wit[0]), "outcome": wit[1]},
    )


def mi(prior, channel, target, budget=None, tables=None) -> Quantity:
    """Mutual information between the target's records and the outcome, in
    nats (averaged, so no ratio scale)."""
    t = tables or JointTables(prior, channel, target, budget)
    total = 0.0
    for (xv, j), w in t.joint.items():
        if w == 0:
            continue
        px = t.p_x[xv]
        pr = t.p_r[j]
        total += float(w) * math.log(float(w) / (float(px) * float(pr)))
    total = max(total, 0.0)
    return Quantity(nats=total, bits=nats_to_bits(total))


def max_rel_entropy(prior, channel, target, budget=None, tables=None) -> Quantity:
    """Largest KL divergence from the posterior on the target's records back
    to the prior, over positive-probability outcomes."""
    t = tables or JointTables(prior, channel, target, budget)
    best = None
    wit = None
    for j, label in enumerate(t.channel.outcomes):
        pr = t.p_r[j]
        if pr == 0:
            continue
        acc = 0.0
        for xv, px in t.p_x.items():
            w = t.joint.get((xv, j), 0)
            if w == 0:
                continue
            post = float(w) / float(pr)
            acc += post * math.log(post / float(px))
        acc = max(acc, 0.0)
        if best is None or acc > best:
            best = acc
            wit = label
    if best is None:
        return Quantity(nats=0.0, bits=0.0, notes=("no positive outcomes",))
    return Quantity(nats=best, bits=nats_to_bits(best), witness={"outcome": wit})


def inferential_eps(prior, channel, target, budget=None, tables=None) -> Quantity:
    """Worst-case log likelihood ratio an outcome induces between two
    admissible assignments of the target's records.

    Vacuous (and flagged) when fewer than two assignments have positive prior
    mass; a hard distinguishing event gives math.inf.
    """
    t = tables or JointTables(prior, channel, target, budget)
    support = [xv for xv, px in t.p_x.items() if px > 0]
    if len(support) < 2:
        return Quantity(
            nats=0.0,
            bits=0.0,
            ratio=Fraction(1),
            notes=("only one admissible assignment; condition is vacuous",),
        )
    best = None
    wit = None
    for a in support:
        pa = t.p_x[a]
        for b in support:
            if a == b:
                continue
            pb = t.p_x[b]
            for j, label in enumerate(t.channel.outcomes):
                la = t.joint.get((a, j), 0) / pa
                lb = t.joint.get((b, j), 0) / pb
                r = ratio_div(la, lb)
                if r is None:
                    continue
                if best is None or r > best:
                    best = r
                    wit = (a, b, label)
    if best is None:
        return Quantity(
            nats=0.0, bits=0.0, ratio=Fraction(1),
            notes=("all likelihood pairs are excluded",),
        )
    nats = log_ratio(best)
    return Quantity(
        nats=nats,
        bits=nats_to_bits(nats),
        ratio=best,
        witness={
            "numerator_records": list(wit[0]),
            "denominator_records": list(wit[1]),
            "outcome": wit[2],
        },
    )


def output_entropy(prior, channel, budget=None) -> Quantity:
    """Entropy of the outcome distribution under the prior."""
    t = JointTables(prior, channel, (0,), budget)
    total = 0.0
    for pr in t.p_r:
        if pr == 0:
            continue
        total -= float(pr) * math.log(float(pr))
    return Quantity(nats=total, bits=nats_to_bits(total))


@dataclass(frozen=True)
class LeakageReport:
    """All per-target quantities plus channel-level summaries."""

    targets: Tuple[Tuple[int, ...], ...]
    per_target: Dict[Tuple[int, ...], Dict[str, Quantity]]
    output_entropy: Quantity
    prior_entropy_nats: float


def leakage_report(prior, channel, targets=None, budget=None) -> LeakageReport:
    """Measure every quantity for each target, sharing one table build per
    target. Default targets: each individual separately."""
    if targets is None:
        targets = list(range(prior.universe.n))
    norm = []
    per: Dict[Tuple[int, ...], Dict[str, Quantity]] = {}
    for tgt in targets:
        t = JointTables(prior, channel, tgt, budget)
        key = t.target
        norm.append(key)
        per[key] = {
            "max_mi": max_mi(prior, channel, key, tables=t),
            "mi": mi(prior, channel, key, tables=t),
            "max_rel_entropy": max_rel_entropy(prior, channel, key, tables=t),
            "inferential_eps": inferential_eps(prior, channel, key, tables=t),
        }
    return LeakageReport(
        targets=tuple(norm),
        per_target=per,
        output_entropy=output_entropy(prior, channel, budget),
        prior_entropy_nats=prior.entropy_nats(),
    )


def expected_distortion(prior, channel, query_values, distortion,
                        budget=None) -> float:
    """Average distortion between a deterministic dataset query and the
    outcome: sum over histograms and outcomes of occurrence mass times row
    mass times distortion(query(h), outcome).

    query_values: callable on histograms or a mapping from histogram tuples.
    distortion: callable (query value, outcome) -> nonnegative float; equal
    arguments must give zero.
    """
    _check_compatible(prior, channel)
    occ = dataset_distribution(prior)
    if callable(query_values):
        qf = query_values
    else:
        table = {tuple(k): v for k, v in query_values.items()}

        def qf(h):
            try:
                return table[h]
            except KeyError:
                raise LeakageError(f"query has no value for histogram {h}")

    total = 0.0
    for h, mass in sorted(occ.items()):
        if mass == 0:
            continue
        qv = qf(h)
        row = channel.rows[h]
        for j, label in enumerate(channel.outcomes):
            p = row[j]
            if p == 0:
                continue
            d = distortion(qv, label)
            if d < 0:
                raise LeakageError(
                    f"distortion({qv!r}, {label!r}) is negative"
                )
            if qv == label and d != 0:
                raise LeakageError(
                    f"distortion({qv!r}, {label!r}) must be zero on equal values"
                )
            total += float(mass) * float(p) * float(d)
    return total
