"""Certification and refutation of privacy claims by direct enumeration.

Each audit returns a Verdict carrying the measured worst case, the claimed
bound, both on the ratio and the log scale, a witness for the measurement, and
a conclusiveness flag. Conclusive means the search provably covered the worst
case (an exact scan or a theorem-backed extremal family); sampled-only
evidence is never conclusive.
"""

from __future__ import annotations

import itertools
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

from .leakage import JointTables, max_mi
from .mechanism import (
    Channel,
    RatioScan,
    change_sequence_pairs,
    dp_epsilon,
    lipschitz_ratio,
)
from .prior import (
    DEFAULT_ETA,
    FamilyParams,
    JointPrior,
    check_membership,
    extremal_pair_prior,
    extremal_pdelta_prior,
    sample_prior,
)
from .probability import TOL, Prob, log_ratio, parse_probability
from .universe import DEFAULT_ENUMERATION_BUDGET, EnumerationBudgetError


class AuditError(ValueError):
    """Bad audit parameters or a failed theorem premise."""


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    claim: str
    params: dict
    measured_ratio: Prob
    measured_nats: float
    bound_ratio: Prob
    bound_nats: float
    satisfied: bool
    conclusive: bool
    witness: Optional[dict] = None
    notes: Tuple[str, ...] = ()
    details: dict = field(default_factory=dict)


def leq_with_tol(measured, bound, tol: float = TOL) -> bool:
    """measured <= bound with an absolute-plus-relative float tolerance;
    exact comparison when both sides are rational."""
    m_inf = isinstance(measured, float) and math.isinf(measured)
    b_inf = isinstance(bound, float) and math.isinf(bound)
    if m_inf:
        return b_inf
    if b_inf:
        return True
    if isinstance(measured, Fraction) and isinstance(bound, Fraction):
        if measured <= bound:
            return True
    mf, bf = float(measured), float(bound)
    return mf <= bf + tol * max(1.0, abs(bf))


def _parse_bound(epsilon=None, exp_epsilon=None, *, what="epsilon"):
    """Return the ratio-scale bound; rational exp values stay exact."""
    if (epsilon is None) == (exp_epsilon is None):
        raise AuditError(f"give exactly one of {what} or exp_{what}")
    if exp_epsilon is not None:
        val = parse_probability(exp_epsilon, allow_unit_excess=True)
        if val <= 0:
            raise AuditError(f"exp_{what} must be positive")
        return val
    try:
        return math.exp(float(epsilon))
    except OverflowError:
        return math.inf


# ---------------------------------------------------------------------------
# Direct family certificates
# ---------------------------------------------------------------------------


def certify_pk(channel: Channel, k: int, *, epsilon=None, exp_epsilon=None,
               budget: Optional[int] = None) -> Verdict:
    """Certify or refute the k-change privacy level of a channel.

    The iff-characterization makes the row scan exact: the channel keeps
    every family member with a dependent block of at most k individuals below
    exp(epsilon) posterior-to-prior jump iff no pair of histograms within k
    record changes has a row ratio above exp(epsilon).
    """
    if k < 1:
        raise AuditError("k must be at least 1")
    bound = _parse_bound(epsilon, exp_epsilon)
    scan = lipschitz_ratio(channel, k, budget)
    return Verdict(
        claim="k-change privacy level",
        params={"k": k, "bound_source": "epsilon" if epsilon is not None else "exp_epsilon"},
        measured_ratio=scan.ratio,
        measured_nats=scan.nats,
        bound_ratio=bound,
        bound_nats=log_ratio(bound),
        satisfied=leq_with_tol(scan.ratio, bound),
        conclusive=True,
        witness=scan.witness(),
        notes=(scan.note,) if scan.note else (),
    )


# ---------------------------------------------------------------------------
# Worst-case search over a family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SupResult:
    """Largest exp(max_mi) found over a prior family for a target.

    ratio/nats give the sup; witness describes the attaining prior and leak
    cell. conclusive is True only when the extremal strategy ran and nothing
    sampled ever exceeded it.
    """

    ratio: Prob
    nats: float
    target: Tuple[int, ...]
    witness: Optional[dict]
    evaluated: Dict[str, int]
    notes: Tuple[str, ...]
    conclusive: bool


def _normalize_group(universe, target) -> Tuple[int, ...]:
    if isinstance(target, int):
        target = (target,)
    tgt = tuple(sorted(set(int(i) for i in target)))
    if not tgt:
        raise AuditError("target must name at least one individual")
    for i in tgt:
        if not (0 <= i < universe.n):
            raise AuditError(f"target {i} out of range")
    return tgt


def _extremal_pair_candidates(channel, family, tgt, eta, budget):
    """Near-point-mass pair priors compatible with the family's block budget.

    Differing coordinates outside the target group must share one dependent
    block with a group coordinate (otherwise they average out of the ratio),
    which caps the usable radius at |target| + k - 1 record changes.
    """
    u = channel.universe
    n = u.n
    k_eff = n if family.k is None else min(family.k, n)
    radius = min(n, len(tgt) + k_eff - 1)
    for s_num, s_den in change_sequence_pairs(u, radius, budget):
        diff = [i for i in range(n) if s_num[i] != s_den[i]]
        inside = [i for i in diff if i in tgt]
        if not inside:
            continue
        outside = [i for i in diff if i not in tgt]
        if outside:
            if len(outside) > k_eff - 1:
                continue
            block = tuple(sorted(outside + [inside[0]]))
        else:
            block = ()
        prior = extremal_pair_prior(u, s_num, s_den, block=block, eta=eta)
        desc = {
            "kind": "near_point_pair",
            "numerator_sequence": list(s_num),
            "denominator_sequence": list(s_den),
            "dependent_block": list(block),
        }
        yield prior, desc


def _extremal_pdelta_candidates(channel, family, tgt, eta, budget):
    """Shared/private-complement constructions for bounded dependence.

    Only defined for singleton targets, and they occupy one full-size block,
    so they are generated only when the family's block budget allows it."""
    u = channel.universe
    n = u.n
    if len(tgt) != 1 or family.exp_delta is None:
        return
    if family.k is not None and family.k < n:
        return
    i = tgt[0]
    others = [j for j in range(n) if j != i]
    comps = list(itertools.product(*(u.alphabets[j] for j in others)))
    if budget is None:
        budget = DEFAULT_ENUMERATION_BUDGET
    alpha_i = u.alphabets[i]
    count = len(alpha_i) * (len(alpha_i) - 1) * len(comps) ** 3
    if count > budget:
        raise EnumerationBudgetError(count, budget)
    for x_num in alpha_i:
        for x_den in alpha_i:
            if x_num == x_den:
                continue
            for comp_shared in comps:
                for comp_num in comps:
                    for comp_den in comps:
                        prior = extremal_pdelta_prior(
                            u, i, x_num, x_den,
                            comp_shared, comp_num, comp_den,
                            family.exp_delta, eta=eta,
                        )
                        desc = {
                            "kind": "shared_private_complement",
                            "target_records": [x_num, x_den],
                            "shared_complement": list(comp_shared),
                            "private_complements": [list(comp_num), list(comp_den)],
                        }
                        yield prior, desc


def worstcase_sup(
    channel: Channel,
    family: FamilyParams,
    target,
    *,
    strategies: Sequence[str] = ("extremal", "sampled"),
    rng: Optional[random.Random] = None,
    samples: int = 1000,
    eta: Prob = DEFAULT_ETA,
    budget: Optional[int] = None,
    threads: int = 1,
) -> SupResult:
    """Search the family for the largest exp(max_mi) about the target.

    The extremal strategy enumerates the theorem-backed worst-case
    constructions, filters them through check_membership, and runs the real
    measurement on each (no shortcut through the row scan, so agreement
    between the two routes is a genuine cross-check). The sampled strategy
    draws seeded random members. If a sample ever beats every extremal
    candidate the result is demoted to inconclusive, because that would mean
    the extremal list missed the worst case.
    """
    for s in strategies:
        if s not in ("extremal", "sampled"):
            raise AuditError(f"unknown strategy {s!r}")
    tgt = _normalize_group(channel.universe, target)
    best = None
    best_wit = None
    notes = []
    evaluated = {"extremal": 0, "sampled": 0, "rejected_samples": 0,
                 "filtered_candidates": 0}

    def consider(prior, desc, origin):
        nonlocal best, best_wit
        q = max_mi(prior, channel, tgt, budget)
        evaluated[origin] += 1
        r = q.ratio
        if best is None or r > best:
            best = r
            best_wit = dict(desc)
            best_wit["leak"] = q.witness
            best_wit["origin"] = origin

    extremal_best = None
    if "extremal" in strategies:
        for prior, desc in _extremal_pair_candidates(channel, family, tgt, eta, budget):
            if not check_membership(prior, family).ok:
                evaluated["filtered_candidates"] += 1
                continue
            consider(prior, desc, "extremal")
        for prior, desc in _extremal_pdelta_candidates(channel, family, tgt, eta, budget):
            if not check_membership(prior, family).ok:
                evaluated["filtered_candidates"] += 1
                continue
            consider(prior, desc, "extremal")
        extremal_best = best
        if evaluated["extremal"] == 0:
            notes.append(
                "no admissible extremal construction for this family"
            )

    if "sampled" in strategies and samples > 0:
        if rng is None:
            rng = random.Random(0)
            notes.append("no rng given; sampled strategy seeded with 0")
        drawn = []
        for _ in range(samples):
            p = sample_prior(channel.universe, family, rng)
            if p is None:
                evaluated["rejected_samples"] += 1
            else:
                drawn.append(p)

        def eval_one(p):
            return max_mi(p, channel, tgt, budget)

        if threads > 1 and len(drawn) > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(eval_one, drawn))
        else:
            results = [eval_one(p) for p in drawn]
        for p, q in zip(drawn, results):
            evaluated["sampled"] += 1
            r = q.ratio
            if best is None or r > best:
                best = r
                best_wit = {
                    "kind": "sampled_member",
                    "blocks": [list(b) for b in p.blocks],
                    "leak": q.witness,
                    "origin": "sampled",
                }

    if best is None:
        return SupResult(
            ratio=Fraction(1),
            nats=0.0,
            target=tgt,
            witness=None,
            evaluated=evaluated,
            notes=tuple(notes + ["no prior evaluated; sup is vacuous"]),
            conclusive=False,
        )

    conclusive = "extremal" in strategies and evaluated["extremal"] > 0
    if (
        conclusive
        and best_wit is not None
        and best_wit.get("origin") == "sampled"
        and extremal_best is not None
        and float(best) > float(extremal_best) * (1 + 1e-12)
    ):
        conclusive = False
        notes.append(
            "a sampled member exceeded every extremal construction; "
            "treating the sup as inconclusive"
        )
    return SupResult(
        ratio=best,
        nats=log_ratio(best),
        target=tgt,
        witness=best_wit,
        evaluated=evaluated,
        notes=tuple(notes),
        conclusive=conclusive,
    )


# ---------------------------------------------------------------------------
# Tightness of the k-change characterization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TightnessResult:
    scan: RatioScan
    achieved_ratio: Prob
    attained: bool
    target: Optional[int]
    prior_summary: Optional[dict]
    notes: Tuple[str, ...] = ()


def tightness_pk(channel: Channel, k: int, *, eta: Prob = DEFAULT_ETA,
                 budget: Optional[int] = None, tol: float = TOL) -> TightnessResult:
    """Rebuild the scan's worst pair as a near-point-mass member and check the
    measured leak reproduces the row ratio."""
    scan = lipschitz_ratio(channel, k, budget)
    if scan.num_hist is None:
        return TightnessResult(
            scan=scan,
            achieved_ratio=scan.ratio,
            attained=True,
            target=None,
            prior_summary=None,
            notes=("scan was vacuous; nothing to attain",),
        )
    u = channel.universe
    found = None
    for s_num, s_den in change_sequence_pairs(u, k, budget):
        if (
            u.to_histogram(s_num, validate=False) == scan.num_hist
            and u.to_histogram(s_den, validate=False) == scan.den_hist
        ):
            found = (s_num, s_den)
            break
    if found is None:
        # Cannot happen: the scan's pairs come from the same edit moves.
        raise AuditError("no sequence pair realizes the scan witness")
    s_num, s_den = found
    diff = [i for i in range(u.n) if s_num[i] != s_den[i]]
    target = diff[0]
    prior = extremal_pair_prior(u, s_num, s_den, eta=eta)
    achieved = max_mi(prior, channel, target, budget).ratio
    a_inf = isinstance(achieved, float) and math.isinf(achieved)
    s_inf = isinstance(scan.ratio, float) and math.isinf(scan.ratio)
    notes = ()
    if s_inf:
        if a_inf:
            attained = True
        else:
            # No single prior with numerator mass eta can jump past 1/eta,
            # so an infinite level is attained exactly when the witness
            # prior realizes that per-eta ceiling.
            attained = float(achieved) * float(eta) >= 1.0 - tol
            notes = (
                "hard distinguishing event: the level is infinite and the "
                "witness prior attains the 1/eta ceiling",
            )
    elif a_inf:
        attained = False
    else:
        attained = abs(float(achieved) - float(scan.ratio)) <= tol * max(
            1.0, abs(float(scan.ratio))
        )
    return TightnessResult(
        scan=scan,
        achieved_ratio=achieved,
        attained=attained,
        target=target,
        prior_summary={
            "numerator_sequence": list(s_num),
            "denominator_sequence": list(s_den),
            "eta": str(eta),
        },
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Interpolated bound under bounded dependence
# ---------------------------------------------------------------------------


def interpolated_bound(exp_eps_step, k: int, exp_delta):
    """exp(eps/k) * (1 - exp_delta) + exp(eps) * exp_delta on the ratio scale,
    exact on rational inputs (exp(eps) is computed as the k-th power of the
    per-step value)."""
    step = exp_eps_step
    return step * (1 - exp_delta) + step**k * exp_delta


def bound_pdelta(
    channel: Channel,
    k: int,
    *,
    exp_delta,
    epsilon=None,
    exp_eps_step=None,
    target=0,
    strategies: Sequence[str] = ("extremal", "sampled"),
    rng: Optional[random.Random] = None,
    samples: int = 1000,
    eta: Prob = DEFAULT_ETA,
    budget: Optional[int] = None,
    threads: int = 1,
) -> Verdict:
    """Check the dependence-interpolated leakage bound on a channel.

    Premise: the channel's one-change level is at most eps/k (checked).
    exp_eps_step is exp(eps/k) on the ratio scale and keeps everything exact
    when rational; alternatively pass the total epsilon in nats. The family is
    block size <= k with dependence coefficient <= exp_delta; the measured
    side is a genuine worst-case search over that family.
    """
    if k < 1:
        raise AuditError("k must be at least 1")
    exp_delta = parse_probability(exp_delta)
    if exp_eps_step is None and epsilon is None:
        raise AuditError("give exp_eps_step or epsilon")
    if exp_eps_step is not None:
        step = parse_probability(exp_eps_step, allow_unit_excess=True)
    else:
        step = math.exp(float(epsilon) / k)
    dp = dp_epsilon(channel, budget)
    if not leq_with_tol(dp.ratio, step):
        raise AuditError(
            f"premise fails: one-change ratio {float(dp.ratio)!r} exceeds "
            f"per-step bound {float(step)!r}"
        )
    family = FamilyParams(k=k, exp_delta=exp_delta)
    sup = worstcase_sup(
        channel, family, target,
        strategies=strategies, rng=rng, samples=samples,
        eta=eta, budget=budget, threads=threads,
    )
    bound = interpolated_bound(step, k, exp_delta)
    notes = list(sup.notes)
    if exp_delta == 0:
        notes.append("endpoint: bound equals the per-step level exactly")
    if exp_delta == 1:
        notes.append("endpoint: bound equals the full k-step level exactly")
    return Verdict(
        claim="interpolated leakage bound under bounded dependence",
        params={
            "k": k,
            "exp_delta": exp_delta,
            "exp_eps_step": step,
            "target": list(sup.target),
            "samples": samples,
        },
        measured_ratio=sup.ratio,
        measured_nats=sup.nats,
        bound_ratio=bound,
        bound_nats=log_ratio(bound),
        satisfied=leq_with_tol(sup.ratio, bound),
        conclusive=sup.conclusive,
        witness=sup.witness,
        notes=tuple(notes),
        details={"evaluated": sup.evaluated},
    )


# ---------------------------------------------------------------------------
# Mediant necessary condition under bounded dependence
# ---------------------------------------------------------------------------


def necessary_pdelta(
    channel: Channel,
    *,
    exp_delta,
    epsilon=None,
    exp_epsilon=None,
    budget: Optional[int] = None,
) -> Verdict:
    """Exact scan of the mediant condition that bounded-dependence privacy
    at level epsilon forces on the rows.

    For each individual, each pair of their records, and each shared
    complement, the weighted numerator mixes the shared complement (weight
    exp_delta) with the most favorable private complement (weight
    1 - exp_delta); the denominator mixes the shared complement with the
    least favorable one. At exp_delta = 1 this collapses to the one-change
    scan, at exp_delta = 0 to the unrestricted pair scan. As a necessary
    condition it is theorem-backed for exp_delta >= 1/2 (noted otherwise).
    """
    exp_delta = parse_probability(exp_delta)
    bound = _parse_bound(epsilon, exp_epsilon)
    u = channel.universe
    n = u.n
    if budget is None:
        budget = DEFAULT_ENUMERATION_BUDGET

    best = None
    wit = None
    n_out = len(channel.outcomes)
    for i in range(n):
        others = [j for j in range(n) if j != i]
        comps = list(itertools.product(*(u.alphabets[j] for j in others)))
        alpha = u.alphabets[i]
        work = len(alpha) * len(comps) * n_out
        if work > budget:
            raise EnumerationBudgetError(work, budget)

        def seq_of(x_i, comp):
            s = [None] * n
            s[i] = x_i
            for j, sym in zip(others, comp):
                s[j] = sym
            return tuple(s)

        cell = {}
        for x in alpha:
            for c in comps:
                row = channel.rows[u.to_histogram(seq_of(x, c), validate=False)]
                cell[(x, c)] = row
        hi = {}
        lo = {}
        for x in alpha:
            for j in range(n_out):
                vals = [cell[(x, c)][j] for c in comps]
                hi[(x, j)] = max(vals)
                lo[(x, j)] = min(vals)
        for x_num in alpha:
            for x_den in alpha:
                if x_num == x_den:
                    continue
                for c in comps:
                    row_n = cell[(x_num, c)]
                    row_d = cell[(x_den, c)]
                    for j in range(n_out):
                        num = row_n[j] * exp_delta + hi[(x_num, j)] * (1 - exp_delta)
                        den = row_d[j] * exp_delta + lo[(x_den, j)] * (1 - exp_delta)
                        if den == 0:
                            if num == 0:
                                continue
                            r = math.inf
                        else:
                            r = num / den
                        if best is None or r > best:
                            best = r
                            wit = {
                                "individual": i,
                                "numerator_record": x_num,
                                "denominator_record": x_den,
                                "shared_complement": list(c),
                                "outcome": channel.outcomes[j],
                            }
    if best is None:
        best = Fraction(1)
        wit = None
    notes = []
    if float(exp_delta) < 0.5:
        notes.append(
            "exp_delta below 1/2: the scan is exact but its reading as a "
            "necessary condition is only established for exp_delta >= 1/2"
        )
    return Verdict(
        claim="mediant necessary condition under bounded dependence",
        params={"exp_delta": exp_delta},
        measured_ratio=best,
        measured_nats=log_ratio(best),
        bound_ratio=bound,
        bound_nats=log_ratio(bound),
        satisfied=leq_with_tol(best, bound),
        conclusive=True,
        witness=wit,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Averaged sufficiency under near-uniform marginals
# ---------------------------------------------------------------------------


def _band_corners(alphabet, tau):
    """Band-edge marginals for the corner stress set: the first symbol pinned
    at one band edge, the rest uniform. Corners that cannot be normalized
    inside the band are dropped."""
    m = len(alphabet)
    corners = []
    if m < 2:
        return corners
    for sign in (1, -1):
        top = math.exp(sign * tau) / m
        if top >= 1:
            continue
        rest = (1 - top) / (m - 1)
        lo = math.exp(-tau) / m - TOL
        hi = math.exp(tau) / m + TOL
        if rest < lo or rest > hi:
            continue
        corners.append({alphabet[0]: top, **{s: rest for s in alphabet[1:]}})
    return corners


def sufficient_nk(
    channel: Channel,
    k: int,
    *,
    epsilon=None,
    exp_epsilon=None,
    tau: float = 0.0,
    marginals: Optional[Dict[int, Dict[str, object]]] = None,
    budget: Optional[int] = None,
) -> Verdict:
    """Averaged row-ratio scan that is sufficient for the inferential level
    when all but k+1 individuals hold near-uniform independent records.

    For each target individual and each averaging set of n-k-1 others, rows
    are averaged with the averaging set's marginal weights; the remaining k
    coordinates are adversarial on both sides of the ratio. tau = 0 uses
    exact uniform weights (conclusive). tau > 0 without supplied marginals
    evaluates uniform weights plus band-edge corner assignments, which is an
    explicit heuristic (inconclusive). Supplied marginals are validated
    against the band and evaluated exactly.
    """
    u = channel.universe
    n = u.n
    if not (1 <= k <= n - 1):
        raise AuditError(
            "k must be between 1 and n-1; at k = n use the unaveraged scan"
        )
    if tau < 0:
        raise AuditError("tau must be nonnegative")
    bound = _parse_bound(epsilon, exp_epsilon)
    if budget is None:
        budget = DEFAULT_ENUMERATION_BUDGET

    notes = []
    conclusive = True
    supplied = None
    if marginals is not None:
        supplied = {}
        for j, table in marginals.items():
            j = int(j)
            alpha = u.alphabets[j]
            w = {sym: parse_probability(table.get(sym, 0)) for sym in alpha}
            total = sum(w.values())
            if abs(float(total) - 1.0) > TOL:
                raise AuditError(f"marginal for individual {j} does not normalize")
            m = len(alpha)
            lo = math.exp(-tau) / m - TOL
            hi = math.exp(tau) / m + TOL
            for sym, p in w.items():
                if float(p) < lo or float(p) > hi:
                    raise AuditError(
                        f"marginal for individual {j} leaves the band at {sym!r}"
                    )
            supplied[j] = w
        notes.append("evaluated at the supplied in-band marginals")
    elif tau > 0:
        conclusive = False
        notes.append(
            "tau > 0 without supplied marginals: uniform plus band-edge "
            "corner stress set, a heuristic rather than a certificate"
        )

    best = None
    wit = None
    n_out = len(channel.outcomes)

    for i in range(n):
        others = [j for j in range(n) if j != i]
        for avg_set in itertools.combinations(others, n - k - 1):
            free = [j for j in others if j not in avg_set]

            # Weight assignments for the averaging set.
            if supplied is not None:
                options = [[supplied.get(j) or _uniform_marginal(u, j)]
                           for j in avg_set]
            elif tau == 0:
                options = [[_uniform_marginal(u, j)] for j in avg_set]
            else:
                options = []
                for j in avg_set:
                    opts = [_uniform_marginal(u, j)]
                    opts.extend(_band_corners(u.alphabets[j], tau))
                    options.append(opts)
                combos = 1
                for o in options:
                    combos *= len(o)
                if combos > 4096:
                    options = [[_uniform_marginal(u, j)] for j in avg_set]
                    notes.append(
                        "corner stress set too large; fell back to uniform only"
                    )

            for weight_choice in itertools.product(*options):
                weights = dict(zip(avg_set, weight_choice))
                avg_cells = list(
                    itertools.product(*(u.alphabets[j] for j in avg_set))
                )
                free_cells = list(
                    itertools.product(*(u.alphabets[j] for j in free))
                )
                work = len(u.alphabets[i]) * len(avg_cells) * len(free_cells) * n_out
                if work > budget:
                    raise EnumerationBudgetError(work, budget)

                def avg_row(x_i, x_free):
                    acc = [Fraction(0)] * n_out
                    for x_avg in avg_cells:
                        s = [None] * n
                        s[i] = x_i
                        for j, sym in zip(avg_set, x_avg):
                            s[j] = sym
                        for j, sym in zip(free, x_free):
                            s[j] = sym
                        w = Fraction(1)
                        for j, sym in zip(avg_set, x_avg):
                            w = w * weights[j][sym]
                        if w == 0:
                            continue
                        row = channel.rows[u.to_histogram(tuple(s), validate=False)]
                        for jj in range(n_out):
                            acc[jj] = acc[jj] + w * row[jj]
                    return acc

                table = {}
                for x_i in u.alphabets[i]:
                    for x_free in free_cells:
                        table[(x_i, x_free)] = avg_row(x_i, x_free)
                for jj in range(n_out):
                    for x_num in u.alphabets[i]:
                        num = max(table[(x_num, xf)][jj] for xf in free_cells)
                        for x_den in u.alphabets[i]:
                            if x_num == x_den:
                                continue
                            den = min(table[(x_den, xf)][jj] for xf in free_cells)
                            if den == 0:
                                if num == 0:
                                    continue
                                r = math.inf
                            else:
                                r = num / den
                            if best is None or r > best:
                                best = r
                                wit = {
                                    "individual": i,
                                    "averaging_set": list(avg_set),
                                    "numerator_record": x_num,
                                    "denominator_record": x_den,
                                    "outcome": channel.outcomes[jj],
                                }
    if best is None:
        best = Fraction(1)
        wit = None
    return Verdict(
        claim="averaged sufficiency under near-uniform marginals",
        params={"k": k, "tau": tau},
        measured_ratio=best,
        measured_nats=log_ratio(best),
        bound_ratio=bound,
        bound_nats=log_ratio(bound),
        satisfied=leq_with_tol(best, bound),
        conclusive=conclusive,
        witness=wit,
        notes=tuple(notes),
    )


def _uniform_marginal(universe, j):
    alpha = universe.alphabets[j]
    m = len(alpha)
    return {sym: Fraction(1, m) for sym in alpha}


# ---------------------------------------------------------------------------
# Group privacy
# ---------------------------------------------------------------------------


def group_certify(
    channel: Channel,
    k: int,
    group,
    *,
    epsilon=None,
    exp_epsilon=None,
    strategies: Sequence[str] = ("extremal", "sampled"),
    rng: Optional[random.Random] = None,
    samples: int = 500,
    eta: Prob = DEFAULT_ETA,
    budget: Optional[int] = None,
    threads: int = 1,
) -> Verdict:
    """Group leakage under a k-change privacy premise.

    Premise (checked): the channel's k-change level is at most epsilon. The
    measured side searches the k-block family for the largest exp(max_mi)
    about the whole group; the certified chain is measured <=
    exp(epsilon)^(ceil((s-1)/k)+1) <= exp(epsilon)^s for group size s.
    """
    if k < 1:
        raise AuditError("k must be at least 1")
    tgt = _normalize_group(channel.universe, group)
    s = len(tgt)
    bound_unit = _parse_bound(epsilon, exp_epsilon)
    scan = lipschitz_ratio(channel, k, budget)
    if not leq_with_tol(scan.ratio, bound_unit):
        raise AuditError(
            f"premise fails: k-change ratio {float(scan.ratio)!r} exceeds "
            f"exp(epsilon) {float(bound_unit)!r}"
        )
    hops = math.ceil((s - 1) / k) + 1
    if isinstance(bound_unit, Fraction):
        bound_mid: Prob = bound_unit**hops
        bound_full: Prob = bound_unit**s
    else:
        bound_mid = bound_unit**hops if not math.isinf(bound_unit) else math.inf
        bound_full = bound_unit**s if not math.isinf(bound_unit) else math.inf
    family = FamilyParams(k=k)
    sup = worstcase_sup(
        channel, family, tgt,
        strategies=strategies, rng=rng, samples=samples,
        eta=eta, budget=budget, threads=threads,
    )
    chain_ok = leq_with_tol(sup.ratio, bound_mid) and leq_with_tol(
        bound_mid, bound_full
    )
    return Verdict(
        claim="group leakage chain under a k-change premise",
        params={"k": k, "group": list(tgt), "hops": hops, "samples": samples},
        measured_ratio=sup.ratio,
        measured_nats=sup.nats,
        bound_ratio=bound_mid,
        bound_nats=log_ratio(bound_mid),
        satisfied=chain_ok,
        conclusive=sup.conclusive,
        witness=sup.witness,
        notes=sup.notes,
        details={
            "bound_intermediate": bound_mid,
            "bound_group": bound_full,
            "premise_ratio": scan.ratio,
            "evaluated": sup.evaluated,
        },
    )


# ---------------------------------------------------------------------------
# Personalized levels
# ---------------------------------------------------------------------------


def personalized_check(
    channel: Channel,
    prior: JointPrior,
    epsilons,
    *,
    budget: Optional[int] = None,
) -> Verdict:
    """Per-individual leakage against per-individual budgets for one concrete
    prior. epsilons is a sequence of nats levels, one per individual, or a
    mapping from individual to level."""
    n = prior.universe.n
    if isinstance(epsilons, dict):
        levels = {int(i): float(e) for i, e in epsilons.items()}
        if sorted(levels) != list(range(n)):
            raise AuditError("need a level for every individual")
        eps = [levels[i] for i in range(n)]
    else:
        eps = [float(e) for e in epsilons]
        if len(eps) != n:
            raise AuditError(f"need {n} levels, got {len(eps)}")
    rows = []
    all_ok = True
    worst_ratio: Prob = Fraction(1)
    worst_nats = 0.0
    worst_bound: Prob = math.inf
    for i in range(n):
        q = max_mi(prior, channel, i, budget)
        try:
            b = math.exp(eps[i])
        except OverflowError:
            b = math.inf
        ok = leq_with_tol(q.ratio, b)
        all_ok = all_ok and ok
        rows.append({
            "individual": i,
            "measured_ratio": q.ratio,
            "measured_nats": q.nats,
            "bound_nats": eps[i],
            "satisfied": ok,
            "witness": q.witness,
        })
        if float(q.ratio) / max(float(b), 1e-300) > float(worst_ratio) / max(
            float(worst_bound), 1e-300
        ):
            worst_ratio = q.ratio
            worst_nats = q.nats
            worst_bound = b
    return Verdict(
        claim="personalized per-individual levels",
        params={"levels_nats": eps},
        measured_ratio=worst_ratio,
        measured_nats=worst_nats,
        bound_ratio=worst_bound,
        bound_nats=log_ratio(worst_bound),
        satisfied=all_ok,
        conclusive=True,
        witness=None,
        details={"per_individual": rows},
    )
