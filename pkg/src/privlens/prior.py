"""Structured adversary priors: block-factorized joints, dependence measures,
family membership, samplers, and worst-case constructions.

A prior factorizes over disjoint blocks of individuals. Each block carries an
explicit probability table over the product of its members' alphabets; blocks
are mutually independent. This covers everything from fully independent
adversaries to a fully dependent joint (one block containing everyone).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Dict, Iterator, Optional, Sequence, Tuple

from .probability import (
    DEFAULT_ETA,
    TOL,
    Prob,
    ProbabilityError,
    entropy_nats,
    parse_probability,
)
from .universe import EnumerationBudgetError, RecordUniverse, UniverseError


class PriorError(ValueError):
    """Malformed prior: bad blocks, bad tables, bad normalization."""


# ---------------------------------------------------------------------------
# The prior itself
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointPrior:
    """Block-factorized joint distribution over dataset sequences.

    blocks
        Disjoint index tuples covering every individual exactly once. Each
        block is sorted ascending; blocks are ordered by first element.
    tables
        One mapping per block from value tuples (aligned with the block's
        sorted indices) to probabilities. Zero-mass cells may be omitted.
    """

    universe: RecordUniverse
    blocks: Tuple[Tuple[int, ...], ...]
    tables: Tuple[Dict[Tuple[str, ...], Prob], ...]

    def __post_init__(self):
        u = self.universe
        blocks = tuple(tuple(sorted(b)) for b in self.blocks)
        order = sorted(range(len(blocks)), key=lambda j: blocks[j][0] if blocks[j] else -1)
        blocks = tuple(blocks[j] for j in order)
        tables = tuple(dict(self.tables[j]) for j in order)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "tables", tables)

        seen = set()
        for b in blocks:
            if not b:
                raise PriorError("empty block")
            for i in b:
                if i in seen:
                    raise PriorError(f"individual {i} appears in two blocks")
                if not (0 <= i < u.n):
                    raise PriorError(f"block index {i} out of range for n={u.n}")
                seen.add(i)
        if len(seen) != u.n:
            missing = sorted(set(range(u.n)) - seen)
            raise PriorError(f"blocks do not cover individuals {missing}")

        for b, table in zip(blocks, tables):
            if not table:
                raise PriorError(f"block {b} has an empty table")
            total = 0
            for key, p in table.items():
                key = tuple(key)
                if len(key) != len(b):
                    raise PriorError(f"table key {key} does not match block {b}")
                for i, sym in zip(b, key):
                    if sym not in u.alphabets[i]:
                        raise PriorError(
                            f"symbol {sym!r} not in alphabet of individual {i}"
                        )
                if p < 0:
                    raise PriorError(f"negative probability at {key} in block {b}")
                total += p
            if abs(float(total) - 1.0) > TOL:
                raise PriorError(
                    f"table of block {b} sums to {float(total)!r}, expected 1"
                )

    # -- basic queries ------------------------------------------------------

    def block_of(self, i: int) -> int:
        for j, b in enumerate(self.blocks):
            if i in b:
                return j
        raise PriorError(f"individual {i} not covered")

    def max_block_size(self) -> int:
        return max(len(b) for b in self.blocks)

    def prob(self, seq: Sequence[str]) -> Prob:
        """Probability of a full dataset sequence."""
        seq = self.universe.validate_sequence(seq)
        out: Prob = Fraction(1)
        for b, table in zip(self.blocks, self.tables):
            key = tuple(seq[i] for i in b)
            cell = table.get(key, 0)
            if cell == 0:
                return 0 * out
            out = out * cell
        return out

    def iter_support(self) -> Iterator[Tuple[Tuple[str, ...], Prob]]:
        """Yield (sequence, probability) over the strictly positive support."""
        block_items = []
        for table in self.tables:
            items = [(k, p) for k, p in table.items() if p > 0]
            block_items.append(items)
        for combo in itertools.product(*block_items):
            seq = [None] * self.universe.n
            p: Prob = Fraction(1)
            for (key, cell), b in zip(combo, self.blocks):
                for i, sym in zip(b, key):
                    seq[i] = sym
                p = p * cell
            yield tuple(seq), p

    def support_size(self) -> int:
        return prod(
            sum(1 for p in table.values() if p > 0) for table in self.tables
        )

    def marginal(self, indices: Sequence[int]) -> Dict[Tuple[str, ...], Prob]:
        """Marginal over a sorted tuple of individuals.

        Blocks not intersecting the index set integrate out exactly.
        """
        idx = tuple(sorted(set(indices)))
        if not idx:
            raise PriorError("marginal needs at least one individual")
        partial: Dict[Tuple[int, ...], Dict[Tuple[str, ...], Prob]] = {}
        for b, table in zip(self.blocks, self.tables):
            keep = tuple(i for i in b if i in idx)
            if not keep:
                continue
            pos = [b.index(i) for i in keep]
            agg: Dict[Tuple[str, ...], Prob] = {}
            for key, p in table.items():
                if p == 0:
                    continue
                sub = tuple(key[j] for j in pos)
                agg[sub] = agg.get(sub, 0) + p
            partial[keep] = agg
        out: Dict[Tuple[str, ...], Prob] = {(): Fraction(1)}
        covered: Tuple[int, ...] = ()
        for keep, agg in partial.items():
            nxt: Dict[Tuple[str, ...], Prob] = {}
            merged = covered + keep
            order = sorted(range(len(merged)), key=lambda j: merged[j])
            for key0, p0 in out.items():
                for key1, p1 in agg.items():
                    raw = key0 + key1
                    nxt_key = tuple(raw[j] for j in order)
                    nxt[nxt_key] = nxt.get(nxt_key, 0) + p0 * p1
            covered = tuple(sorted(merged))
            out = nxt
        return out

    def entropy_nats(self) -> float:
        """Entropy of the full joint; blocks are independent so it is the sum
        of the per-block table entropies."""
        return sum(entropy_nats(t.values()) for t in self.tables)

    def describe(self) -> dict:
        return {
            "blocks": [list(b) for b in self.blocks],
            "support_size": self.support_size(),
            "max_block_size": self.max_block_size(),
        }


def independent_prior(
    universe: RecordUniverse, marginals: Sequence[Dict[str, Prob]]
) -> JointPrior:
    """All-singleton-blocks prior from per-individual marginals."""
    if len(marginals) != universe.n:
        raise PriorError("need one marginal per individual")
    blocks = tuple((i,) for i in range(universe.n))
    tables = tuple(
        {(sym,): p for sym, p in m.items()} for m in marginals
    )
    return JointPrior(universe, blocks, tables)


def prior_from_flat(
    universe: RecordUniverse,
    blocks: Sequence[Sequence[int]],
    flat_tables: Sequence[Sequence],
) -> JointPrior:
    """Build from flat arrays in row-major order over each block's alphabets
    (block indices sorted ascending; alphabets in universe order)."""
    blocks = tuple(tuple(sorted(b)) for b in blocks)
    tables = []
    for b, flat in zip(blocks, flat_tables):
        keys = list(itertools.product(*(universe.alphabets[i] for i in b)))
        if len(flat) != len(keys):
            raise PriorError(
                f"block {b} expects {len(keys)} entries, got {len(flat)}"
            )
        table = {}
        for key, raw in zip(keys, flat):
            p = parse_probability(raw)
            if p != 0:
                table[key] = p
        tables.append(table)
    if len(tables) != len(blocks):
        raise PriorError("need one table per block")
    return JointPrior(universe, blocks, tuple(tables))


# ---------------------------------------------------------------------------
# Derived distributions
# ---------------------------------------------------------------------------


def dataset_distribution(prior: JointPrior) -> Dict[Tuple[int, ...], Prob]:
    """Distribution over achievable histograms induced by the prior."""
    out: Dict[Tuple[int, ...], Prob] = {}
    u = prior.universe
    for seq, p in prior.iter_support():
        h = u.to_histogram(seq, validate=False)
        out[h] = out.get(h, 0) + p
    return out


def dataset_prob(prior: JointPrior, hist) -> Prob:
    """Probability that the dataset histogram equals ``hist``."""
    hist = tuple(hist)
    return dataset_distribution(prior).get(hist, Fraction(0))


def verify_factorization(prior: JointPrior, full_table, tol: float = TOL):
    """Check a claimed full joint table against the block factorization.

    full_table maps full sequences to probabilities; missing sequences count
    as zero. Returns (ok, max_abs_error, witness_sequence).
    """
    table = {}
    for key, raw in full_table.items():
        seq = prior.universe.validate_sequence(key)
        table[seq] = parse_probability(raw)
    worst = 0.0
    witness = None
    for seq in prior.universe.iter_sequences():
        want = table.get(seq, 0)
        got = prior.prob(seq)
        err = abs(float(got) - float(want))
        if err > worst:
            worst = err
            witness = seq
    return worst <= tol, worst, witness


# ---------------------------------------------------------------------------
# Dependence coefficient
# ---------------------------------------------------------------------------


def sigma(prior: JointPrior):
    r"""Worst-case dependence coefficient of the prior.

    For each individual i and each pair of positive-probability records
    (x, x'), the overlap of the two conditional distributions of everyone
    else is \sum_c min(P(c | x), P(c | x')). Blocks other than i's own cancel
    from the overlap, so only i's block complement is enumerated. sigma is one
    minus the smallest overlap; an independent individual contributes overlap
    one. Returns (value, witness) where witness is (i, x, x') or None when no
    individual admits two positive records.
    """
    best = None
    witness = None
    for j, (b, table) in enumerate(zip(prior.blocks, prior.tables)):
        for pos, i in enumerate(b):
            marg: Dict[str, Prob] = {}
            for key, p in table.items():
                if p == 0:
                    continue
                marg[key[pos]] = marg.get(key[pos], 0) + p
            values = [v for v in prior.universe.alphabets[i] if marg.get(v, 0) > 0]
            if len(values) < 2:
                continue
            cond: Dict[str, Dict[Tuple[str, ...], Prob]] = {v: {} for v in values}
            for key, p in table.items():
                if p == 0 or key[pos] not in cond:
                    continue
                comp = key[:pos] + key[pos + 1 :]
                d = cond[key[pos]]
                d[comp] = d.get(comp, 0) + p
            for a_idx in range(len(values)):
                for b_idx in range(a_idx + 1, len(values)):
                    va, vb = values[a_idx], values[b_idx]
                    da, db = cond[va], cond[vb]
                    ma, mb = marg[va], marg[vb]
                    overlap = 0
                    for comp, pa in da.items():
                        pb = db.get(comp)
                        if pb is None:
                            continue
                        overlap = overlap + min(pa / ma, pb / mb)
                    if best is None or overlap < best:
                        best = overlap
                        witness = (i, va, vb)
    if best is None:
        return Fraction(0), None
    return 1 - best, witness


# ---------------------------------------------------------------------------
# Uniformity band
# ---------------------------------------------------------------------------


def uniformity_band(prior: JointPrior, tau) -> Tuple[int, Tuple[int, ...]]:
    """Individuals whose marginal is within exp(+-tau) of uniform.

    The test is exp(-tau) <= p(x) * |alphabet| <= exp(tau) for every admissible
    record x (records of probability zero fail for finite tau). Returns
    (count, sorted tuple of in-band individuals).
    """
    if tau is None:
        raise PriorError("tau is required for a band computation")
    tau = float(tau)
    if tau < 0:
        raise PriorError("tau must be nonnegative")
    in_band = []
    for i in range(prior.universe.n):
        if math.isinf(tau):
            in_band.append(i)
            continue
        lo = math.exp(-tau) - TOL
        hi = math.exp(tau) + TOL
        marg = prior.marginal((i,))
        m = len(prior.universe.alphabets[i])
        ok = True
        for sym in prior.universe.alphabets[i]:
            scaled = float(marg.get((sym,), 0)) * m
            if scaled < lo or scaled > hi:
                ok = False
                break
        if ok:
            in_band.append(i)
    return len(in_band), tuple(in_band)


# ---------------------------------------------------------------------------
# Families and membership
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyParams:
    """Constraints defining a prior family. Every field is optional.

    k           largest allowed dependent block
    exp_delta   cap on the dependence coefficient sigma (stored on the ratio
                scale; delta = log(exp_delta) <= 0)
    ell, tau    at least ell individuals within the exp(+-tau) uniformity band
    """

    k: Optional[int] = None
    exp_delta: Optional[Prob] = None
    ell: Optional[int] = None
    tau: Optional[float] = None

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise PriorError("k must be at least 1")
        if self.exp_delta is not None:
            if self.exp_delta < 0 or self.exp_delta > 1:
                raise PriorError("exp_delta must be in [0, 1]")
        if self.ell is not None and self.ell < 0:
            raise PriorError("ell must be nonnegative")
        if self.tau is not None and float(self.tau) < 0:
            raise PriorError("tau must be nonnegative")

    @classmethod
    def of(cls, k=None, delta=None, exp_delta=None, ell=None, tau=None):
        """Normalize the two delta spellings; exp_delta wins when both given
        and consistent, conflicts raise."""
        if delta is not None:
            if delta > 0:
                raise PriorError("delta must be nonpositive")
            from_delta = 0.0 if math.isinf(delta) else math.exp(delta)
            if exp_delta is None:
                exp_delta = from_delta
            elif abs(float(exp_delta) - from_delta) > TOL:
                raise PriorError("delta and exp_delta disagree")
        if exp_delta is not None and not isinstance(exp_delta, (int, float, Fraction)):
            exp_delta = parse_probability(exp_delta)
        return cls(k=k, exp_delta=exp_delta, ell=ell, tau=tau)

    def is_vacuous(self) -> bool:
        return (
            self.k is None
            and self.exp_delta is None
            and self.ell is None
            and self.tau is None
        )

    def effective_band(self):
        """(tau, ell) with the vacuous completions applied, or None if the
        band constraint is absent entirely."""
        if self.ell is None and self.tau is None:
            return None
        tau = math.inf if self.tau is None else float(self.tau)
        ell = 0 if self.ell is None else self.ell
        return tau, ell

    def describe(self) -> dict:
        out = {}
        if self.k is not None:
            out["k"] = self.k
        if self.exp_delta is not None:
            out["exp_delta"] = self.exp_delta
        if self.ell is not None:
            out["ell"] = self.ell
        if self.tau is not None:
            out["tau"] = self.tau
        return out


@dataclass(frozen=True)
class MembershipReport:
    ok: bool
    violations: Tuple[str, ...]
    notes: Tuple[str, ...]
    max_block_size: int
    sigma_value: Optional[Prob] = None
    sigma_witness: Optional[tuple] = None
    band_count: Optional[int] = None
    in_band: Optional[Tuple[int, ...]] = None


def check_membership(prior: JointPrior, family: FamilyParams) -> MembershipReport:
    """Decide family membership, reporting every violated constraint."""
    violations = []
    notes = []
    max_block = prior.max_block_size()
    if family.k is not None and max_block > family.k:
        violations.append(
            f"largest dependent block has size {max_block}, allowed {family.k}"
        )
    sig_val = None
    sig_wit = None
    if family.exp_delta is not None:
        sig_val, sig_wit = sigma(prior)
        if float(sig_val) > float(family.exp_delta) + TOL:
            violations.append(
                f"dependence coefficient {float(sig_val)!r} exceeds "
                f"exp_delta {float(family.exp_delta)!r}"
            )
    band_count = None
    in_band = None
    band = family.effective_band()
    if band is not None:
        tau, ell = band
        if family.tau is None:
            notes.append("ell given without tau: band treated as unbounded")
        if family.ell is None:
            notes.append("tau given without ell: constraint is vacuous")
        band_count, in_band = uniformity_band(prior, tau)
        if band_count < ell:
            violations.append(
                f"only {band_count} individuals in the uniformity band, need {ell}"
            )
    if family.is_vacuous():
        notes.append("family has no constraints; every prior is a member")
    return MembershipReport(
        ok=not violations,
        violations=tuple(violations),
        notes=tuple(notes),
        max_block_size=max_block,
        sigma_value=sig_val,
        sigma_witness=sig_wit,
        band_count=band_count,
        in_band=in_band,
    )


# ---------------------------------------------------------------------------
# Sampler
# ---------------------------------------------------------------------------


def _dirichlet(rng, m):
    # Uniform on the simplex via normalized exponentials; only rng.random()
    # is used so the stream is stable across Python versions.
    es = [-math.log(max(rng.random(), 1e-300)) for _ in range(m)]
    s = sum(es)
    return [e / s for e in es]


def sample_prior(
    universe: RecordUniverse,
    family: FamilyParams,
    rng,
    *,
    tries: int = 200,
) -> Optional[JointPrior]:
    """Draw a random family member, or None when rejection keeps failing.

    The block structure follows the family's dependent-block reading: one
    block of size at most k (possibly size one) and singletons elsewhere.
    exp_delta == 0 forces full independence. Band individuals are kept as
    singleton blocks so their marginals can be drawn inside the band
    directly; tau == 0 marginals are exactly uniform.
    """
    n = universe.n
    k_eff = n if family.k is None else min(family.k, n)
    band = family.effective_band()
    ell_req = 0
    tau = math.inf
    if band is not None:
        tau, ell_req = band
        ell_req = min(ell_req, n)
    force_independent = family.exp_delta is not None and family.exp_delta == 0

    for _ in range(tries):
        band_set = sorted(rng.sample(range(n), ell_req)) if ell_req else []
        free = [i for i in range(n) if i not in band_set]
        max_b = 1 if force_independent else min(k_eff, max(len(free), 1))
        b_size = 1 if max_b <= 1 else rng.randint(1, max_b)
        if b_size > 1 and len(free) >= b_size:
            members = tuple(sorted(rng.sample(free, b_size)))
        else:
            members = ()

        blocks = []
        tables = []
        if members:
            blocks.append(members)
            cells = list(
                itertools.product(*(universe.alphabets[i] for i in members))
            )
            weights = _dirichlet(rng, len(cells))
            tables.append({c: w for c, w in zip(cells, weights)})
        for i in range(n):
            if i in members:
                continue
            alpha = universe.alphabets[i]
            m = len(alpha)
            if i in band_set and not math.isinf(tau):
                if tau == 0:
                    ws = [Fraction(1, m)] * m
                else:
                    raw = [math.exp(rng.uniform(-tau, tau)) for _ in range(m)]
                    s = sum(raw)
                    ws = [w / s for w in raw]
            else:
                ws = _dirichlet(rng, m)
            blocks.append((i,))
            tables.append({(sym,): w for sym, w in zip(alpha, ws)})
        candidate = JointPrior(universe, tuple(blocks), tuple(tables))
        if check_membership(candidate, family).ok:
            return candidate
    return None


# ---------------------------------------------------------------------------
# Worst-case constructions
# ---------------------------------------------------------------------------


def extremal_pair_prior(
    universe: RecordUniverse,
    seq_num: Sequence[str],
    seq_den: Sequence[str],
    *,
    block: Optional[Sequence[int]] = None,
    eta: Prob = DEFAULT_ETA,
) -> JointPrior:
    """Near-point-mass prior concentrated on a pair of sequences.

    Mass eta goes to seq_num and 1 - eta to seq_den. Differing coordinates
    listed in ``block`` form one dependent block; remaining differing
    coordinates become independent two-point singletons; agreeing coordinates
    are point masses. With block = all differing coordinates this is the
    dependent-block worst case; leaving some out models a group adversary with
    independent per-member uncertainty.
    """
    seq_num = universe.validate_sequence(seq_num)
    seq_den = universe.validate_sequence(seq_den)
    if not (0 < eta < 1):
        raise PriorError("eta must be strictly between 0 and 1")
    diff = [i for i in range(universe.n) if seq_num[i] != seq_den[i]]
    if not diff:
        raise PriorError("sequences are identical; no pair to concentrate on")
    if block is None:
        block = diff
    block = tuple(sorted(set(block)))
    for i in block:
        if i not in diff:
            raise PriorError(
                f"coordinate {i} in the dependent block does not differ"
            )
    blocks = []
    tables = []
    if block:
        blocks.append(block)
        key_num = tuple(seq_num[i] for i in block)
        key_den = tuple(seq_den[i] for i in block)
        tables.append({key_num: eta, key_den: 1 - eta})
    for i in range(universe.n):
        if i in block:
            continue
        blocks.append((i,))
        if i in diff:
            tables.append({(seq_num[i],): eta, (seq_den[i],): 1 - eta})
        else:
            tables.append({(seq_num[i],): Fraction(1)})
    return JointPrior(universe, tuple(blocks), tuple(tables))


def extremal_pdelta_prior(
    universe: RecordUniverse,
    i: int,
    x_num: str,
    x_den: str,
    comp_shared: Sequence[str],
    comp_num: Sequence[str],
    comp_den: Sequence[str],
    exp_delta,
    *,
    eta: Prob = DEFAULT_ETA,
) -> JointPrior:
    """Worst case for bounded dependence: target record steers the complement
    onto a private branch with weight 1 - exp_delta and a shared branch with
    weight exp_delta.

    Complements are tuples over the other n-1 coordinates in ascending
    coordinate order. The dependence coefficient of the result is
    1 - exp_delta when the two private complements differ, which is a family
    member exactly when exp_delta >= 1/2.
    """
    if not (0 <= universe.n) or universe.n < 1:
        raise PriorError("universe must be nonempty")
    if not (0 <= i < universe.n):
        raise PriorError(f"target {i} out of range")
    exp_delta = parse_probability(exp_delta)
    if not (0 < eta < 1):
        raise PriorError("eta must be strictly between 0 and 1")
    if x_num == x_den:
        raise PriorError("target records must differ")
    others = [j for j in range(universe.n) if j != i]

    def full(x_i, comp):
        comp = tuple(comp)
        if len(comp) != len(others):
            raise PriorError("complement length does not match n-1")
        seq = [None] * universe.n
        seq[i] = x_i
        for j, sym in zip(others, comp):
            seq[j] = sym
        return universe.validate_sequence(seq)

    cells: Dict[Tuple[str, ...], Prob] = {}

    def add(seq, w):
        if w == 0:
            return
        cells[seq] = cells.get(seq, 0) + w

    add(full(x_num, comp_shared), eta * exp_delta)
    add(full(x_num, comp_num), eta * (1 - exp_delta))
    add(full(x_den, comp_shared), (1 - eta) * exp_delta)
    add(full(x_den, comp_den), (1 - eta) * (1 - exp_delta))

    block = tuple(range(universe.n))
    return JointPrior(universe, (block,), (cells,))
