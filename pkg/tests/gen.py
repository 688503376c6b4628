"""Seeded random instance generators shared by the tests.

Everything draws through random.Random only, so streams are stable across
platforms and Python versions.
"""

import math
import random

from privlens import (
    BOT,
    Channel,
    FamilyParams,
    RecordUniverse,
    sample_prior,
    uniform_universe,
)

SYMBOLS = (BOT, "a", "b")


def random_universe(rng, n_max=3, m_max=3, shared=False):
    n = rng.randint(1, n_max)
    if shared:
        size = rng.randint(2, m_max)
        return uniform_universe(n, SYMBOLS[:size])
    alphabets = []
    for _ in range(n):
        size = rng.randint(2, m_max)
        alphabets.append(SYMBOLS[:size])
    return RecordUniverse(tuple(alphabets))


def simplex_point(rng, m):
    raw = [-math.log(max(rng.random(), 1e-300)) for _ in range(m)]
    s = sum(raw)
    return [w / s for w in raw]


def random_channel(rng, universe=None, out_range=(2, 5), zero_prob=0.0):
    if universe is None:
        universe = random_universe(rng)
    n_out = rng.randint(*out_range)
    rows = {}
    for h in universe.achievable_histograms():
        row = simplex_point(rng, n_out)
        if zero_prob and rng.random() < zero_prob and n_out > 1:
            j = rng.randrange(n_out)
            row[j] = 0.0
            s = sum(row)
            row = [w / s for w in row]
        rows[h] = tuple(row)
    return Channel(universe, tuple(range(n_out)), rows)


def random_prior(rng, universe, family=None):
    fam = family if family is not None else FamilyParams()
    p = sample_prior(universe, fam, rng)
    assert p is not None
    return p
