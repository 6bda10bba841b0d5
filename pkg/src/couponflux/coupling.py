"""Shared-randomness couplings behind the mixing bounds.

Two copies start from the all-present and the all-absent collections and use
the same selections, refresh bits and loss bits. Once every coordinate has
been overwritten by a shared event the copies agree forever, so the chance
that they still differ at time t bounds the TV distance to stationarity.
"""

import numpy as np

from .errors import DomainError


def _coalesced_fraction(n, t, trials, seed, step):
    if t < 0 or trials < 1:
        raise DomainError("need t >= 0 and trials >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    x = np.ones((trials, n), dtype=bool)
    y = np.zeros((trials, n), dtype=bool)
    rows = np.arange(trials)
    for _ in range(int(t)):
        step(rng, rows, x, y)
    return float(np.mean(np.all(x == y, axis=1)))


def clumsy_coalescence(n, p, t, trials, seed=0):
    """Fraction of coupled clumsy pairs that agree after t steps."""
    def step(rng, rows, x, y):
        j = rng.integers(n, size=rows.size)
        bit = rng.random(rows.size) >= p
        x[rows, j] = bit
        y[rows, j] = bit
    return _coalesced_fraction(n, t, trials, seed, step)


def careless_coalescence(n, q, t, trials, seed=0):
    """Fraction of coupled careless pairs (post-loss) that agree after t steps."""
    def step(rng, rows, x, y):
        j = rng.integers(n, size=rows.size)
        x[rows, j] = True
        y[rows, j] = True
        keep = rng.random((rows.size, n)) < q
        x &= keep
        y &= keep
    return _coalesced_fraction(n, t, trials, seed, step)


def combined_coalescence(n, refresh, survival, t, trials, seed=0):
    """Fraction of coupled combined-model pairs that agree after t steps."""
    def step(rng, rows, x, y):
        j = rng.integers(n, size=rows.size)
        bit = rng.random(rows.size) < refresh
        x[rows, j] = bit
        y[rows, j] = bit
        keep = rng.random((rows.size, n)) < survival
        x &= keep
        y &= keep
    return _coalesced_fraction(n, t, trials, seed, step)
