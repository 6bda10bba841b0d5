"""Clumsy collector: the selected type is refreshed to present w.p. q, absent w.p. p.

The exact oracle is the birth-death chain on the number of absent types,
K -> K+1 w.p. (n-K)p/n and K -> K-1 w.p. Kq/n; completion is K = 0.
"""

import math
from dataclasses import dataclass

import numpy as np

from .chain import (CountKernel, FluxReport, PhaseTypeHitting, entry_flux,
                    mean_hitting_time, stationary_distribution)
from .errors import BudgetExceeded, DomainError
from .sampling import resolve_budget, run_batch, phase_batch, to_sample_set, warn_if_slow


@dataclass(frozen=True)
class ClumsyParams:
    n: int
    p: float

    def __post_init__(self):
        if int(self.n) < 1:
            raise DomainError("n must be >= 1")
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"p must lie in (0, 1), got {self.p!r}")

    @property
    def q(self):
        return 1.0 - self.p

    def as_dict(self):
        return {"n": self.n, "p": self.p}


def clumsy_count_kernel(params):
    n, p, q = params.n, params.p, params.q
    rows = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        if k < n:
            rows[k, k + 1] = (n - k) * p / n
        if k > 0:
            rows[k, k - 1] = k * q / n
        rows[k, k] = 1.0 - rows[k].sum()
    return CountKernel(rows)


def predicted_log_flux(params):
    """log(p q^n)."""
    return math.log(params.p) + params.n * math.log(params.q)


def clumsy_flux(params):
    kernel = clumsy_count_kernel(params)
    pi = stationary_distribution(kernel)
    return FluxReport(model="clumsy", params=params.as_dict(),
                      log_exact=entry_flux(kernel, pi, [0]),
                      log_predicted=predicted_log_flux(params))


def clumsy_mean_hitting_time(params):
    """Exact E T from the empty collection (all n types absent)."""
    return mean_hitting_time(clumsy_count_kernel(params), [0], params.n)


def clumsy_mixing_bound(n, t):
    if t < 0:
        raise DomainError("t must be >= 0")
    if t == 0:
        return 1.0
    return min(1.0, n * (1.0 - 1.0 / n) ** t)


def simulate_clumsy(params, seed, index=0, budget=None, backend=None):
    """One hitting time from the empty collection.

    Raises BudgetExceeded when ``budget`` steps pass without completion.
    """
    predicted = math.exp(-predicted_log_flux(params))
    warn_if_slow(predicted, "direct")
    budget = resolve_budget(predicted, None, budget)
    t = int(run_batch("clumsy_batch", (params.n, params.q), 1, seed, budget,
                      backend=backend, offset=index)[0])
    if t < 0:
        raise BudgetExceeded(f"no completion within {budget} steps")
    return t


def sample_clumsy(params, count, seed, threads=None, budget=None,
                  budget_multiplier=None, engine="direct", backend=None):
    """Monte Carlo hitting times normalized by the exact flux p q^n."""
    log_mu = predicted_log_flux(params)
    predicted = math.exp(-log_mu)
    budget = resolve_budget(predicted, budget_multiplier, budget)
    if engine == "phase":
        sampler = PhaseTypeHitting(clumsy_count_kernel(params), [0], params.n)
        raw = phase_batch(sampler, count, seed, budget, threads)
    else:
        warn_if_slow(predicted, engine)
        raw = run_batch("clumsy_batch", (params.n, params.q), count, seed, budget,
                        threads, backend)
    return to_sample_set(raw, log_mu, seed, "clumsy", params.as_dict(), engine)
