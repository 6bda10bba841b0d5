"""Combined clumsy-careless collector.

A uniform type is drawn and refreshed to present w.p. Q = 1 - alpha (absent
otherwise); then every present coupon is retained w.p. S = 1 - beta.
Completion is checked after the thinning step.
"""

import math
from dataclasses import dataclass

import numpy as np

from .careless import binomial_log_table
from .chain import (CountKernel, FluxReport, PhaseTypeHitting, entry_flux,
                    mean_hitting_time, stationary_distribution)
from .errors import BudgetExceeded, DomainError
from .qseries import log_falling_ratio, log_q_pochhammer
from .sampling import phase_batch, resolve_budget, run_batch, to_sample_set, warn_if_slow

EXACT_LIMIT = 2000


@dataclass(frozen=True)
class CombinedParams:
    n: int
    alpha: float
    beta: float

    def __post_init__(self):
        if int(self.n) < 1:
            raise DomainError("n must be >= 1")
        if not (0.0 <= self.alpha < 1.0):
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha!r}")
        # beta = 0 is a genuine singularity, not a limit of this model
        if not (0.0 < self.beta < 1.0):
            raise DomainError(f"beta must lie in (0, 1), got {self.beta!r}")

    @classmethod
    def from_refresh(cls, n, refresh, survival):
        return cls(n, 1.0 - refresh, 1.0 - survival)

    @property
    def refresh(self):
        return 1.0 - self.alpha

    @property
    def survival(self):
        return 1.0 - self.beta

    def as_dict(self):
        return {"n": self.n, "alpha": self.alpha, "beta": self.beta,
                "Q": self.refresh, "S": self.survival}


def _convolve_bernoulli(log_row, log_keep, log_add):
    shifted = np.concatenate(([-np.inf], log_row[:-1]))
    return np.logaddexp(log_row + log_keep, shifted + log_add)


def combined_kernel(params):
    """Row k: (k/n)[Bin(k-1,S) + Bern(QS)] + ((n-k)/n)[Bin(k,S) + Bern(QS)]."""
    n, big_q, s = params.n, params.refresh, params.survival
    if n > EXACT_LIMIT:
        raise DomainError(f"exact kernels are limited to n <= {EXACT_LIMIT}")
    table = binomial_log_table(n, s)
    qs = big_q * s
    log_keep = math.log1p(-qs)
    log_add = math.log(qs)
    log_rows = np.full((n + 1, n + 1), -np.inf)
    for k in range(n + 1):
        parts = []
        if k > 0:
            parts.append(math.log(k / n) + _convolve_bernoulli(table[k - 1], log_keep, log_add))
        if k < n:
            parts.append(math.log((n - k) / n) + _convolve_bernoulli(table[k], log_keep, log_add))
        log_rows[k] = parts[0] if len(parts) == 1 else np.logaddexp(*parts)
    return CountKernel.from_log_rows(log_rows)


def log_upward_rate(params, k):
    """log u_k = log((n-k)/n) + log Q + (k+1) log S."""
    n = params.n
    return (math.log((n - k) / n) + math.log(params.refresh)
            + (k + 1) * math.log(params.survival))


def stationary_mean(params):
    """E K = SQ / (1 - S(1 - 1/n))."""
    s, big_q, n = params.survival, params.refresh, params.n
    return s * big_q / (1.0 - s * (1.0 - 1.0 / n))


def predicted_log_flux(params):
    """log of n!/n^n Q^n S^{n(n+1)/2} / (S;S)_inf."""
    n, big_q, s = params.n, params.refresh, params.survival
    return (log_falling_ratio(n, n) + n * math.log(big_q)
            + 0.5 * n * (n + 1) * math.log(s) - log_q_pochhammer(s))


def combined_flux(params, kernel=None, pi=None):
    n, big_q, s = params.n, params.refresh, params.survival
    kernel = combined_kernel(params) if kernel is None else kernel
    pi = stationary_distribution(kernel) if pi is None else pi
    log_top = pi.log_probs[n] + math.log1p(-big_q * s ** n)
    return FluxReport(model="combined", params=params.as_dict(),
                      log_exact=entry_flux(kernel, pi, [n]),
                      log_predicted=predicted_log_flux(params),
                      extra={"log_mu_top": float(log_top),
                             "log_nu_top": float(pi.log_probs[n])})


def clumsy_scale_log_flux(params):
    """log(alpha (1-alpha)^n), the completion flux once thinning is switched off."""
    return math.log(params.alpha) + params.n * math.log1p(-params.alpha)


def combined_mean_hitting_time(params):
    return mean_hitting_time(combined_kernel(params), [params.n], 0)


def combined_mixing_bound(n, survival, t):
    if t < 0:
        raise DomainError("t must be >= 0")
    if t == 0:
        return 1.0
    return min(1.0, n * survival ** t)


def simulate_combined(params, seed, index=0, budget=None, backend=None):
    predicted = math.exp(-predicted_log_flux(params))
    warn_if_slow(predicted, "direct")
    budget = resolve_budget(predicted, None, budget)
    t = int(run_batch("combined_batch", (params.n, params.refresh, params.survival), 1,
                      seed, budget, backend=backend, offset=index)[0])
    if t < 0:
        raise BudgetExceeded(f"no completion within {budget} steps")
    return t


def sample_combined(params, count, seed, threads=None, budget=None,
                    budget_multiplier=100.0, engine="direct", backend=None):
    kernel = combined_kernel(params)
    log_mu = entry_flux(kernel, stationary_distribution(kernel), [params.n])
    predicted = math.exp(-log_mu)
    budget = resolve_budget(predicted, budget_multiplier, budget)
    if engine == "phase":
        raw = phase_batch(PhaseTypeHitting(kernel, [params.n], 0), count, seed, budget, threads)
    else:
        warn_if_slow(predicted, engine)
        raw = run_batch("combined_batch", (params.n, params.refresh, params.survival),
                        count, seed, budget, threads, backend)
    return to_sample_set(raw, log_mu, seed, "combined", params.as_dict(), engine)


def boundary_singularity_report(params):
    """Compare the lucky-climb asymptotic with the clumsy scale near beta = 0.

    As beta -> 0 the factor 1/(S;S)_inf diverges, so the asymptotic flux leaves
    the clumsy flux alpha (1-alpha)^n behind while the exact flux converges to it.
    """
    log_asym = predicted_log_flux(params)
    log_clumsy = clumsy_scale_log_flux(params)
    log_exact = combined_flux(params).log_exact
    return {"log_mu_asymptotic": log_asym, "log_clumsy_scale": log_clumsy,
            "log_mu_exact": log_exact,
            "log_asymptotic_over_clumsy": log_asym - log_clumsy,
            "log_exact_over_clumsy": log_exact - log_clumsy}
