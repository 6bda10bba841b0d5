"""Careless collector under the post-loss convention.

Each round draws a uniform type (added if missing), then every held coupon is
lost independently w.p. p. The held count K is a Markov chain with
K' ~ Bin(K, q) w.p. K/n and K' ~ Bin(K+1, q) w.p. (n-K)/n; completion is the
post-loss event K = n.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from .chain import (CountKernel, FluxReport, PhaseTypeHitting, entry_flux,
                    mean_hitting_time, stationary_distribution)
from .errors import BudgetExceeded, DomainError
from .qseries import (LuckyWeightTable, infinite_chain_stationary, log_falling_ratio,
                      log_q_pochhammer)
from .sampling import phase_batch, resolve_budget, run_batch, to_sample_set, warn_if_slow

EXACT_LIMIT = 2000


@dataclass(frozen=True)
class CarelessParams:
    n: int
    p: float

    def __post_init__(self):
        if int(self.n) < 1:
            raise DomainError("n must be >= 1")
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"p must lie in (0, 1), got {self.p!r}")

    @classmethod
    def from_q(cls, n, q):
        return cls(n, 1.0 - q)

    @property
    def q(self):
        return 1.0 - self.p

    def as_dict(self):
        return {"n": self.n, "p": self.p, "q": self.q}


def binomial_log_table(m_max, survival):
    """logpmf[m, j] = log P(Bin(m, survival) = j) for 0 <= j <= m <= m_max."""
    m = np.arange(m_max + 1)[:, None]
    j = np.arange(m_max + 1)[None, :]
    with np.errstate(divide="ignore"):
        return binom.logpmf(j, m, survival)


def careless_kernel(params):
    n, q = params.n, params.q
    if n > EXACT_LIMIT:
        raise DomainError(f"exact kernels are limited to n <= {EXACT_LIMIT}")
    table = binomial_log_table(n + 1, q)
    k = np.arange(n + 1)[:, None]
    with np.errstate(divide="ignore"):
        held = np.log(k / n) + table[: n + 1, : n + 1]
        fresh = np.log((n - k) / n) + table[1: n + 2, : n + 1]
    log_rows = np.logaddexp(held, fresh)
    return CountKernel.from_log_rows(log_rows)


def log_upward_rate(n, q, k):
    """log u_k = log P(k, k+1) = log((n-k)/n) + (k+1) log q."""
    return math.log((n - k) / n) + (k + 1) * math.log(q)


def stationary_mean(params):
    """E_nu K = q / (p + q/n)."""
    return params.q / (params.p + params.q / params.n)


def predicted_log_flux(params):
    """log of n!/n^n q^{n(n+1)/2} / (q;q)_inf."""
    n, q = params.n, params.q
    return (log_falling_ratio(n, n) + 0.5 * n * (n + 1) * math.log(q)
            - log_q_pochhammer(q))


def careless_flux(params, kernel=None, pi=None):
    """Exact flux by both identities plus the sharp asymptotic.

    ``extra`` carries log nu(n)(1-q^n), log nu(n-1) q^n/n and their
    relative disagreement.
    """
    n, q = params.n, params.q
    kernel = careless_kernel(params) if kernel is None else kernel
    pi = stationary_distribution(kernel) if pi is None else pi
    lnu = pi.log_probs
    log_top = lnu[n] + math.log1p(-q ** n)
    log_below = lnu[n - 1] + n * math.log(q) - math.log(n)
    return FluxReport(
        model="careless", params=params.as_dict(),
        log_exact=entry_flux(kernel, pi, [n]),
        log_predicted=predicted_log_flux(params),
        extra={"log_mu_top": log_top, "log_mu_below": log_below,
               "identity_rel_gap": abs(math.expm1(log_top - log_below)),
               "log_nu_top": float(lnu[n])},
    )


def cut_flux_gaps(kernel, pi, log_up):
    """Relative gap of nu(k) u_k against sum_{j>k} nu(j) P(j, {0..k}) for every k < n.

    ``log_up`` holds the closed-form upward rates, so the left side does not
    reuse the kernel's own entries.
    """
    lnu = pi.log_probs
    log_cum = np.logaddexp.accumulate(kernel.log_rows, axis=1)
    gaps = []
    for k in range(kernel.n):
        lhs = lnu[k] + log_up[k]
        rhs = logsumexp(lnu[k + 1:] + log_cum[k + 1:, k])
        gaps.append(abs(math.expm1(lhs - rhs)))
    return np.array(gaps)


@dataclass(frozen=True)
class TailRatioProfile:
    k_range: np.ndarray
    log_a: np.ndarray
    limit_constant: float

    @property
    def a(self):
        return np.exp(self.log_a)

    def at(self, k):
        return float(np.exp(self.log_a[int(np.searchsorted(self.k_range, k))]))

    def flatness(self, m):
        """max over k >= m of |log a_k - log a_m|."""
        i = int(np.searchsorted(self.k_range, m))
        return float(np.max(np.abs(self.log_a[i:] - self.log_a[i])))


def default_flatness_level(n):
    return int(math.floor(n ** 0.25))


def tail_ratio_profile(params, k_min=0, pi=None):
    """a_{n,k} = nu_n(k) / w_{n,k} for k_min <= k <= n."""
    n, q = params.n, params.q
    if pi is None:
        pi = stationary_distribution(careless_kernel(params))
    weights = LuckyWeightTable.build(n, q)
    ks = np.arange(int(k_min), n + 1)
    log_a = pi.log_probs[ks] - weights.log_w[ks]
    return TailRatioProfile(k_range=ks, log_a=log_a,
                            limit_constant=math.exp(-log_q_pochhammer(q)))


def local_convergence_check(params, j_max, pi=None):
    """max_{j <= j_max} |nu_n(j) - pi(j)| against the infinite chain."""
    if pi is None:
        pi = stationary_distribution(careless_kernel(params))
    limit = infinite_chain_stationary(params.q, 1.0, j_max)
    j_max = min(int(j_max), params.n)
    return float(np.max(np.abs(pi.probs[: j_max + 1] - limit[: j_max + 1])))


def careless_mean_hitting_time(params):
    """Exact E T from the empty collection (count 0) to count n."""
    return mean_hitting_time(careless_kernel(params), [params.n], 0)


def marginal_heuristic_comparison(params):
    """Log completion scales: sharp lucky-climb scale vs the product-marginal q_*^{-n}."""
    n, p, q = params.n, params.p, params.q
    log_true = -predicted_log_flux(params)
    q_star = q / (q + n * p)
    log_marginal = -n * math.log(q_star)
    return {"log_true_scale": log_true, "log_marginal_scale": log_marginal,
            "gap": log_true - log_marginal}


def careless_mixing_bound(n, q, t):
    if t < 0:
        raise DomainError("t must be >= 0")
    if t == 0:
        return 1.0
    return min(1.0, n * q ** t)


def simulate_careless(params, seed, index=0, budget=None, backend=None):
    """One post-loss hitting time from the empty collection.

    Raises BudgetExceeded when ``budget`` steps pass without completion.
    """
    predicted = math.exp(-predicted_log_flux(params))
    warn_if_slow(predicted, "direct")
    budget = resolve_budget(predicted, None, budget)
    t = int(run_batch("careless_batch", (params.n, params.q), 1, seed, budget,
                      backend=backend, offset=index)[0])
    if t < 0:
        raise BudgetExceeded(f"no completion within {budget} steps")
    return t


def exact_log_flux(params):
    kernel = careless_kernel(params)
    return entry_flux(kernel, stationary_distribution(kernel), [params.n])


def sample_careless(params, count, seed, threads=None, budget=None,
                    budget_multiplier=100.0, engine="direct", backend=None):
    """Hitting times normalized by the exact stationary-entry flux.

    ``engine="direct"`` simulates the set-valued dynamics step by step;
    ``engine="phase"`` samples the exact count-chain hitting law by inversion.
    """
    kernel = careless_kernel(params)
    log_mu = entry_flux(kernel, stationary_distribution(kernel), [params.n])
    predicted = math.exp(-log_mu)
    budget = resolve_budget(predicted, budget_multiplier, budget)
    if engine == "phase":
        raw = phase_batch(PhaseTypeHitting(kernel, [params.n], 0), count, seed, budget, threads)
    else:
        warn_if_slow(predicted, engine)
        raw = run_batch("careless_batch", (params.n, params.q), count, seed, budget,
                        threads, backend)
    return to_sample_set(raw, log_mu, seed, "careless", params.as_dict(), engine)
