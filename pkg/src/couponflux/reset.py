"""Reset-button collector.

Each draw is the reset coupon w.p. rho (the collection is emptied) or standard
coupon i w.p. p_i, with sum p_i = q = 1 - rho. Resets regenerate the process
exactly, so the hitting time is a geometric number of reset-free excursions and
everything follows from the ordinary collector PGF phi(x) = E x^C evaluated at
q and nearby points.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .chain import CountKernel, mean_hitting_time
from .errors import (DenominatorNonpositive, DomainError, PoleError, RegimeMismatch,
                     SubsetLimit)
from .sampling import phase_batch, resolve_budget, run_batch, to_sample_set
from .chain import PhaseTypeHitting

SUBSET_LIMIT = 24
DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class ResetParams:
    n: int
    rho: float
    weights: Optional[Sequence[float]] = None

    def __post_init__(self):
        if int(self.n) < 1:
            raise DomainError("n must be >= 1")
        if not (0.0 < self.rho < 1.0):
            raise DomainError(f"rho must lie in (0, 1), got {self.rho!r}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.n,) or np.any(w <= 0):
                raise DomainError("weights must be n positive numbers")
            if abs(w.sum() - self.q) > 1e-12:
                raise DomainError(f"weights sum to {w.sum()!r}, expected 1 - rho = {self.q!r}")
            object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @property
    def q(self):
        return 1.0 - self.rho

    @property
    def equal(self):
        return self.weights is None

    def conditional_probs(self):
        """Standard-coupon probabilities given that the draw is not a reset."""
        if self.equal:
            return np.full(self.n, 1.0 / self.n)
        return np.asarray(self.weights) / self.q

    def as_dict(self):
        d = {"n": self.n, "rho": self.rho}
        if not self.equal:
            d["weights"] = list(self.weights)
        return d


def uniform_pgf(n, x, mode="value"):
    """Ordinary uniform collector PGF prod_j (j/n)x / (1 - (1 - j/n)x).

    ``mode`` is ``"value"``, ``"log"`` or ``"log_derivative"`` (x phi'/phi).
    """
    j = np.arange(1, n + 1, dtype=float)
    den = 1.0 - (1.0 - j / n) * x
    if np.any(den < DENOMINATOR_FLOOR):
        raise PoleError(f"PGF pole: 1 - (1 - j/n) x < {DENOMINATOR_FLOOR} at x = {x!r}")
    if mode == "log_derivative":
        return float(np.sum(1.0 / den))
    if x == 0.0:
        return 0.0 if mode == "value" else -math.inf
    if x < 0:
        raise DomainError("x must be >= 0")
    log_val = float(np.sum(np.log(j / n) + math.log(x) - np.log(den)))
    if mode == "log":
        return log_val
    if mode == "value":
        return math.exp(log_val)
    raise DomainError(f"unknown mode {mode!r}")


def _subset_terms(probs):
    """Signs and subset sums pi_J over all nonempty subsets J."""
    n = len(probs)
    if n > SUBSET_LIMIT:
        raise SubsetLimit(f"inclusion-exclusion limited to n <= {SUBSET_LIMIT}, got {n}")
    sums = np.zeros(1)
    sizes = np.zeros(1, dtype=np.int64)
    for p in probs:
        sums = np.concatenate((sums, sums + p))
        sizes = np.concatenate((sizes, sizes + 1))
    sums, sizes = sums[1:], sizes[1:]
    signs = np.where(sizes % 2 == 1, 1.0, -1.0)
    return signs, sums


def inclusion_exclusion_pgf(probs, x):
    """phi(x) = 1 - (1-x) sum_J (-1)^{|J|+1} / (1 - x(1 - pi_J))."""
    signs, sums = _subset_terms(np.asarray(probs, dtype=float))
    den = 1.0 - x * (1.0 - sums)
    if np.any(den < DENOMINATOR_FLOOR):
        raise PoleError(f"PGF pole at x = {x!r}")
    return float(1.0 - (1.0 - x) * np.sum(signs / den))


def log_collector_pgf(probs, x):
    """log phi(x) for arbitrary type probabilities, from the unexpanded form

        phi(x) = int_0^inf e^{-v} prod_i (1 - exp(-pi_i x v / (1 - x))) dv,

    whose expansion over subsets is the inclusion-exclusion sum. Every term is
    positive, so there is no cancellation; the integrand is scaled by its peak.
    """
    c = np.asarray(probs, dtype=float) * x / (1.0 - x)
    if not (0.0 < x < 1.0):
        raise DomainError("x must lie in (0, 1)")

    def log_g(v):
        with np.errstate(over="ignore"):
            return -v + float(np.sum(np.log(-np.expm1(-c * v))))

    def slope(lv):  # v d/dv log g, decreasing in v
        v = math.exp(lv)
        with np.errstate(over="ignore"):
            return v * (-1.0 + float(np.sum(c / np.expm1(c * v))))

    vm = math.exp(optimize.brentq(slope, -60.0, 60.0, xtol=1e-14))
    peak = log_g(vm)

    def f(v):
        return math.exp(log_g(v) - peak) if v > 0 else 0.0

    left, _ = integrate.quad(f, 0.0, vm, points=[vm * r for r in (1e-3, 1e-2, 0.1, 0.3, 0.6)],
                             epsabs=0.0, epsrel=1e-13, limit=500)
    right, _ = integrate.quad(f, vm, np.inf, epsabs=0.0, epsrel=1e-13, limit=500)
    return peak + math.log(left + right)


def collector_pgf(params, x, mode="value"):
    if params.equal:
        return uniform_pgf(params.n, x, mode)
    if mode != "value":
        raise DomainError("unequal weights support mode='value' only")
    if x == 0.0:
        return 0.0
    return math.exp(log_collector_pgf(params.conditional_probs(), x))


def log_success_probability(params):
    """log s with s = E q^C, the chance one reset-free excursion completes."""
    if params.equal:
        n = params.n
        a = n * params.rho / params.q
        return math.lgamma(n + 1) + math.lgamma(1 + a) - math.lgamma(n + 1 + a)
    if params.n > SUBSET_LIMIT:
        raise SubsetLimit(f"unequal weights need n <= {SUBSET_LIMIT}; "
                          "use estimate_success_probability")
    return log_collector_pgf(params.conditional_probs(), params.q)


def success_probability(params):
    return math.exp(log_success_probability(params))


def success_probability_ie(params):
    """s by the literal inclusion-exclusion sum. Cancellation costs about
    2^n ulps, so this is a cross-check for small n rather than the main route."""
    if params.n > SUBSET_LIMIT:
        raise SubsetLimit(f"inclusion-exclusion needs n <= {SUBSET_LIMIT}")
    return inclusion_exclusion_pgf(params.conditional_probs(), params.q)


def estimate_success_probability(params, samples, seed=0):
    """Monte Carlo s = E q^C with its standard error, for weight vectors too large
    for inclusion-exclusion."""
    rng = np.random.Generator(np.random.Philox(seed))
    probs = params.conditional_probs()
    cum = np.cumsum(probs)
    vals = np.empty(samples)
    for i in range(samples):
        seen = np.zeros(params.n, dtype=bool)
        missing = params.n
        c = 0
        while missing:
            draws = np.minimum(np.searchsorted(cum, rng.random(4 * missing), side="right"),
                               params.n - 1)
            for d in draws:
                c += 1
                if not seen[d]:
                    seen[d] = True
                    missing -= 1
                    if not missing:
                        break
        vals[i] = params.q ** c
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def _log_uniform_pgf_shifted(n, rho, delta):
    """log phi(q(1+delta)) with each factor denominator formed as
    (rho + jq/n) - (1 - j/n) q delta, which keeps full precision near delta = 0."""
    q = 1.0 - rho
    j = np.arange(1, n + 1, dtype=float)
    den = (rho + j * q / n) - (1.0 - j / n) * q * delta
    if np.any(den < DENOMINATOR_FLOOR):
        raise DenominatorNonpositive(f"PGF factor denominator below {DENOMINATOR_FLOOR} "
                                     f"at z = 1 + {delta!r}")
    return float(n * (math.log(q) + math.log1p(delta)) + np.sum(np.log(j / n))
                 - np.sum(np.log(den)))


def reset_pgf_shifted(params, delta):
    """E z^T at z = 1 + delta, without ever forming z - 1 by subtraction.

    E z^T = (1 - qz) phi(qz) / (1 - z + rho z phi(qz)).
    """
    x = params.q * (1.0 + delta)
    if x >= 1.0 - DENOMINATOR_FLOOR:
        raise DenominatorNonpositive(f"q z = {x!r} leaves the validity region")
    if params.equal:
        phi = math.exp(_log_uniform_pgf_shifted(params.n, params.rho, delta))
    else:
        if x <= 0.0:
            phi = 0.0
        elif x >= 1.0:
            # above 1 the integral form diverges; fall back to the finite sum
            try:
                phi = inclusion_exclusion_pgf(params.conditional_probs(), x)
            except PoleError as exc:
                raise DenominatorNonpositive(str(exc)) from exc
        else:
            phi = math.exp(log_collector_pgf(params.conditional_probs(), x))
    den = -delta + params.rho * (1.0 + delta) * phi
    if den <= 0.0:
        raise DenominatorNonpositive(f"denominator {den!r} <= 0 at z = 1 + {delta!r}")
    return (params.rho - params.q * delta) * phi / den


def reset_pgf(params, z):
    """E z^T = (1 - qz) phi(qz) / (1 - z + rho z phi(qz))."""
    if z < 0.0:
        raise DomainError("z must be >= 0")
    if z == 0.0:
        return 0.0  # T >= 1
    return reset_pgf_shifted(params, z - 1.0)


def exact_mean(params):
    """E T = (1 - s) / (rho s)."""
    log_s = log_success_probability(params)
    return -math.expm1(log_s) / (params.rho * math.exp(log_s))


def beta_mean(params):
    """(1/rho) (1/(n rho B(n, a)) - 1) with a = n rho / (1 - rho); equal weights."""
    if not params.equal:
        raise DomainError("the beta-function form needs equal weights")
    n, rho = params.n, params.rho
    a = n * rho / (1.0 - rho)
    log_beta = math.lgamma(n) + math.lgamma(a) - math.lgamma(n + a)
    return (math.exp(-(math.log(n * rho) + log_beta)) - 1.0) / rho


def pgf_derivative_mean(params, h=None):
    """Richardson-extrapolated central difference of the PGF at z = 1.

    The default step is 1e-3 of the natural scale rho s, so the truncation
    error stays small when E T is large.
    """
    if h is None:
        h = 1e-3 * params.rho * success_probability(params)
    if not h > 1e-300:
        raise DomainError(f"step {h!r} underflows")

    def central(step):
        return (reset_pgf_shifted(params, step) - reset_pgf_shifted(params, -step)) / (2.0 * step)

    return (4.0 * central(h / 2) - central(h)) / 3.0


def rare_success_hypothesis(params):
    """rho q phi'(q), which must vanish for the rare-success limit."""
    s = success_probability(params)
    return params.rho * s * uniform_pgf(params.n, params.q, "log_derivative")


def positive_exponential_moment(params, a):
    """E exp(a rho s T), evaluated as the PGF at z = exp(a rho s)."""
    if not (0.0 <= a < 1.0):
        raise DomainError("a must lie in [0, 1)")
    s = success_probability(params)
    return reset_pgf_shifted(params, math.expm1(a * params.rho * s))


def regime_normalization(n, rho, regime):
    """log(rho s_asym) for the named asymptotic regime."""
    q = 1.0 - rho
    if not (0.0 < rho < 1.0):
        raise DomainError("rho must lie in (0, 1)")
    if regime == "fixed_rho":
        log_s = 0.5 * math.log(2 * math.pi * rho * n) + n * (math.log(q) + (rho / q) * math.log(rho))
    elif regime == "lambda_over_n":
        a = n * rho / q
        log_s = math.lgamma(1 + a) - a * math.log(n)
    elif regime == "equal_reset":
        if abs(rho * (n + 1) - 1.0) > 1e-12:
            raise RegimeMismatch(f"equal_reset needs rho = 1/(n+1), got {rho!r}")
        log_s = -math.log(n + 1)
    else:
        raise RegimeMismatch(f"unknown regime {regime!r}")
    return math.log(rho) + log_s


def gumbel_reference(y):
    return math.exp(-math.exp(-y))


def reset_count_kernel(params):
    """Chain on the number of distinct standard coupons held (equal weights)."""
    if not params.equal:
        raise DomainError("count kernel needs equal weights")
    n, rho, q = params.n, params.rho, params.q
    rows = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        rows[k, 0] += rho
        rows[k, k] += q * k / n
        if k < n:
            rows[k, k + 1] += q * (n - k) / n
    return CountKernel(rows)


def reset_mean_hitting_time(params):
    return mean_hitting_time(reset_count_kernel(params), [params.n], 0)


def simulate_reset(params, seed, mode="direct", index=0, budget=None, backend=None):
    raw = _raw_reset(params, 1, seed, mode, resolve_budget(None, budget=budget), None,
                     backend, index)
    return int(raw[0])


def _raw_reset(params, count, seed, mode, budget, threads, backend, offset=0):
    if mode == "direct":
        cum = None
        if not params.equal:
            cum = np.cumsum(params.conditional_probs())
            cum[-1] = 1.0
        return run_batch("reset_direct_batch", (params.n, params.rho, cum), count, seed,
                         budget, threads, backend, offset)
    if mode == "regenerative":
        if not params.equal:
            raise DomainError("regenerative mode needs equal weights")
        s = success_probability(params)
        return run_batch("reset_regen_batch", (params.n, params.rho, s), count, seed,
                         budget, threads, backend, offset)
    if mode == "phase":
        sampler = PhaseTypeHitting(reset_count_kernel(params), [params.n], 0)
        return phase_batch(sampler, count, seed, budget, threads)
    raise DomainError(f"unknown mode {mode!r}")


def sample_reset(params, count, seed, mode="direct", threads=None, budget=None,
                 budget_multiplier=None, backend=None):
    """Hitting times normalized by rho s."""
    log_norm = math.log(params.rho) + log_success_probability(params)
    budget = resolve_budget(exact_mean(params), budget_multiplier, budget)
    raw = _raw_reset(params, count, seed, mode, budget, threads, backend)
    return to_sample_set(raw, log_norm, seed, "reset", params.as_dict(), mode)
