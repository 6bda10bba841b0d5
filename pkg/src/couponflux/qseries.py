"""Log-space q-series: Pochhammer products, lucky-climb weights and the
limiting infinite count chain.

All quantities that can underflow are carried as natural logarithms.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

POCHHAMMER_TOL = 1e-17
BERNOULLI_CUTOFF = 1e-18


def _check_open_unit(name, a):
    if not (0.0 < a < 1.0):
        raise DomainError(f"{name} must lie in (0, 1), got {a!r}")


def log_q_pochhammer(a, m=math.inf):
    """log of (a; a)_m = prod_{r=1}^m (1 - a^r).

    For ``m = inf`` the product is truncated once a factor's log drops below
    1e-17 in magnitude.
    """
    _check_open_unit("a", a)
    if m != math.inf:
        m = int(m)
        if m < 0:
            raise DomainError(f"m must be >= 0, got {m}")
    total = 0.0
    r = 1
    log_a = math.log(a)
    while r <= m:
        term = math.log1p(-math.exp(r * log_a))
        total += term
        if m == math.inf and abs(term) < POCHHAMMER_TOL:
            break
        r += 1
    return total


def log_falling_ratio(n, k):
    """log((n)_k / n^k), summed term by term so n > 170 is fine."""
    if k == 0:
        return 0.0
    j = np.arange(k, dtype=float)
    return float(np.sum(np.log1p(-j / n)))


def log_lucky_weight(n, k, survival, refresh=1.0):
    """log of the k-step lucky-climb weight (n)_k/n^k Q^k S^{k(k+1)/2}."""
    n = int(n)
    k = int(k)
    if n < 1 or not (0 <= k <= n):
        raise DomainError(f"need 0 <= k <= n with n >= 1, got n={n}, k={k}")
    _check_open_unit("survival", survival)
    if not (0.0 < refresh <= 1.0):
        raise DomainError(f"refresh must lie in (0, 1], got {refresh!r}")
    if k == 0:
        return 0.0
    return (log_falling_ratio(n, k) + k * math.log(refresh)
            + 0.5 * k * (k + 1) * math.log(survival))


@dataclass(frozen=True)
class LuckyWeightTable:
    n: int
    q: float
    refresh: float
    log_w: np.ndarray

    @classmethod
    def build(cls, n, survival, refresh=1.0):
        log_w = np.array([log_lucky_weight(n, k, survival, refresh)
                          for k in range(n + 1)])
        return cls(n=n, q=survival, refresh=refresh, log_w=log_w)

    def log_step(self, k):
        """log u_k = log w_{k+1} - log w_k."""
        return self.log_w[k + 1] - self.log_w[k]


def log_gamma(x):
    """Natural log of the gamma function for x > 0."""
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def _bernoulli_params(survival, refresh, kmax):
    # keep every indicator up to kmax so the log tail stays meaningful
    params = []
    r = 1
    while True:
        b = refresh * survival ** r
        if b < BERNOULLI_CUTOFF and r > kmax:
            break
        if b == 0.0:
            break
        params.append((r, b))
        r += 1
    return params


def infinite_chain_log_stationary(survival, refresh=1.0, kmax=60):
    """log pi(0..kmax) for the limiting chain k -> Bin(k, S) + Bernoulli(QS).

    The stationary law is the sum of independent Bernoulli(Q S^r), r >= 1;
    it is built by exact convolution in log space.
    """
    _check_open_unit("survival", survival)
    if not (0.0 <= refresh <= 1.0):
        raise DomainError(f"refresh must lie in [0, 1], got {refresh!r}")
    kmax = int(kmax)
    if kmax < 0:
        raise DomainError("kmax must be >= 0")
    lp = np.full(kmax + 1, -np.inf)
    lp[0] = 0.0
    if refresh == 0.0:
        return lp
    for _, b in _bernoulli_params(survival, refresh, kmax):
        keep = math.log1p(-b)
        add = math.log(b)
        shifted = np.concatenate(([-np.inf], lp[:-1] + add))
        lp = np.logaddexp(lp + keep, shifted)
    return lp


def infinite_chain_stationary(survival, refresh=1.0, kmax=60):
    """pi(0..kmax) of the limiting infinite count chain (linear space)."""
    return np.exp(infinite_chain_log_stationary(survival, refresh, kmax))


def infinite_chain_series(survival, refresh, k, terms=200):
    """pi(k) from the alternating q-binomial expansion.

    pi(k) = sum_{m>=k} (-1)^{m-k} C(m, k) Q^m S^{m(m+1)/2} / (S;S)_m.
    Used only as a cross-check: it cancels badly when k is small and Q S is
    close to one.
    """
    _check_open_unit("survival", survival)
    log_s = math.log(survival)
    total = 0.0
    log_poch = log_q_pochhammer(survival, k) if k > 0 else 0.0
    for m in range(k, k + terms):
        if m > k:
            log_poch += math.log1p(-survival ** m)
        log_term = (math.lgamma(m + 1) - math.lgamma(k + 1) - math.lgamma(m - k + 1)
                    + m * math.log(refresh) + 0.5 * m * (m + 1) * log_s - log_poch)
        term = math.exp(log_term)
        total += term if (m - k) % 2 == 0 else -term
        if term < 1e-300 or (m > k + 5 and term < 1e-20 * abs(total)):
            break
    return total


def limiting_kernel_apply(probs, survival, refresh=1.0):
    """One step of k -> Bin(k, S) + Bernoulli(QS) applied to a truncated law."""
    from scipy.stats import binom

    kmax = len(probs) - 1
    out = np.zeros(kmax + 2)
    j = np.arange(kmax + 1)
    qs = refresh * survival
    for k, mass in enumerate(probs):
        if mass == 0.0:
            continue
        b = binom.pmf(j[: k + 1], k, survival)
        out[: k + 1] += mass * b * (1.0 - qs)
        out[1: k + 2] += mass * b * qs
    return out[: kmax + 1]
