"""Finite Markov chains on counts {0, ..., n}.

Kernels keep both linear and log-space rows. Tail probabilities of the loss
models drop far below the double range (q^{n(n+1)/2} underflows near n = 50 at
q = 1/2), so stationary laws of upward skip-free kernels are solved in log
space through the cut-flux recursion and only exponentiated on demand.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (DomainError, EmptyComplement, LengthMismatch,
                     NonStochastic, SingularSolve)

ROW_TOL = 1e-12
RESIDUAL_TOL = 1e-10
DENSE_LIMIT = 2000


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


class CountKernel:
    """Row-stochastic transition matrix on states 0..n.

    Build from linear rows or, when entries may underflow, from log rows via
    :meth:`from_log_rows`.
    """

    def __init__(self, rows, log_rows=None):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise NonStochastic(f"kernel must be square, got shape {rows.shape}")
        if rows.shape[0] < 2:
            raise NonStochastic("kernel needs n >= 1 (at least two states)")
        if np.any(rows < 0.0) or np.any(rows > 1.0 + ROW_TOL) or not np.all(np.isfinite(rows)):
            raise NonStochastic("kernel entries must lie in [0, 1]")
        sums = rows.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOL)
        if bad.size:
            i = int(bad[0])
            raise NonStochastic(f"row {i} sums to {sums[i]!r}")
        if log_rows is None:
            with np.errstate(divide="ignore"):
                log_rows = np.log(rows)
        self.rows = _readonly(rows)
        self.log_rows = _readonly(log_rows)

    @classmethod
    def from_log_rows(cls, log_rows):
        log_rows = np.asarray(log_rows, dtype=float)
        return cls(np.exp(log_rows), log_rows)

    @property
    def n(self):
        return self.rows.shape[0] - 1

    @property
    def size(self):
        return self.rows.shape[0]

    def upward_skip_free(self):
        """True when no row jumps up by more than one level."""
        return not np.any(np.triu(self.rows, k=2) > 0.0)

    def __repr__(self):
        return f"CountKernel(n={self.n})"


@dataclass(frozen=True)
class TargetSet:
    members: frozenset

    @classmethod
    def of(cls, members, n):
        members = frozenset(int(m) for m in members)
        if not members:
            raise DomainError("target set must be nonempty")
        if min(members) < 0 or max(members) > n:
            raise DomainError(f"target states must lie in 0..{n}")
        return cls(members)

    def mask(self, size):
        m = np.zeros(size, dtype=bool)
        m[list(self.members)] = True
        return m


def as_target(target, kernel):
    if isinstance(target, TargetSet):
        if max(target.members) > kernel.n:
            raise DomainError(f"target states must lie in 0..{kernel.n}")
        return target
    if isinstance(target, (int, np.integer)):
        target = [target]
    return TargetSet.of(target, kernel.n)


@dataclass(frozen=True)
class StationaryDistribution:
    log_probs: np.ndarray
    residual: float
    relative_residual: float
    method: str

    @property
    def probs(self):
        return np.exp(self.log_probs)

    @property
    def n(self):
        return len(self.log_probs) - 1

    def mean(self):
        return float(np.dot(np.arange(len(self.log_probs)), self.probs))


@dataclass(frozen=True)
class BlockMomentReport:
    b: int
    first_moment: float
    second_factorial: float
    ratio: float
    p_at_least_one: float = float("nan")

    @property
    def m1_ratio(self):
        """P(N_b >= 1) / E N_b; tends to 1 when entries do not clump."""
        return self.p_at_least_one / self.first_moment


@dataclass
class FluxReport:
    """Exact stationary-entry flux against a closed form or asymptotic."""

    model: str
    params: dict
    log_exact: float
    log_predicted: float
    extra: dict = field(default_factory=dict)

    @property
    def log_ratio(self):
        return self.log_exact - self.log_predicted

    @property
    def ratio(self):
        return math.exp(self.log_ratio)

    @property
    def exact(self):
        return math.exp(self.log_exact)

    def outputs(self):
        out = {"log_mu": self.log_exact, "log_mu_predicted": self.log_predicted,
               "log_ratio": self.log_ratio}
        out.update(self.extra)
        return out


def _residuals(kernel, log_pi):
    pi = np.exp(log_pi)
    residual = float(np.max(np.abs(pi @ kernel.rows - pi)))
    with np.errstate(invalid="ignore"):
        log_next = logsumexp(log_pi[:, None] + kernel.log_rows, axis=0)
        rel = np.abs(np.expm1(log_next - log_pi))
    rel = rel[np.isfinite(log_pi)]
    return residual, float(np.max(rel)) if rel.size else 0.0


def _cut_flux_solve(kernel):
    """Unnormalized log stationary law via nu(k) u_k = sum_{j>k} nu(j) P(j, {0..k})."""
    lr = kernel.log_rows
    size = kernel.size
    log_cum = np.logaddexp.accumulate(lr, axis=1)
    log_up = np.array([lr[k, k + 1] for k in range(size - 1)])
    if not np.all(np.isfinite(log_up)):
        return None
    lnu = np.empty(size)
    lnu[-1] = 0.0
    for k in range(size - 2, -1, -1):
        lnu[k] = logsumexp(lnu[k + 1:] + log_cum[k + 1:, k]) - log_up[k]
    return lnu - logsumexp(lnu)


def _lu_solve(kernel):
    size = kernel.size
    a = kernel.rows.T - np.eye(size)
    a[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    try:
        if np.linalg.cond(a) > 1e14:
            raise SingularSolve("stationary system is numerically rank-deficient")
        x = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSolve(str(exc)) from exc
    if np.any(x < -1e-12):
        raise SingularSolve("stationary solve produced negative mass (reducible chain?)")
    x = np.clip(x, 0.0, None)
    x /= x.sum()
    with np.errstate(divide="ignore"):
        return np.log(x)


def _power_solve(kernel, max_iter=1_000_000):
    pi = np.full(kernel.size, 1.0 / kernel.size)
    for _ in range(max_iter):
        nxt = pi @ kernel.rows
        if np.max(np.abs(nxt - pi)) <= 1e-14:
            pi = nxt
            break
        pi = nxt
    with np.errstate(divide="ignore"):
        return np.log(pi / pi.sum())


def stationary_distribution(kernel, method="auto"):
    """Stationary law of ``kernel``.

    ``method`` is ``"cut"`` (log-space cut-flux recursion, needs an upward
    skip-free kernel), ``"lu"`` (dense solve with the normalization row
    replacing one balance equation) or ``"power"``. ``"auto"`` picks ``cut``
    when possible, else ``lu`` up to n = 2000 and ``power`` beyond.
    """
    if method == "auto":
        if kernel.upward_skip_free():
            method = "cut"
        elif kernel.n <= DENSE_LIMIT:
            method = "lu"
        else:
            method = "power"
    if method == "cut":
        log_pi = _cut_flux_solve(kernel)
        if log_pi is None:
            method = "lu"
    if method == "lu":
        log_pi = _lu_solve(kernel)
    elif method == "power":
        log_pi = _power_solve(kernel)
    elif method != "cut":
        raise DomainError(f"unknown method {method!r}")
    residual, rel = _residuals(kernel, log_pi)
    if residual > RESIDUAL_TOL:
        raise SingularSolve(f"stationary residual {residual:.3e} exceeds {RESIDUAL_TOL}")
    return StationaryDistribution(log_probs=_readonly(log_pi), residual=residual,
                                  relative_residual=rel, method=method)


def entry_flux(kernel, pi, target):
    """log of sum_{x not in A} pi(x) P(x, A)."""
    target = as_target(target, kernel)
    mask = target.mask(kernel.size)
    if mask.all():
        raise EmptyComplement("target covers every state")
    outside = np.flatnonzero(~mask)
    inside = np.flatnonzero(mask)
    log_into = logsumexp(kernel.log_rows[np.ix_(outside, inside)], axis=1)
    return float(logsumexp(pi.log_probs[outside] + log_into))


def exit_flux(kernel, pi, target):
    """log of sum_{x in A} pi(x) P(x, A^c); equals entry_flux under stationarity."""
    target = as_target(target, kernel)
    mask = target.mask(kernel.size)
    if mask.all():
        raise EmptyComplement("target covers every state")
    outside = np.flatnonzero(~mask)
    inside = np.flatnonzero(mask)
    log_out = logsumexp(kernel.log_rows[np.ix_(inside, outside)], axis=1)
    return float(logsumexp(pi.log_probs[inside] + log_out))


def mean_hitting_time(kernel, target, start):
    """E_start of the first t >= 0 with X_t in target."""
    target = as_target(target, kernel)
    if start in target.members:
        return 0.0
    mask = target.mask(kernel.size)
    comp = np.flatnonzero(~mask)
    r = kernel.rows[np.ix_(comp, comp)]
    try:
        h = np.linalg.solve(np.eye(len(comp)) - r, np.ones(len(comp)))
    except np.linalg.LinAlgError as exc:
        raise SingularSolve("target unreachable from part of its complement") from exc
    if not np.all(np.isfinite(h)) or np.any(h < 0):
        raise SingularSolve("target unreachable from part of its complement")
    return float(h[np.searchsorted(comp, start)])


def block_entry_moments(kernel, pi, target, b):
    """First moment, second factorial moment and P(N_b >= 1) of block entries.

    With eta the stationary entry law on A (normalized by the flux) and
    f(z) = 1{z not in A} P(z, A), the pair probability at lag d is
    mu * eta P^{d-1} f, so (N_b)_2 has mean 2 mu sum_d (b - d) eta P^{d-1} f.
    """
    b = int(b)
    if b < 1:
        raise DomainError("block length b must be >= 1")
    target = as_target(target, kernel)
    mask = target.mask(kernel.size)
    if mask.all():
        raise EmptyComplement("target covers every state")
    log_mu = entry_flux(kernel, pi, target)
    mu = math.exp(log_mu)
    p = kernel.rows
    into = p[:, mask].sum(axis=1)
    f = np.where(mask, 0.0, into)

    outside = ~mask
    log_eta = np.full(kernel.size, -np.inf)
    cols = np.flatnonzero(mask)
    log_eta[cols] = logsumexp(pi.log_probs[outside][:, None]
                              + kernel.log_rows[np.ix_(np.flatnonzero(outside), cols)], axis=0)
    v = np.exp(log_eta - log_mu)
    acc = 0.0
    for d in range(1, b):
        acc += (b - d) * float(v @ f)
        v = v @ p
    ratio = 2.0 * acc / b

    # P(N_b >= 1) as a sum of first-entry probabilities (no cancellation)
    killed = p.copy()
    killed[np.ix_(outside, mask)] = 0.0
    w = pi.probs
    p_one = 0.0
    for _ in range(b):
        p_one += float(w @ f)
        w = w @ killed
    return BlockMomentReport(b=b, first_moment=b * mu, second_factorial=ratio * b * mu,
                             ratio=ratio, p_at_least_one=p_one)


def total_variation(d1, d2):
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    if d1.shape != d2.shape:
        raise LengthMismatch(f"lengths differ: {d1.shape} vs {d2.shape}")
    for d in (d1, d2):
        if abs(d.sum() - 1.0) > 1e-9:
            raise DomainError("distributions must sum to 1")
    return 0.5 * float(np.abs(d1 - d2).sum())


def tv_contraction_check(kernel, d1, d2, steps):
    """TV(d1 P^t, d2 P^t) for t = 0..steps."""
    steps = int(steps)
    if steps < 0:
        raise DomainError("steps must be >= 0")
    a = np.asarray(d1, dtype=float)
    c = np.asarray(d2, dtype=float)
    if a.shape != c.shape or a.shape[0] != kernel.size:
        raise LengthMismatch("distributions must match the kernel size")
    out = [total_variation(a, c)]
    for _ in range(steps):
        a = a @ kernel.rows
        c = c @ kernel.rows
        out.append(total_variation(a, c))
    return out


def point_mass(size, state):
    d = np.zeros(size)
    d[state] = 1.0
    return d


def distribution_at(kernel, start, t):
    """Law of X_t from a point mass, by repeated squaring."""
    v = point_mass(kernel.size, start)
    m = kernel.rows
    t = int(t)
    while t:
        if t & 1:
            v = v @ m
        t >>= 1
        if t:
            m = m @ m
    return v


class PhaseTypeHitting:
    """Exact law of T = min{t >= 1 : X_t in A} from a fixed start outside A.

    Survival P(T > t) = e_start R^t 1 with R the kernel restricted to A^c.
    Powers R^(2^j) are cached, so evaluating the survival at any t and
    sampling T by inversion cost O(log t) small matrix products.
    """

    MAX_LEVEL = 62

    def __init__(self, kernel, target, start):
        target = as_target(target, kernel)
        if start in target.members:
            raise DomainError("start state lies in the target")
        mask = target.mask(kernel.size)
        self.comp = np.flatnonzero(~mask)
        self.start_pos = int(np.searchsorted(self.comp, start))
        r = kernel.rows[np.ix_(self.comp, self.comp)]
        powers = [r]
        while len(powers) <= self.MAX_LEVEL and powers[-1].sum(axis=1).max() > 1e-18:
            powers.append(powers[-1] @ powers[-1])
        self.powers = powers

    def _start(self, count=1):
        v = np.zeros((count, len(self.comp)))
        v[:, self.start_pos] = 1.0
        return v

    def survival(self, t):
        """P(T > t)."""
        t = int(t)
        v = self._start()[0]
        j = 0
        while t:
            if t & 1:
                if j >= len(self.powers):
                    return 0.0
                v = v @ self.powers[j]
            t >>= 1
            j += 1
        return float(v.sum())

    def quantile(self, u):
        """Inverse survival: T with P(T > T-1) >= u > P(T > T); vectorized."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        u = np.maximum(u, 2.0 ** -60)
        v = self._start(len(u))
        t = np.zeros(len(u), dtype=np.int64)
        for j in range(len(self.powers) - 1, -1, -1):
            cand = v @ self.powers[j]
            take = cand.sum(axis=1) >= u
            v[take] = cand[take]
            t[take] += np.int64(1) << np.int64(j)
        return t + 1
