"""Statistical checks of the Exp(1) hitting law and the block hypotheses behind it."""

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats

from .chain import PhaseTypeHitting, block_entry_moments, distribution_at, entry_flux
from .errors import CouponFluxError, DomainError, TooFewSamples
from .rng import derive_seed
from .sampling import HittingSampleSet

KS_MIN_SAMPLES = 1000
KS_CRITICAL_1PCT = 1.63
MAX_CENSOR_FRACTION = 0.01
AUDIT_THRESHOLD = 0.1
ROUNDOFF_TV = 1e-12  # exact TV distances bottom out near machine precision
EULER_GAMMA = 0.5772156649015329


@dataclass
class LimitLawReport:
    ks_statistic: float
    ks_threshold: float
    empirical_moments: list
    reference_moments: list
    moment_standard_errors: list
    n_samples: int
    censor_fraction: float
    passes: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.passes.values())

    def to_dict(self):
        return asdict(self)


def _scaled(samples):
    if isinstance(samples, HittingSampleSet):
        return samples.scaled(), samples.censor_fraction
    return np.asarray(samples, dtype=float), 0.0


def moment_report(samples, r_max=4):
    """E (mu T)^r for r = 1..r_max with jackknife standard errors, against r!."""
    if not 1 <= r_max <= 4:
        raise DomainError("r_max must lie in 1..4")
    x, _ = _scaled(samples)
    n = x.size
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples for moments, got {n}")
    rows = []
    for r in range(1, r_max + 1):
        xr = x ** r
        total = xr.sum()
        leave_one_out = (total - xr) / (n - 1)
        se = math.sqrt((n - 1) / n * float(np.sum((leave_one_out - leave_one_out.mean()) ** 2)))
        rows.append({"r": r, "moment": float(total / n), "se": se,
                     "reference": float(math.factorial(r))})
    return rows


def exp1_ks(samples, r_max=4):
    """One-sample KS of mu T against Exp(1) plus the first moments.

    Passes when the statistic is below 1.63/sqrt(N) and at most 1% of runs
    were censored.
    """
    x, censor_fraction = _scaled(samples)
    if x.size < KS_MIN_SAMPLES:
        raise TooFewSamples(f"need at least {KS_MIN_SAMPLES} uncensored samples, got {x.size}")
    ks = float(stats.kstest(x, "expon").statistic)
    threshold = KS_CRITICAL_1PCT / math.sqrt(x.size)
    moments = moment_report(x, r_max)
    return LimitLawReport(
        ks_statistic=ks, ks_threshold=threshold,
        empirical_moments=[m["moment"] for m in moments],
        reference_moments=[m["reference"] for m in moments],
        moment_standard_errors=[m["se"] for m in moments],
        n_samples=int(x.size), censor_fraction=float(censor_fraction),
        passes={"ks": ks <= threshold, "censoring": censor_fraction <= MAX_CENSOR_FRACTION},
    )


def shape_comparison(samples):
    """KS distance of the standardized samples to standardized Exp(1) and Gumbel laws.

    Exp(1) - 1 already has mean 0 and variance 1; the Gumbel is rescaled to match.
    """
    x, _ = _scaled(samples)
    if x.size < 2:
        raise TooFewSamples("need at least 2 samples")
    z = (x - x.mean()) / x.std(ddof=1)
    scale = math.sqrt(6.0) / math.pi
    return {
        "ks_exponential": float(stats.kstest(z, "expon", args=(-1.0, 1.0)).statistic),
        "ks_gumbel": float(stats.kstest(z, "gumbel_r",
                                        args=(-EULER_GAMMA * scale, scale)).statistic),
    }


def exact_ks_distance(kernel, target, start, log_mu, max_steps=5_000_000):
    """sup_x |P(mu T <= x) - (1 - e^-x)| from the exact hitting law.

    Both one-sided limits at every atom of mu T are checked.
    """
    mu = math.exp(log_mu)
    horizon = int(math.ceil(40.0 / mu))
    if horizon > max_steps:
        raise DomainError(f"exact KS needs {horizon} steps; raise max_steps to allow it")
    law = PhaseTypeHitting(kernel, target, start)
    r = kernel.rows[np.ix_(law.comp, law.comp)]
    v = np.zeros(len(law.comp))
    v[law.start_pos] = 1.0
    surv = np.empty(horizon + 1)
    surv[0] = 1.0
    for t in range(1, horizon + 1):
        v = v @ r
        surv[t] = v.sum()
    t = np.arange(1, horizon + 1)
    ref = -np.expm1(-mu * t)
    upper = np.abs((1.0 - surv[1:]) - ref)
    lower = np.abs((1.0 - surv[:-1]) - ref)
    # beyond the horizon both laws have less than max(surv[-1], e^-40) mass left
    return float(max(upper.max(), lower.max(), surv[-1]))


def audit_block_scales(n, q, c=2.0):
    """Default block scales b = n^3 and h = ceil(C n^2).

    C = 2 covers q >= e^-2; below that C is raised to log(1/q) + 1.
    """
    need = math.log(1.0 / q)
    if need >= c:
        c = need + 1.0
    return n ** 3, int(math.ceil(c * n * n)), c


def hypothesis_audit(kernel, target, b, h, start, mixing_bound, pi=None, burn_in=None):
    """Exact check of the block hypotheses behind the Exp(1) hitting law.

    ``mixing_bound`` is the model's coupling bound on the TV distance to
    stationarity after ``h`` steps. The burn-in flag uses the exact
    P_start(T <= r) at horizon ``r`` (default ``h``).
    """
    from .chain import stationary_distribution

    pi = stationary_distribution(kernel) if pi is None else pi
    log_mu = entry_flux(kernel, pi, target)
    mu = math.exp(log_mu)
    b_mu = b * mu
    moments = block_entry_moments(kernel, pi, target, b)
    bound = float(mixing_bound(h))
    exact_alpha = max(0.5 * float(np.abs(distribution_at(kernel, x, h) - pi.probs).sum())
                      for x in range(kernel.size))
    r = h if burn_in is None else int(burn_in)
    law = PhaseTypeHitting(kernel, target, start)
    burn_in_hit = 1.0 - law.survival(r)
    record = {
        "b": int(b), "h": int(h), "log_mu": log_mu, "b_mu": b_mu,
        "mixing_bound": bound, "exact_mixing": exact_alpha,
        "mixing_over_b_mu": bound / b_mu,
        "m2_over_m1": moments.ratio,
        "m1_ratio_gap": abs(moments.m1_ratio - 1.0),
        "burn_in_horizon": r, "burn_in_hit": burn_in_hit,
        "burn_in_bound_r_mu": r * mu,
    }
    record["flags"] = {
        "b_mu": b_mu <= AUDIT_THRESHOLD,
        "mixing": bound / b_mu <= AUDIT_THRESHOLD and exact_alpha <= max(bound, ROUNDOFF_TV),
        "m2_over_m1": moments.ratio <= AUDIT_THRESHOLD,
        "burn_in": burn_in_hit <= AUDIT_THRESHOLD,
    }
    record["passed"] = all(record["flags"].values())
    return record


def model_audit(model, params, c=2.0):
    """hypothesis_audit with the model's kernel, target, start and mixing bound."""
    from . import careless, clumsy, combined

    n = params.n
    if model == "clumsy":
        kernel = clumsy.clumsy_count_kernel(params)
        target, start, q = [0], n, params.q
        bound = lambda t: clumsy.clumsy_mixing_bound(n, t)  # noqa: E731
    elif model == "careless":
        kernel = careless.careless_kernel(params)
        target, start, q = [n], 0, params.q
        bound = lambda t: careless.careless_mixing_bound(n, params.q, t)  # noqa: E731
    elif model == "combined":
        kernel = combined.combined_kernel(params)
        target, start, q = [n], 0, params.survival
        bound = lambda t: combined.combined_mixing_bound(n, params.survival, t)  # noqa: E731
    else:
        raise DomainError(f"no audit for model {model!r}")
    b, h, c = audit_block_scales(n, q, c)
    record = hypothesis_audit(kernel, target, b, h, start, bound)
    record["C"] = c
    return record


def sweep(plan, run_point, threads=None):
    """Evaluate ``run_point(params, seed)`` on every point of ``plan["grid"]``.

    The grid is the Cartesian product of the listed values in key order; point
    i gets seed derive_seed(plan seed, i). Errors are recorded per point.
    Results are returned in grid order whatever the execution order.
    """
    import itertools
    from concurrent.futures import ThreadPoolExecutor
    from .rng import DEFAULT_SEED, resolve_threads

    grid = plan.get("grid") or {}
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise DomainError("sweep grid is empty")
    keys = list(grid)
    points = [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]
    seed = int(plan.get("seed", DEFAULT_SEED))

    def one(item):
        i, point = item
        point_seed = derive_seed(seed, i)
        try:
            return i, point, point_seed, run_point(point, point_seed), None
        except CouponFluxError as exc:
            return i, point, point_seed, None, exc

    workers = resolve_threads(threads)
    items = list(enumerate(points))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(item) for item in items]
    return sorted(results, key=lambda r: r[0])
