"""Self-test suites behind ``couponflux verify``.

Each suite returns a list of checks ``{"check", "value", "threshold", "pass"}``.
Stochastic suites draw from counter streams keyed by the given seed.
"""

import math
from itertools import product

import numpy as np

from . import careless, clumsy, combined, reset, _backend
from .chain import stationary_distribution
from .harness import exact_ks_distance, exp1_ks, model_audit, shape_comparison
from .qseries import infinite_chain_series, infinite_chain_stationary, log_q_pochhammer
from .rng import DEFAULT_SEED
from .sampling import run_batch

RESET_MEAN_GRID = list(product([2, 4, 8, 12, 20], [0.05, 0.1, 0.2, 0.3]))


def _check(name, value, threshold, passed, **detail):
    row = {"check": name, "value": float(value), "threshold": float(threshold),
           "pass": bool(passed)}
    row.update(detail)
    return row


def _at_most(name, value, threshold, **detail):
    return _check(name, value, threshold, value <= threshold, **detail)


def reset_equal_values(n_max=10):
    worst = 0.0
    for n in range(1, n_max + 1):
        p = reset.ResetParams(n, 1.0 / (n + 1))
        worst = max(worst, abs(reset.success_probability(p) - 1.0 / (n + 1)),
                    abs(reset.exact_mean(p) / (n * (n + 1)) - 1.0))
    return _at_most("reset s = 1/(n+1), mean = n(n+1) for n <= %d" % n_max, worst, 1e-9)


def reset_mean_agreement(grid=RESET_MEAN_GRID):
    worst = 0.0
    for n, rho in grid:
        p = reset.ResetParams(n, rho)
        m = reset.exact_mean(p)
        worst = max(worst, abs(reset.beta_mean(p) / m - 1.0),
                    abs(reset.pgf_derivative_mean(p) / m - 1.0))
    return _at_most(f"reset mean: closed form, beta form, PGF derivative ({len(grid)} points)",
                    worst, 1e-4)


def clumsy_flux_identity(n_max=30, ps=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)):
    worst = 0.0
    for n in range(1, n_max + 1):
        for p in ps:
            rep = clumsy.clumsy_flux(clumsy.ClumsyParams(n, p))
            worst = max(worst, abs(math.expm1(rep.log_ratio)))
    return _at_most(f"clumsy exact flux = p q^n, n <= {n_max}", worst, 1e-10)


def careless_identities(ns, qs=(0.3, 0.5, 0.7)):
    flux_gap = cut_gap = mean_gap = 0.0
    for n, q in product(ns, qs):
        params = careless.CarelessParams.from_q(n, q)
        kernel = careless.careless_kernel(params)
        pi = stationary_distribution(kernel)
        rep = careless.careless_flux(params, kernel, pi)
        exact = rep.log_exact
        flux_gap = max(flux_gap, abs(math.expm1(rep.extra["log_mu_top"] - exact)),
                       abs(math.expm1(rep.extra["log_mu_below"] - exact)))
        log_up = [careless.log_upward_rate(n, q, k) for k in range(n)]
        cut_gap = max(cut_gap, float(careless.cut_flux_gaps(kernel, pi, log_up).max()))
        mean_gap = max(mean_gap, abs(pi.mean() / careless.stationary_mean(params) - 1.0))
    label = f"n in {min(ns)}..{max(ns)}"
    return [_at_most(f"careless flux double identity ({label})", flux_gap, 1e-10),
            _at_most(f"careless cut-flux identities ({label})", cut_gap, 1e-10),
            _at_most(f"careless stationary mean q/(p+q/n) ({label})", mean_gap, 1e-10)]


def careless_sharp_constant(n=40, q=0.5):
    prof = careless.tail_ratio_profile(careless.CarelessParams.from_q(n, q), n)
    gap = abs(math.expm1(float(prof.log_a[-1]) + log_q_pochhammer(q)))
    return _at_most(f"careless a_nn (q;q)_inf -> 1 (n={n}, q={q})", gap, 0.05)


def marginal_gap(ns=(20, 40, 80), p=0.5):
    target = 0.5 * math.log(1.0 / (1.0 - p))
    rows = []
    for n in ns:
        gap = careless.marginal_heuristic_comparison(careless.CarelessParams(n, p))["gap"]
        rel = abs(gap / n ** 2 / target - 1.0)
        rows.append(_at_most(f"careless marginal-heuristic gap/n^2 vs log(1/q)/2 (n={n})",
                             rel, 0.15, gap_over_n2=gap / n ** 2, reference=target))
    return rows


def combined_checks():
    rows = []
    a0 = combined.combined_kernel(combined.CombinedParams(10, 0.0, 0.3)).rows
    c0 = careless.careless_kernel(careless.CarelessParams(10, 0.3)).rows
    rows.append(_at_most("combined with alpha = 0 equals careless kernel",
                         float(np.abs(a0 - c0).max()), 1e-12))
    p = combined.CombinedParams(10, 0.2, 0.4)
    rows_ = combined.combined_kernel(p).rows
    up_gap = max(abs(rows_[k, k + 1] / math.exp(combined.log_upward_rate(p, k)) - 1.0)
                 for k in range(p.n))
    rows.append(_at_most("combined upward rate (n-k)/n Q S^(k+1)", up_gap, 1e-12))
    return rows


def combined_flux_ratio(n=40, refresh=0.8, survival=0.5):
    rep = combined.combined_flux(combined.CombinedParams.from_refresh(n, refresh, survival))
    return _at_most(f"combined |log exact/asymptotic flux| (n={n})", abs(rep.log_ratio), 0.1)


def combined_singularity(n=10, alpha=0.5, beta=1e-3):
    """Asymptotic flux below the clumsy flux by a factor > 1e3.

    This fails: 1/(S;S)_inf diverges as beta -> 0, so the asymptotic moves
    above the clumsy flux. The exact flux does converge to the clumsy flux,
    which the extra fields show.
    """
    rep = combined.boundary_singularity_report(combined.CombinedParams(n, alpha, beta))
    log_gap = rep["log_clumsy_scale"] - rep["log_mu_asymptotic"]
    return _check("combined beta -> 0: mu_asym < clumsy flux / 1e3", log_gap, math.log(1e3),
                  log_gap > math.log(1e3), log_asymptotic_over_clumsy=rep["log_asymptotic_over_clumsy"],
                  log_exact_over_clumsy=rep["log_exact_over_clumsy"])


def qseries_checks():
    rows = []
    pi = infinite_chain_stationary(0.5, 1.0, 60)
    rows.append(_at_most("infinite chain pi(0) = (q;q)_inf",
                         abs(pi[0] / math.exp(log_q_pochhammer(0.5)) - 1.0), 1e-12))
    worst = max(abs(infinite_chain_series(0.5, 0.8, k) / infinite_chain_stationary(0.5, 0.8, 20)[k] - 1.0)
                for k in range(0, 10))
    rows.append(_at_most("infinite chain: q-binomial series = Bernoulli convolution", worst, 1e-9))
    return rows


def determinism_checks(seed):
    rows = []
    args = (6, 0.7)
    base = run_batch("clumsy_batch", args, 64, seed, 10 ** 7, threads=1)
    same = all(np.array_equal(base, run_batch("clumsy_batch", args, 64, seed, 10 ** 7, threads=t))
               for t in (4, 8))
    rows.append(_check("batch output independent of thread count", 0.0 if same else 1.0, 0.0, same))
    if _backend.COMPILED:
        py = run_batch("clumsy_batch", args, 16, seed, 10 ** 7, backend="python")
        ok = np.array_equal(py, base[:16])
        rows.append(_check("compiled and pure-Python kernels agree draw for draw",
                           0.0 if ok else 1.0, 0.0, ok))
    return rows


def suite_identities(seed=DEFAULT_SEED, threads=None):
    rows = [reset_equal_values(), reset_mean_agreement(), clumsy_flux_identity()]
    rows += careless_identities([2, 3, 5, 10, 20, 50, 100])
    rows += combined_checks()
    rows += qseries_checks()
    rows += determinism_checks(seed)
    return rows


def _limit_rows(label, ss, ks_limit, moment_limits=None):
    rep = exp1_ks(ss)
    rows = [_at_most(f"{label}: KS(mu T, Exp(1))", rep.ks_statistic, ks_limit,
                     ks_threshold_1pct=rep.ks_threshold),
            _at_most(f"{label}: censor fraction", ss.censor_fraction, 0.01)]
    for r, tol in (moment_limits or {}).items():
        ref = math.factorial(r)
        m = rep.empirical_moments[r - 1]
        rows.append(_at_most(f"{label}: |E (mu T)^{r} / {ref} - 1|", abs(m / ref - 1.0), tol))
    return rows


def suite_clumsy_exp1(seed=DEFAULT_SEED, threads=None, n=10, p=0.5, samples=10_000):
    params = clumsy.ClumsyParams(n, p)
    ss = clumsy.sample_clumsy(params, samples, seed, threads=threads)
    label = f"clumsy n={n} p={p}"
    rows = _limit_rows(label, ss, 0.02, {1: 0.10, 2: 0.15})
    shape = shape_comparison(ss)
    rows.append(_check(f"{label}: standardized law closer to Exp(1)-1 than Gumbel",
                       shape["ks_exponential"], shape["ks_gumbel"],
                       shape["ks_exponential"] < shape["ks_gumbel"]))
    exact = exact_ks_distance(clumsy.clumsy_count_kernel(params), [0], n,
                              clumsy.predicted_log_flux(params))
    rows.append(_at_most(f"{label}: exact KS of the hitting law (reference)", exact, 0.02))
    return rows


def suite_careless_exp1(seed=DEFAULT_SEED, threads=None, n=6, q=0.5, samples=10_000,
                        engine="phase"):
    params = careless.CarelessParams.from_q(n, q)
    ss = careless.sample_careless(params, samples, seed, threads=threads, engine=engine)
    rows = _limit_rows(f"careless n={n} q={q} ({engine})", ss, 0.03)
    rows.append(careless_sharp_constant())
    rows += marginal_gap()
    return rows


def suite_combined_exp1(seed=DEFAULT_SEED, threads=None, n=6, refresh=0.8, survival=0.5,
                        samples=10_000, engine="phase"):
    params = combined.CombinedParams.from_refresh(n, refresh, survival)
    ss = combined.sample_combined(params, samples, seed, threads=threads, engine=engine)
    rows = _limit_rows(f"combined n={n} Q={refresh} S={survival} ({engine})", ss, 0.03)
    rows.append(combined_flux_ratio())
    rows.append(combined_singularity())
    return rows


def suite_reset_rare(seed=DEFAULT_SEED, threads=None, n=12, rho=0.3, samples=10_000,
                     engine="direct"):
    ss = reset.sample_reset(reset.ResetParams(n, rho), samples, seed, mode=engine,
                            threads=threads)
    return _limit_rows(f"reset n={n} rho={rho}", ss, 0.02, {1: 0.10, 2: 0.15})


def gumbel_deviations(samples, n, ys=(-1.0, 0.0, 1.0, 2.0)):
    z = (np.asarray(samples, dtype=float) - n * math.log(n)) / n
    return {y: abs(float(np.mean(z <= y)) - reset.gumbel_reference(y)) for y in ys}


def suite_reset_gumbel(seed=DEFAULT_SEED, threads=None, n=500, samples=10_000):
    rho = 1.0 / (n * n * math.log(n))
    ss = reset.sample_reset(reset.ResetParams(n, rho), samples, seed, threads=threads)
    rows = [_at_most(f"reset n={n} rho=1/(n^2 log n): |F(y) - exp(-e^-y)| at y={y:g}", d, 0.02)
            for y, d in gumbel_deviations(ss.samples, n).items()]
    rows.append(_at_most("reset Gumbel run: censor fraction", ss.censor_fraction, 0.01))
    return rows


def suite_audits(seed=DEFAULT_SEED, threads=None):
    rows = []
    for model, params in (("clumsy", clumsy.ClumsyParams(12, 0.5)),
                          ("careless", careless.CarelessParams.from_q(10, 0.5))):
        rec = model_audit(model, params)
        for flag, ok in rec["flags"].items():
            value = {"b_mu": rec["b_mu"], "mixing": rec["mixing_over_b_mu"],
                     "m2_over_m1": rec["m2_over_m1"], "burn_in": rec["burn_in_hit"]}[flag]
            rows.append(_check(f"{model} n={params.n} audit (b=n^3, h=2n^2): {flag}",
                               value, 0.1, ok))
    return rows


SUITES = {
    "identities": suite_identities,
    "clumsy-exp1": suite_clumsy_exp1,
    "careless-exp1": suite_careless_exp1,
    "combined-exp1": suite_combined_exp1,
    "reset-rare": suite_reset_rare,
    "reset-gumbel": suite_reset_gumbel,
    "audits": suite_audits,
}


def run_suite(name, seed=DEFAULT_SEED, threads=None):
    return SUITES[name](seed=seed, threads=threads)
