"""Model-agnostic entry points shared by the CLI, the verify suites and sweeps."""

import math

from . import careless, clumsy, combined, reset
from .chain import stationary_distribution
from .errors import DomainError, TooFewSamples
from .harness import exp1_ks, moment_report
from .qseries import log_q_pochhammer
from .records import ExperimentRecord, LogValue

# the hitting-time solve has condition number of order 1/mu; beyond this
# scale the double-precision answer is meaningless, so the mean is omitted
MEAN_LOG_SCALE_LIMIT = 30.0


def make_params(model, values):
    """Build the parameter object of ``model`` from a plain mapping."""
    v = {k: x for k, x in values.items() if x is not None}
    try:
        n = int(v["n"])
        if model == "reset":
            return reset.ResetParams(n, float(v["rho"]), v.get("weights"))
        if model == "clumsy":
            return clumsy.ClumsyParams(n, float(v["p"]) if "p" in v else 1.0 - float(v["q"]))
        if model == "careless":
            return careless.CarelessParams(n, float(v["p"]) if "p" in v else 1.0 - float(v["q"]))
        if model == "combined":
            alpha = float(v["alpha"]) if "alpha" in v else 1.0 - float(v["Q"])
            beta = float(v["beta"]) if "beta" in v else 1.0 - float(v["S"])
            return combined.CombinedParams(n, alpha, beta)
    except KeyError as exc:
        raise DomainError(f"{model} needs parameter {exc.args[0]!r}") from None
    raise DomainError(f"unknown model {model!r}")


def _mean_or_none(fn, params, log_mu):
    if -log_mu > MEAN_LOG_SCALE_LIMIT:
        return None
    value = fn(params)
    return value if math.isfinite(value) else None


def exact_outputs(model, params):
    if model == "reset":
        log_s = reset.log_success_probability(params)
        out = {"s": LogValue(log_s), "log_s": log_s, "mean": reset.exact_mean(params),
               "log_rho_s": math.log(params.rho) + log_s,
               "excursion_fail_probability": -math.expm1(log_s)}
        if params.equal:
            out["beta_mean"] = reset.beta_mean(params)
            out["rare_success_hypothesis"] = reset.rare_success_hypothesis(params)
        return out
    if model == "clumsy":
        rep = clumsy.clumsy_flux(params)
        out = {"mu": LogValue(rep.log_exact), "log_mu": rep.log_exact,
               "log_mu_closed_form": rep.log_predicted}
        mean = _mean_or_none(clumsy.clumsy_mean_hitting_time, params, rep.log_exact)
        if mean is not None:
            out["mean"] = mean
            out["mu_times_mean"] = mean * rep.exact
        return out
    if model == "careless":
        kernel = careless.careless_kernel(params)
        pi = stationary_distribution(kernel)
        rep = careless.careless_flux(params, kernel, pi)
        prof = careless.tail_ratio_profile(params, params.n, pi)
        out = {"mu": LogValue(rep.log_exact), "log_mu": rep.log_exact,
               "log_mu_asymptotic": rep.log_predicted, "log_ratio": rep.log_ratio,
               "identity_rel_gap": rep.extra["identity_rel_gap"],
               "nu_top": LogValue(rep.extra["log_nu_top"]),
               "stationary_mean": pi.mean(),
               "stationary_mean_closed_form": careless.stationary_mean(params),
               "sharp_constant_ratio": LogValue(float(prof.log_a[-1]) + log_q_pochhammer(params.q))}
        out.update({f"heuristic_{k}": x for k, x in
                    careless.marginal_heuristic_comparison(params).items()})
        mean = _mean_or_none(careless.careless_mean_hitting_time, params, rep.log_exact)
        if mean is not None:
            out["mean"] = mean
            out["mu_times_mean"] = mean * rep.exact
        return out
    if model == "combined":
        kernel = combined.combined_kernel(params)
        pi = stationary_distribution(kernel)
        rep = combined.combined_flux(params, kernel, pi)
        out = {"mu": LogValue(rep.log_exact), "log_mu": rep.log_exact,
               "log_mu_asymptotic": rep.log_predicted, "log_ratio": rep.log_ratio,
               "nu_top": LogValue(rep.extra["log_nu_top"]),
               "stationary_mean": pi.mean(),
               "stationary_mean_closed_form": combined.stationary_mean(params)}
        if params.alpha > 0:
            out["log_clumsy_scale"] = combined.clumsy_scale_log_flux(params)
        mean = _mean_or_none(combined.combined_mean_hitting_time, params, rep.log_exact)
        if mean is not None:
            out["mean"] = mean
            out["mu_times_mean"] = mean * rep.exact
        return out
    raise DomainError(f"unknown model {model!r}")


def flux_report(model, params, regime="fixed_rho"):
    """FluxReport-shaped dict: exact log flux against the model's closed form."""
    if model == "reset":
        log_exact = math.log(params.rho) + reset.log_success_probability(params)
        log_pred = reset.regime_normalization(params.n, params.rho, regime)
        extra = {"regime": regime}
    else:
        rep = {"clumsy": clumsy.clumsy_flux, "careless": careless.careless_flux,
               "combined": combined.combined_flux}[model](params)
        log_exact, log_pred, extra = rep.log_exact, rep.log_predicted, dict(rep.extra)
    out = {"mu": LogValue(log_exact), "log_mu": log_exact, "log_mu_predicted": log_pred,
           "log_ratio": log_exact - log_pred}
    out.update(extra)
    return out


def draw_samples(model, params, samples, seed, engine=None, threads=None,
                 budget_multiplier=None, backend=None):
    if model == "reset":
        return reset.sample_reset(params, samples, seed, mode=engine or "direct",
                                  threads=threads, budget_multiplier=budget_multiplier,
                                  backend=backend)
    fn = {"clumsy": clumsy.sample_clumsy, "careless": careless.sample_careless,
          "combined": combined.sample_combined}[model]
    kwargs = {} if budget_multiplier is None else {"budget_multiplier": budget_multiplier}
    return fn(params, samples, seed, threads=threads, engine=engine or "direct",
              backend=backend, **kwargs)


def simulation_outputs(sample_set):
    out = {"n_samples": int(sample_set.samples.size), "censored": sample_set.censored,
           "censor_fraction": sample_set.censor_fraction, "engine": sample_set.engine,
           "log_mu": sample_set.log_normalization}
    if sample_set.samples.size >= 2:
        out["moments"] = {f"r{m['r']}": {"value": m["moment"], "se": m["se"]}
                          for m in moment_report(sample_set, 4)}
    try:
        rep = exp1_ks(sample_set)
        out["ks"] = rep.ks_statistic
        out["ks_threshold"] = rep.ks_threshold
        out["ks_pass"] = rep.passed
    except TooFewSamples:
        pass
    return out


def simulate_record(model, params, samples, seed, engine=None, threads=None,
                    budget_multiplier=None, include_samples=True):
    ss = draw_samples(model, params, samples, seed, engine, threads, budget_multiplier)
    data = {"samples": ss.samples.tolist()} if include_samples else None
    return ExperimentRecord(model=model, params=params.as_dict(), seed=seed,
                            outputs=simulation_outputs(ss), data=data)


def sweep_point_runner(plan):
    """Closure evaluating one sweep point: exact outputs, plus simulation if requested."""
    model = plan["model"]
    fixed = dict(plan.get("fixed", {}))
    samples = int(plan.get("samples", 0))

    def run(point, seed):
        values = dict(fixed)
        values.update(point)
        params = make_params(model, values)
        outputs = {"exact": exact_outputs(model, params)}
        if samples:
            ss = draw_samples(model, params, samples, seed, plan.get("engine"),
                              threads=1, budget_multiplier=plan.get("budget_multiplier"))
            outputs["simulation"] = simulation_outputs(ss)
        return params, outputs

    return run


def sweep_records(plan, threads=None):
    """Run a sweep plan and return one ExperimentRecord per grid point, in grid order."""
    from .harness import sweep

    model = plan.get("model")
    if model not in ("reset", "clumsy", "careless", "combined"):
        raise DomainError(f"plan model must be reset, clumsy, careless or combined; got {model!r}")
    records = []
    for index, point, seed, result, error in sweep(plan, sweep_point_runner(plan), threads):
        if error is None:
            params, outputs = result
            records.append(ExperimentRecord(model=model, params=params.as_dict(), seed=seed,
                                            outputs=outputs))
        else:
            records.append(ExperimentRecord(
                model=model, params=dict(point), seed=seed, outputs={},
                error={"type": type(error).__name__, "message": str(error)}))
        records[-1].outputs["grid_index"] = index
    return records
