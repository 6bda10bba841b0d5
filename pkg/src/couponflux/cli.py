"""``couponflux`` command-line front end.

Exit codes: 0 success, 1 a verify suite failed, 2 usage error, 3 numerical or
domain error (the error class name is printed on stderr).
"""

import argparse
import csv
import io
import json
import math
import os
import sys

from .errors import CouponFluxError
from .rng import DEFAULT_SEED

MODELS = ("reset", "clumsy", "careless", "combined")


def _seed(text):
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None


def _weights(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid weight list {text!r}") from None


def _model_args(p):
    p.add_argument("model", choices=MODELS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, help="reset probability (reset)")
    p.add_argument("--weights", type=_weights,
                   help="comma-separated standard-coupon probabilities summing to 1 - rho")
    p.add_argument("--p", type=float, help="loss probability (clumsy, careless)")
    p.add_argument("--q", type=float, help="keep probability 1 - p (clumsy, careless)")
    p.add_argument("--alpha", type=float, help="refresh-to-absent probability (combined)")
    p.add_argument("--beta", type=float, help="per-step thinning probability (combined)")
    p.add_argument("--Q", type=float, help="1 - alpha (combined)")
    p.add_argument("--S", type=float, help="1 - beta (combined)")


def _common(p, seed=False):
    p.add_argument("--csv", action="store_true", help="flatten scalar outputs to CSV")
    p.add_argument("--out", help="write the JSON record to this file")
    if seed:
        p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
        p.add_argument("--threads", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="couponflux", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="closed-form and linear-solve quantities")
    _model_args(p)
    _common(p)

    p = sub.add_parser("flux", help="exact stationary-entry flux against its closed form")
    _model_args(p)
    p.add_argument("--regime", default="fixed_rho",
                   choices=("fixed_rho", "lambda_over_n", "equal_reset"),
                   help="asymptotic normalization used for the reset model")
    _common(p)

    p = sub.add_parser("simulate", help="Monte Carlo hitting times")
    _model_args(p)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--engine", choices=("direct", "phase", "regenerative"), default=None)
    p.add_argument("--budget-multiplier", type=float, default=None)
    p.add_argument("--no-samples", action="store_true", help="omit raw samples from the record")
    _common(p, seed=True)

    p = sub.add_parser("verify", help="run a self-test suite")
    from .verify import SUITES
    p.add_argument("suite", choices=sorted(SUITES))
    _common(p, seed=True)

    p = sub.add_parser("qseries", help="q-Pochhammer, lucky weights and limit-law table")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, default=None, help="also tabulate lucky weights w_{n,j}")
    p.add_argument("--Q", type=float, default=1.0, help="refresh probability for the limit law")
    _common(p)

    p = sub.add_parser("sweep", help="evaluate a parameter grid from a JSON plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=_seed, default=None, help="override the plan seed")
    return parser


REQUIRED = {"reset": [("rho",)], "clumsy": [("p", "q")], "careless": [("p", "q")],
            "combined": [("alpha", "Q"), ("beta", "S")]}


def _params(args):
    from .experiments import make_params
    for options in REQUIRED[args.model]:
        if all(getattr(args, o) is None for o in options):
            flags = " or ".join(f"--{o}" for o in options)
            raise argparse.ArgumentTypeError(f"{args.model} needs {flags}")
    values = {"n": args.n, "rho": args.rho, "weights": args.weights, "p": args.p, "q": args.q,
              "alpha": args.alpha, "beta": args.beta, "Q": args.Q, "S": args.S}
    return make_params(args.model, values)


def _emit(args, record=None, payload=None):
    """Print JSON (or CSV) and optionally write the JSON file."""
    from .records import dumps

    text = record.to_json() if record is not None else dumps(payload)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    if getattr(args, "csv", False):
        flat = record.flat_outputs() if record is not None else _flatten(json.loads(text))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(flat))
        writer.writerow(list(flat.values()))
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(text + "\n")


def _flatten(obj, prefix=""):
    out = {}
    for k, v in obj.items():
        key = f"{prefix}.{k}" if prefix else k
        if isinstance(v, dict):
            out.update(_flatten(v, key))
        elif not isinstance(v, list):
            out[key] = v
    return out


def cmd_exact(args):
    from .experiments import exact_outputs
    from .records import ExperimentRecord
    params = _params(args)
    _emit(args, ExperimentRecord(model=args.model, params=params.as_dict(), seed=0,
                                 outputs=exact_outputs(args.model, params)))
    return 0


def cmd_flux(args):
    from .experiments import flux_report
    from .records import ExperimentRecord
    params = _params(args)
    _emit(args, ExperimentRecord(model=args.model, params=params.as_dict(), seed=0,
                                 outputs=flux_report(args.model, params, args.regime)))
    return 0


def cmd_simulate(args):
    from .experiments import simulate_record
    params = _params(args)
    record = simulate_record(args.model, params, args.samples, args.seed, args.engine,
                             args.threads, args.budget_multiplier,
                             include_samples=not args.no_samples)
    _emit(args, record)
    return 0


def cmd_verify(args):
    from .verify import run_suite
    rows = run_suite(args.suite, seed=args.seed, threads=args.threads)
    ok = all(r["pass"] for r in rows)
    if args.csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["check", "value", "threshold", "pass"])
        for r in rows:
            writer.writerow([r["check"], r["value"], r["threshold"], r["pass"]])
        sys.stdout.write(buf.getvalue())
    else:
        print(f"suite {args.suite}  seed {args.seed:#x}")
        for r in rows:
            mark = "PASS" if r["pass"] else "FAIL"
            print(f"{mark}  {r['check']}: {r['value']:.6g} (limit {r['threshold']:.6g})")
        print("OK" if ok else "FAILED")
    if args.out:
        from .records import dumps
        with open(args.out, "w") as fh:
            fh.write(dumps({"suite": args.suite, "seed": args.seed, "checks": rows,
                            "passed": ok}) + "\n")
    return 0 if ok else 1


def cmd_qseries(args):
    from .qseries import (infinite_chain_stationary, log_lucky_weight, log_q_pochhammer)
    from .records import LogValue
    q, k = args.q, args.k
    if k < 0:
        raise argparse.ArgumentTypeError("--k must be >= 0")
    limit = infinite_chain_stationary(q, args.Q, max(k, 1))
    rows = []
    for j in range(k + 1):
        row = {"k": j, "log_pochhammer": log_q_pochhammer(q, j),
               "limit_law": float(limit[j]) if j < len(limit) else 0.0}
        if args.n is not None and j <= args.n:
            row["log_lucky_weight"] = log_lucky_weight(args.n, j, q, args.Q)
        rows.append(row)
    payload = {"q": q, "Q": args.Q, "log_pochhammer_inf": log_q_pochhammer(q),
               "pochhammer_inf": LogValue(log_q_pochhammer(q)), "table": rows}
    if args.csv:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[-1]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        sys.stdout.write(buf.getvalue())
    else:
        _emit(args, payload=payload)
    return 0


def cmd_sweep(args):
    from .experiments import sweep_records
    try:
        with open(args.plan) as fh:
            plan = json.load(fh)
    except (OSError, ValueError) as exc:
        print(f"couponflux: cannot read plan: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        plan["seed"] = args.seed
    os.makedirs(args.out_dir, exist_ok=True)
    records = sweep_records(plan, args.threads)
    width = max(4, len(str(len(records) - 1)))
    for i, rec in enumerate(records):
        path = os.path.join(args.out_dir, f"{plan['model']}-{i:0{width}d}.json")
        with open(path, "w") as fh:
            fh.write(rec.to_json() + "\n")
        print(path)
    return 0


COMMANDS = {"exact": cmd_exact, "flux": cmd_flux, "simulate": cmd_simulate,
            "verify": cmd_verify, "qseries": cmd_qseries, "sweep": cmd_sweep}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CouponFluxError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except argparse.ArgumentTypeError as exc:
        print(f"couponflux: {exc}", file=sys.stderr)
        return 2


def run(argv):
    """Exit code of ``couponflux argv``; usage errors return 2 instead of exiting."""
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2


if __name__ == "__main__":
    sys.exit(main())
