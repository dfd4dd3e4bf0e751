"""Command-line entry point: ``gsperm boundaries | analyze | simulate``."""

import argparse
import json
import os
import sys

from .boundaries import NORMAL, PERMUTATION, T_APPROX, CovarianceSchedule, normal_boundaries, t_approx_boundaries
from .decision import FREEZE, FULL, AnalysisOptions, analyze
from .design import DesignSpec, information_fractions
from .errors import GSPermError, NumericalError, ValidationError
from .io import ingest_trial_csv
from .permutation import enumeration_size
from .simulation import load_scenarios, sweep, write_results_csv
from .stats import statistic_path

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_VALIDATION = 2


def _planned_welch_df(m, n):
    """Welch df at planned cumulative sizes with equal arm variances."""
    a, b = 1.0 / m, 1.0 / n
    return (a + b) ** 2 / (a * a / (m - 1) + b * b / (n - 1))


def _emit(obj, out):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_boundaries(args):
    spec = DesignSpec.load(args.design)
    if spec.info_mode != "sample-size":
        raise ValidationError("design-time boundaries need sample-size information mode")
    fractions = information_fractions(spec)
    normal = normal_boundaries(CovarianceSchedule(fractions), spec.spending, spec.sidedness)
    result = normal
    extra = {}
    if args.method == T_APPROX:
        dfs = [_planned_welch_df(m, n) for m, n in zip(spec.cumulative_m, spec.cumulative_n)]
        result = t_approx_boundaries(normal, dfs)
        extra["dfs"] = dfs
    obj = result.to_json()
    obj["fractions"] = fractions
    obj.update(extra)
    _emit(obj, args.out)
    return EXIT_OK


def cmd_analyze(args):
    spec = DesignSpec.load(args.design)
    data = ingest_trial_csv(args.data, strict=not args.no_strict)
    exhaustive = {"auto": "auto", "always": True, "never": False}[args.exhaustive]
    options = AnalysisOptions(mode=args.mode, B=args.b, seed=args.seed,
                              exhaustive=exhaustive, cap=args.cap)
    trace, state = analyze(data, spec, args.method, options)
    obj = trace.to_json()
    obj["mode"] = args.mode
    obj["boundaries"] = {
        "method": args.method,
        "sidedness": spec.sidedness,
        "values": ["inf" if v == float("inf") else v for v in state.values],
        "attained_spend": list(state.attained_spend),
    }
    obj["statistics"] = list(statistic_path(data).values)
    if args.method == PERMUTATION:
        analysed = data.through(trace.stop_stage)
        use_exh = exhaustive is True or (exhaustive == "auto" and enumeration_size(analysed) <= args.cap)
        obj["permutation"] = {
            "mode": "exhaustive" if use_exh else "monte-carlo",
            "B": enumeration_size(analysed) if use_exh else args.b,
            "seed": None if use_exh else args.seed,
        }
    _emit(obj, args.out)
    return EXIT_OK


def cmd_simulate(args):
    configs = load_scenarios(args.config, default_seed=args.seed)
    table = sweep(configs, workers=args.workers)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_results_csv(table, fh, record_time=args.timing)
    else:
        write_results_csv(table, sys.stdout, record_time=args.timing)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gsperm",
        description="Group sequential two-arm tests: normal, t-approximation and "
                    "studentized permutation boundaries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("boundaries", help="design-time critical values")
    p.add_argument("--design", required=True, help="design JSON file")
    p.add_argument("--method", choices=[NORMAL, T_APPROX], default=NORMAL)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_boundaries)

    p = sub.add_parser("analyze", help="look-by-look analysis of trial data")
    p.add_argument("--design", required=True)
    p.add_argument("--data", required=True, help="CSV with header stage,arm,value")
    p.add_argument("--method", choices=[NORMAL, T_APPROX, PERMUTATION], required=True)
    p.add_argument("--b", type=int, default=10000, help="Monte Carlo permutations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=[FREEZE, FULL], default=FREEZE)
    p.add_argument("--exhaustive", choices=["auto", "always", "never"], default="auto")
    p.add_argument("--cap", type=int, default=10**6, help="exhaustive enumeration limit")
    p.add_argument("--no-strict", action="store_true",
                   help="allow the allocation ratio to vary across stages")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="operating characteristics over a scenario grid")
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0,
                   help="seed for scenarios that do not set their own")
    p.add_argument("--timing", action="store_true",
                   help="fill the seconds column (makes output run-dependent)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: validation: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_VALIDATION
    except GSPermError as exc:
        code = EXIT_NUMERICAL if isinstance(exc, NumericalError) else EXIT_VALIDATION
        kind = "numerical" if code == EXIT_NUMERICAL else "validation"
        print(f"error: {kind}: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
