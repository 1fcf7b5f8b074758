"""Command-line front end: ``etwadc <stage> --scenario FILE [--out DIR] [--sigma V] [--recompute]``."""
from __future__ import annotations

import argparse
import sys

from .exceptions import ParseError, SigmaOutOfRange, StageError, ValidationError
from .pipeline import Study
from .scenario import load_scenario
from .validation import check_sigma

COMMANDS = ("powerflow", "linearize", "reduce", "design", "simulate", "sweep")


def build_parser():
    p = argparse.ArgumentParser(
        prog="etwadc",
        description="Event-triggered wide-area damping control studies.")
    p.add_argument("command", choices=COMMANDS, help="pipeline stage to run")
    p.add_argument("--scenario", required=True, help="scenario YAML file")
    p.add_argument("--out", default=None, help="output directory (overrides the scenario)")
    p.add_argument("--sigma", type=float, default=None,
                   help="trigger parameter in (0, 1) for 'simulate'")
    p.add_argument("--recompute", action="store_true",
                   help="run missing prerequisite stages instead of failing")
    return p


def _report(command, result):
    if command == "sweep":
        print("sigma,baseline,events,reduction_pct")
        for r in result.rows:
            print(f"{r.sigma!r},{r.baseline},{r.events},{r.reduction_pct:.2f}")
    elif command == "simulate":
        print(f"sigma={result.sigma!r} events={result.events} baseline={result.baseline}")
    elif command == "powerflow":
        print(f"converged in {result['iterations']} iterations, "
              f"mismatch {result['mismatch_pu']:.3e} pu")
    elif command == "linearize":
        print(f"plant with {result['n_states']} states")
    elif command == "reduce":
        print(f"order {result['order']} of {result['full_order']}, max deviation "
              f"{result['max_deviation_db_1_100']:.3f} dB over 1-100 rad/s")
    elif command == "design":
        print(f"closed-loop max real part {result['closed_loop_full_max_real']:.4g}; "
              + ", ".join(f"sigma={t['sigma']!r}: rho={t['rho']!r}" for t in result["thresholds"]))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        if args.sigma is not None:
            check_sigma(args.sigma)
    except (ParseError, ValidationError, SigmaOutOfRange) as exc:
        print(f"etwadc: configuration error: {exc}", file=sys.stderr)
        return 2
    study = Study(scenario, args.out, args.recompute)
    try:
        if args.command == "simulate":
            result = study.simulate(args.sigma)
        else:
            result = getattr(study, args.command)()
    except StageError as exc:
        print(f"etwadc: stage '{exc.stage}' failed: {exc}", file=sys.stderr)
        return 1
    _report(args.command, result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
