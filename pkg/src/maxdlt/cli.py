"""
Command-line entry point, ``python -m maxdlt``.

Subcommands::

    run --spec FILE|PRESET [--seed N] [--out FILE] [--trials N] [--workers N]
    sweep --spec FILE|PRESET --axis T|snr --values V1,V2,... [--seed N] [--out FILE]
    waterfill --q FILE --r FILE --zeta X [--rank R] [--method exact|closed-form]
    presets list
"""

import argparse
import sys

import numpy as np

from .errors import ConfigurationError, NumericalError, TrialError
from .harness import (Sweep, aggregate, emit_results, format_results, load_spec, preset_names,
                      read_matrix, run_experiment)
from .waterfill import METHODS, WaterfillProblem, nonhomogeneous_waterfill

__all__ = ["main", "build_parser"]


def _values(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="python -m maxdlt",
                                     description="max-DLT multi-cell MIMO coordination experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_args(p):
        p.add_argument("--spec", required=True, help="experiment YAML file or preset name")
        p.add_argument("--seed", type=int, help="override base_seed")
        p.add_argument("--out", help="output CSV (default: the spec's output_path)")
        p.add_argument("--trials", type=int, help="override the number of trials")
        p.add_argument("--workers", type=int, default=1, help="worker processes")

    run = sub.add_parser("run", help="run an experiment and write the result CSV")
    experiment_args(run)

    sweep = sub.add_parser("sweep", help="run an experiment over iteration counts or SNRs")
    experiment_args(sweep)
    sweep.add_argument("--axis", required=True, choices=["T", "snr"])
    sweep.add_argument("--values", required=True, type=_values,
                       help="comma-separated iteration counts or SNRs in dB")

    wf = sub.add_parser("waterfill", help="solve one waterfilling instance and print its internals")
    wf.add_argument("--q", required=True, help="text file with the Hermitian PD matrix Q")
    wf.add_argument("--r", required=True, help="text file with the Hermitian PSD matrix R")
    wf.add_argument("--zeta", required=True, type=float, help="power budget ||X||_F^2")
    wf.add_argument("--rank", type=int, help="number of columns of X (default: n - 1, at least 1)")
    wf.add_argument("--method", choices=METHODS, default="exact")
    wf.add_argument("--log-base", type=float, default=float(np.e),
                    help="base of the logarithm in the objective (default e)")

    presets = sub.add_parser("presets", help="bundled experiment presets")
    presets.add_argument("action", choices=["list"])
    return parser


def _experiment(args, sweep=None):
    spec = load_spec(args.spec)
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if sweep is not None:
        changes["sweep"] = sweep
    if changes:
        spec = spec.replace(**changes)
    rows = aggregate(run_experiment(spec, workers=args.workers), spec)
    out = args.out or spec.output_path
    if out == "-":
        sys.stdout.write(format_results(rows))
    else:
        emit_results(rows, out)
        print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)


def _fmt_array(a):
    return np.array2string(np.asarray(a), precision=10, max_line_width=120)


def _waterfill(args):
    Q, R = read_matrix(args.q), read_matrix(args.r)
    n = Q.shape[0]
    rank = args.rank if args.rank is not None else max(n - 1, 1)
    sol = nonhomogeneous_waterfill(WaterfillProblem(Q, R, rank, args.zeta, args.log_base),
                                   args.method)
    print(f"method      {sol.method}")
    print(f"alpha       {_fmt_array(sol.alpha)}")
    print(f"beta        {_fmt_array(sol.beta)}")
    print(f"mu_star     {sol.mu_star!r}")
    print(f"Sigma_star  {_fmt_array(sol.Sigma_star)}")
    print(f"objective   {sol.objective!r}")
    print(f"residual    {sol.residual!r}")
    print(f"norm2       {float(np.sum(np.abs(sol.X_star) ** 2))!r}")
    print("X_star")
    print(_fmt_array(sol.X_star))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            _experiment(args)
        elif args.command == "sweep":
            _experiment(args, Sweep(args.axis, tuple(args.values)))
        elif args.command == "waterfill":
            _waterfill(args)
        elif args.command == "presets":
            for name in preset_names():
                print(name)
    except (ConfigurationError, NumericalError, TrialError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
