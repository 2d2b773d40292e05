"""Command line front end.

Subcommands:

* ``sweep``   — run a configured parameter sweep (see ``srfbm sweep --help``
  for the full config key reference); writes JSONL records and a CSV summary.
* ``verify``  — run the built-in invariant suite; exit 0 only if all pass.
* ``predict`` — print the scaling predictions and exact exponents for one
  (d, H, beta, T) point.
* ``sample``  — emit a single sampled path as CSV for inspection.

The worker count resolves as ``--workers`` flag, then the SRFBM_WORKERS
environment variable, then 1.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from fractions import Fraction

from . import harness
from .fbm import HurstModel, TimeGrid, sample_fbm
from .girsanov import lambda_star
from .harness import ConfigError, SweepError, parse_config, run_sweep
from .scaling import scaling_prediction, table_exponents
from .verify import run_verify

__all__ = ["main"]


def _seed_u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64), got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _hurst(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"H must be a number or fraction, got {text!r}")
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"H = {text} out of range; H must lie in (0, 1)")
    return value


def _default_workers() -> int:
    env = os.environ.get("SRFBM_WORKERS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srfbm",
        description="Self-repellent fractional Brownian motion: sweeps, "
        "verification, scaling predictions, and path sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser(
        "sweep",
        help="run a configured parameter sweep",
        description="Run the sweep described by a flat key = value config file.",
        epilog=harness.__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sweep.add_argument("--config", required=True, metavar="PATH", help="config file")
    sweep.add_argument(
        "--out", default=".", metavar="DIR", help="output directory (default: .)"
    )
    sweep.add_argument(
        "--workers",
        type=_positive_int,
        default=None,
        metavar="N",
        help="worker pool size (default: SRFBM_WORKERS or 1)",
    )
    sweep.add_argument(
        "--seed",
        type=_seed_u64,
        default=None,
        metavar="U64",
        help="override the config's master_seed",
    )

    verify = sub.add_parser(
        "verify",
        help="run the built-in invariant suite",
        description="Run the cross-module invariant checks; exit 0 iff all pass.",
    )
    verify.add_argument(
        "--seed", type=_seed_u64, default=0, metavar="U64", help="suite seed (default 0)"
    )

    predict = sub.add_parser(
        "predict",
        help="print scaling predictions for one parameter point",
        description="Print the radius bounds, exponents, and tilt strength "
        "predicted at (d, H, beta, T).",
    )
    predict.add_argument("--d", type=_positive_int, required=True, help="dimension")
    predict.add_argument(
        "--H", type=_hurst, required=True, help="Hurst index; decimals or p/q fractions"
    )
    predict.add_argument("--beta", type=float, required=True, help="repulsion strength")
    predict.add_argument("--T", type=float, required=True, help="horizon (> e)")

    sample = sub.add_parser(
        "sample",
        help="emit one sampled path as CSV",
        description="Sample a single path and write t, x1..xd rows as CSV.",
    )
    sample.add_argument("--d", type=_positive_int, default=1, help="dimension (default 1)")
    sample.add_argument("--H", type=_hurst, default=Fraction(1, 2), help="Hurst index")
    sample.add_argument("--T", type=float, default=1.0, help="horizon (default 1)")
    sample.add_argument(
        "--n", type=_positive_int, default=256, help="grid steps (default 256)"
    )
    sample.add_argument("--seed", type=_seed_u64, default=0, help="seed (default 0)")
    sample.add_argument(
        "--out", default="-", metavar="FILE", help="output file (default: stdout)"
    )
    return parser


def _cmd_sweep(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        config = parse_config(text)
        if args.seed is not None:
            config = replace(config, master_seed=args.seed)
        if config.mode == "verify":
            return run_verify(seed=config.master_seed)
        workers = args.workers if args.workers is not None else _default_workers()
        jsonl_path, csv_path = run_sweep(config, out_dir=args.out, workers=workers)
    except (ConfigError, SweepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {jsonl_path}")
    print(f"wrote {csv_path}")
    return 0


def _cmd_predict(args) -> int:
    H = args.H
    try:
        pred = scaling_prediction(args.d, float(H), args.beta, args.T)
        exps = table_exponents(args.d, H)
        lam = lambda_star(args.d, float(H), args.beta, args.T)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    def fmt_exp(power: Fraction, log_power: Fraction) -> str:
        text = f"{power} ({float(power):.6g})"
        if log_power:
            text += f" with (log T)^{log_power}"
        return text

    print(f"d={args.d} H={H} beta={args.beta:g} T={args.T:g}")
    print(f"regime            {pred.regime}")
    print(f"gamma             {pred.gamma:.10g}")
    print(f"F                 {pred.F:.10g}")
    print(f"r_lower           {pred.r_lower:.10g}")
    print(f"r_upper           {pred.r_upper:.10g}")
    print(f"nu_conjectured    {pred.nu_conjectured:.10g}")
    print(f"lambda_star       {lam:.10g}")
    print(f"T-exponent lower  {fmt_exp(exps.lower, exps.lower_log)}")
    print(f"T-exponent upper  {fmt_exp(exps.upper, exps.upper_log)}")
    return 0


def _cmd_sample(args) -> int:
    model = HurstModel(H=float(args.H), d=args.d)
    grid = TimeGrid(T=args.T, n=args.n)
    path = sample_fbm(model, grid, seed=args.seed)
    header = "t," + ",".join(f"x{k}" for k in range(1, args.d + 1))
    lines = [header]
    for t, row in zip(grid.times, path.values):
        lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in row]))
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "sweep":
        return _cmd_sweep(args)
    if args.command == "verify":
        return run_verify(seed=args.seed)
    if args.command == "predict":
        return _cmd_predict(args)
    return _cmd_sample(args)


if __name__ == "__main__":
    sys.exit(main())
