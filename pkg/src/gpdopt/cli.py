"""Command-line entry point.

Subcommands: ``run``, ``classify``, ``bench``, ``gen-config``. Exit codes:
0 success, 1 validation error, 2 runtime failure, 3 benchmark mismatch.
"""

import argparse
import logging
import sys

import numpy as np

from . import objectives
from .config import PRESETS, ConfigError, parse_config, preset_text
from .constraints import DEFAULT_DET_TOL, classify_critical_2d

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_MISMATCH = 0, 1, 2, 3


def cmd_run(args):
    from .runner import estimates_payload, execute, write_outputs

    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    if args.workers is not None:
        cfg.workers = args.workers
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    try:
        result, _ = execute(cfg)
    except FileNotFoundError as exc:
        print(f"error: required data file missing: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out = write_outputs(result, cfg.output_dir, cfg.counting)
    payload = estimates_payload(result)
    print(f"status: {payload['status']}  ({len(payload['estimates'])} estimate(s); outputs in {out})")
    for e in result.estimates:
        x = ", ".join(f"{v:.6f}" for v in e.x_hat)
        print(f"  x_hat=({x})  |grad|={e.grad_norm:.3e}  f={e.f_value:.6g}  n={e.cluster_size}  {e.classification}")
    for msg in result.diagnostics:
        print(f"  note: {msg}")
    return EXIT_OK


def cmd_classify(args):
    try:
        obj = objectives.get_objective(args.objective)
    except (KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if obj.d != 2:
        print(f"error: classify needs a 2-dimensional objective; {args.objective} has d={obj.d}", file=sys.stderr)
        return EXIT_VALIDATION
    if len(args.x) != 2:
        print("error: classify needs exactly 2 coordinates", file=sys.stderr)
        return EXIT_VALIDATION
    label = classify_critical_2d(np.asarray(args.x, dtype=float), obj, args.det_tol)
    print(label)
    return EXIT_OK


def cmd_bench(args):
    from .bench import format_table, run_bench

    try:
        checks, secs = run_bench(args.id, args.scale)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(format_table(checks))
    print(f"elapsed: {secs:.1f} s")
    return EXIT_MISMATCH if any(c.passed is False for c in checks) else EXIT_OK


def cmd_gen_config(args):
    if args.example not in PRESETS:
        print(f"error: unknown example {args.example!r}; known: {', '.join(sorted(PRESETS))}", file=sys.stderr)
        return EXIT_VALIDATION
    sys.stdout.write(preset_text(args.example))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="gpdopt", description="Optimization through posterior derivative processes.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a configured optimization")
    r.add_argument("config")
    r.add_argument("--workers", type=int, help="override run.workers")
    r.add_argument("--output-dir", help="override run.output_dir")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("classify", help="determinant test at a point of a 2-d objective")
    c.add_argument("objective")
    c.add_argument("x", nargs="+", type=float)
    c.add_argument("--det-tol", type=float, default=DEFAULT_DET_TOL)
    c.set_defaults(func=cmd_classify)

    b = sub.add_parser("bench", help="reproduce a worked example and check it")
    b.add_argument("id")
    b.add_argument("scale", choices=("desk", "paper"))
    b.set_defaults(func=cmd_bench)

    g = sub.add_parser("gen-config", help="print a preset configuration")
    g.add_argument("example")
    g.set_defaults(func=cmd_gen_config)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run" and args.workers is not None and args.workers < 1:
        print("error: --workers must be positive", file=sys.stderr)
        return EXIT_VALIDATION
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
