"""Command line entry point: ``spikereg run`` and ``spikereg trace``."""
from __future__ import annotations

import argparse
import logging
import sys

from .bench import (ALL_FUNCTIONS, ALL_MODELS, ALL_NOISE, ALL_SOLVERS, _parse_value, config_from_mapping,
                    dump_predictions, emit_report, load_config, run_grid, trace_demo)
from .solvers import count_spikes


def _csv(choices):
    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        if items == ["all"]:
            return list(choices)
        bad = [t for t in items if t not in choices]
        if bad or not items:
            raise argparse.ArgumentTypeError(f"choose from {','.join(choices)} (got {text!r})")
        return items
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spikereg", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the regression experiment grid")
    run.add_argument("--models", type=_csv(ALL_MODELS))
    run.add_argument("--solvers", type=_csv(ALL_SOLVERS))
    run.add_argument("--functions", type=_csv(ALL_FUNCTIONS))
    run.add_argument("--noise", type=_csv(ALL_NOISE))
    run.add_argument("--nx", type=int)
    run.add_argument("--nt", type=int)
    run.add_argument("--dt", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--config", help="flat key = value file with dotted keys (e.g. hh.g_na = 120)")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="extra dotted-key override, may be repeated")
    run.add_argument("--out", default="-", help="report path (default: stdout)")
    run.add_argument("--format", choices=("table", "json", "csv"), default="table")
    run.add_argument("--dump-dir", help="write x, y_pred / x, y_exact files per cell here")

    tr = sub.add_parser("trace", help="write a single-neuron membrane trace")
    tr.add_argument("--model", choices=ALL_MODELS, required=True)
    tr.add_argument("--solver", choices=ALL_SOLVERS, default="euler")
    tr.add_argument("--drive", default="periodic:40:20",
                    help="constant:<amp> | burst:<start>:<len> | periodic:<period>:<width> | encode:<x> | none")
    tr.add_argument("--nt", type=int, default=150)
    tr.add_argument("--dt", type=float, default=0.1)
    tr.add_argument("--amplitude", type=float)
    tr.add_argument("--out", required=True)
    return p


def _cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else None
    flags = {"models": args.models, "solvers": args.solvers, "functions": args.functions,
             "noise": args.noise, "nx": args.nx, "nt": args.nt, "dt": args.dt, "seed": args.seed}
    values = {k: v for k, v in flags.items() if v is not None}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip()] = _parse_value(value)
    cfg = config_from_mapping(values, cfg)
    report = run_grid(cfg, keep_results=bool(args.dump_dir))
    emit_report(report, args.format, args.out)
    if args.dump_dir:
        dump_predictions(report, cfg, args.dump_dir)
    for rec in report.failed:
        print(f"cell {rec['model']}/{rec['solver']}/{rec['function']}/{rec['noise']} failed: {rec['error']}",
              file=sys.stderr)
    return 1 if report.failed else 0


def _cmd_trace(args) -> int:
    trace = trace_demo(args.model, args.solver, args.drive, args.out, n_steps=args.nt,
                       dt=args.dt, amplitude=args.amplitude)
    print(f"wrote {args.out}: {len(trace)} steps, {count_spikes(trace)} output spikes")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _cmd_run(args) if args.command == "run" else _cmd_trace(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
