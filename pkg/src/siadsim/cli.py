"""Command-line entry point: ``siadsim run|batch|validate``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import __version__
from .batch import emit_results, plan, run_batch
from .scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _fmt(x, spec=".4f"):
    return "-" if x is None else format(x, spec)


def _print_runs(result, out):
    for r in result.runs:
        s = r.summary
        rates = " ".join(f"{lab}={rate / 1e6:.3f}" for lab, rate in zip(s.flow_labels, s.flow_rates))
        print(f"{r.run_id} {json.dumps(r.point)} seed={r.seed} util={_fmt(s.utilization)} "
              f"fill={_fmt(s.queue_fill)} loss={_fmt(s.loss_rate, '.5f')} "
              f"dist={_fmt(s.mean_loss_event_distance, '.3f')} "
              f"conv={_fmt(s.convergence_time, '.2f')} Mbit/s: {rates}", file=out)


def _print_aggregate(result, out):
    for a in result.aggregate:
        parts = [json.dumps(a["point"]), f"runs={a['runs']}"]
        for name in ("utilization", "queue_fill", "convergence_time"):
            st = a[name]
            parts.append(f"{name}={_fmt(st['mean'])}[{_fmt(st['min'])},{_fmt(st['max'])}]")
        print(" ".join(parts), file=out)


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    n = len(plan(sc))
    print(f"ok: {sc.name} ({n} run{'s' if n != 1 else ''})")
    return EXIT_OK


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    result = run_batch(sc, 1, keep_traces=args.series)
    _print_runs(result, sys.stdout)
    if args.out:
        emit_results(result, args.out, series=args.series)
    return EXIT_OK


def cmd_batch(args) -> int:
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    result = run_batch(sc, args.reps, keep_traces=args.series, workers=args.workers)
    _print_runs(result, sys.stdout)
    _print_aggregate(result, sys.stdout)
    if args.out:
        emit_results(result, args.out, series=args.series)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="siadsim", description="Bottleneck congestion-control simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every point of a scenario once")
    r.add_argument("scenario")
    r.add_argument("--out", help="directory for summary, manifests and series")
    r.add_argument("--seed", type=int, help="override the scenario seed")
    r.add_argument("--series", action="store_true", help="also write cwnd/queue time series")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="run a sweep with repetitions and aggregate")
    b.add_argument("scenario")
    b.add_argument("--reps", type=int, required=True, help="seeds per grid point")
    b.add_argument("--out", help="directory for summary, aggregate and manifests")
    b.add_argument("--seed", type=int, help="first seed (default: scenario seed)")
    b.add_argument("--series", action="store_true", help="also write time series")
    b.add_argument("--workers", type=int, default=1, help="parallel processes")
    b.set_defaults(func=cmd_batch)

    v = sub.add_parser("validate", help="check a scenario file without running it")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:  # noqa: BLE001 - any failure inside a run maps to one exit code
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
