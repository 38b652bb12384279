"""Command line: ``hbms generate | solve | bench``.

Exit codes for ``solve``: 0 solved, 2 no feasible assignment found, 1 error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from hbms.bench import (
    ALGORITHMS,
    BenchPlan,
    UnsupportedAlgorithm,
    draw_instance,
    format_summary,
    run_algorithm,
    run_bench,
    summarize,
    to_record,
)
from hbms.generator import ConfigError, GeneratorConfig, generate
from hbms.instance_io import ParseError, parse_instance, read_results_csv, serialize_instance
from hbms.instance_io import write_results_csv
from hbms.model import format_utility
from hbms.oracle import BudgetExceeded

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def _sweep(text: str) -> tuple[int, ...]:
    try:
        lo, hi = (int(x) for x in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError("sweep start exceeds end")
    return tuple(range(lo, hi + 1))


def _generator_flags(p: argparse.ArgumentParser, seed_help: str) -> None:
    p.add_argument("--n", type=int, default=10, help="number of variables")
    p.add_argument("--domain", type=int, default=10, help="domain size (values 0..domain-1)")
    p.add_argument("--density", type=float, default=0.4)
    p.add_argument("--hard-ratio", type=float, default=0.3)
    p.add_argument("--tightness", type=float, default=0.5, help="probability a hard pair is allowed")
    p.add_argument("--utility-max", type=int, default=500)
    p.add_argument("--seed", type=int, default=0, help=seed_help)
    p.add_argument("--sweep", type=_sweep, help="variable counts a..b (overrides --n)")
    p.add_argument("--instances-per-point", type=int, default=1)


def _config(args) -> GeneratorConfig:
    return GeneratorConfig(
        n_vars=args.n,
        domain_size=args.domain,
        graph_density=args.density,
        hard_ratio=args.hard_ratio,
        utility_max=args.utility_max,
        hard_tightness=args.tightness,
        seed=args.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hbms", description="Bounded Max-Sum solvers for DCOPs")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write random instance files")
    _generator_flags(g, "instance seed, or base seed with --sweep")
    g.add_argument("--out", help="output file (single instance) or directory (sweep)")

    s = sub.add_parser("solve", help="solve one instance file")
    s.add_argument("instance", help="instance file, '-' for stdin")
    s.add_argument("--alg", choices=ALGORITHMS, default="hbms")
    s.add_argument("--out", help="results CSV to write")

    b = sub.add_parser("bench", help="paired BMS/HBMS sweep")
    _generator_flags(b, "base seed")
    b.set_defaults(sweep=_sweep("5..15"), instances_per_point=20)
    b.add_argument("--alg", default="bms,hbms", help="comma separated algorithms")
    b.add_argument("--out", default="results.csv", help="results CSV path")
    b.add_argument("--timings", action="store_true", help="fill wall_ms (breaks byte determinism)")
    b.add_argument("--workers", type=int, default=1)
    return parser


def cmd_generate(args, parser) -> int:
    try:
        config = _config(args).validate()
    except ConfigError as exc:
        parser.error(str(exc))
    if args.sweep is None and args.instances_per_point == 1:
        text = serialize_instance(generate(config))
        if args.out:
            Path(args.out).write_text(text)
            print(f"{args.out}\tseed={config.seed}\tn={config.n_vars}")
        else:
            sys.stdout.write(text)
            print(f"-\tseed={config.seed}\tn={config.n_vars}", file=sys.stderr)
        return EXIT_OK
    sweep = args.sweep or (args.n,)
    if any(n < 2 for n in sweep):
        parser.error("n_vars must be at least 2")
    out = Path(args.out or "instances")
    out.mkdir(parents=True, exist_ok=True)
    plan = BenchPlan(sweep, args.instances_per_point, config, ("bms",), args.seed)
    for n in sweep:
        for i in range(args.instances_per_point):
            planned, inst = draw_instance(plan, n, i)
            path = out / f"{planned.instance_id}.dcop"
            path.write_text(serialize_instance(inst))
            print(f"{path}\tseed={planned.seed}\tn={n}")
    return EXIT_OK


def cmd_solve(args, parser) -> int:
    try:
        text = sys.stdin.read() if args.instance == "-" else Path(args.instance).read_text()
        inst = parse_instance(text)
        result = run_algorithm(inst, args.alg)
    except (OSError, ParseError, BudgetExceeded, UnsupportedAlgorithm) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"algorithm\t{result.algorithm}")
    print(f"value\t{format_utility(result.value)}")
    print(f"feasible\t{'true' if result.feasible else 'false'}")
    if result.bound is not None:
        print(f"vm\t{format_utility(result.bound.vm)}")
        print(f"B\t{format_utility(result.bound.B)}")
        print(f"upper_bound\t{format_utility(result.bound.upper_bound)}")
    print(f"wall_ms\t{result.wall_ms:.3f}")
    if result.assignment is not None:
        names = " ".join(f"{inst.variables[i].name}={v}" for i, v in sorted(result.assignment.items()))
        print(f"assignment\t{names}")
    if args.out:
        record = to_record(Path(args.instance).stem, None, inst, result)
        Path(args.out).write_text(write_results_csv([record]))
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_bench(args, parser) -> int:
    algorithms = tuple(a for a in args.alg.split(",") if a)
    try:
        config = replace(_config(args), n_vars=max(2, args.n)).validate()
        plan = BenchPlan(args.sweep, args.instances_per_point, config, algorithms, args.seed)
    except (ConfigError, ValueError) as exc:
        parser.error(str(exc))
    records = run_bench(plan, workers=args.workers)
    # the printed summary keeps timings even when the CSV omits them
    summary = summarize(read_results_csv(write_results_csv(records)))
    if not args.timings:
        records = [replace(r, wall_ms=None) for r in records]
    Path(args.out).write_text(write_results_csv(records))
    sys.stdout.write(format_summary(summary, algorithms))
    print(f"results written to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"generate": cmd_generate, "solve": cmd_solve, "bench": cmd_bench}[args.command]
    return handler(args, parser)


if __name__ == "__main__":
    sys.exit(main())
