"""Command-line interface.

Subcommands: ``gen`` writes instance files, ``solve`` runs one solver on one
instance and emits a one-row report CSV, ``bench`` runs the ensemble
harness, ``lp`` writes the Big-M linear model text.  Exit codes: 0 success,
1 infeasible, 2 usage error, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bench import BenchConfig, SOLVER_IDS, run_benchmark, run_solver
from .core import normalize_weights
from .errors import EvrouteError, NoInitialSolutionError, NoSolutionFoundError
from .exact import linearize
from .gen import GenConfig, generate, load, save

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


def _parse_triple(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return tuple(parts)  # type: ignore[return-value]


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x != "")


def _parse_seeds(text: str) -> tuple[int, ...]:
    if "," in text:
        return _parse_int_list(text)
    return tuple(range(int(text)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evroute", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate instance files")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--count", type=int, default=1, help="number of consecutive seeds")
    g.add_argument("--out", required=True, help="output file (count=1) or directory")
    g.add_argument("--events", type=int, default=None, help="exact event count")
    g.add_argument("--max-events", type=int, default=120)
    g.add_argument("--max-days", type=int, default=5)
    g.add_argument("--area-km", type=float, default=50.0)
    g.add_argument("--fixed-fraction", type=float, default=0.5)
    g.add_argument("--station-probability", type=float, default=0.7)

    s = sub.add_parser("solve", help="solve one instance file")
    s.add_argument("instance", help="instance JSON path")
    s.add_argument("--solver", choices=SOLVER_IDS, default="hybrid")
    s.add_argument("--time-limit", type=float, default=15.0)
    s.add_argument("--seed", type=int, default=0, help="solver RNG seed")
    s.add_argument("--weights", type=_parse_triple, default=None, metavar="WD,WT,WC",
                   help="preference triple, renormalized against the instance")
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--out", default=None, help="report CSV path (default stdout)")

    b = sub.add_parser("bench", help="run the benchmark ensemble")
    b.add_argument("--seeds", type=_parse_seeds, default=tuple(range(100)),
                   help="count, or comma-separated seed list")
    b.add_argument("--sizes", type=_parse_int_list, default=(4, 6, 8))
    b.add_argument("--solvers", type=lambda t: tuple(t.split(",")), default=("exact", "ts", "alns", "aco"))
    b.add_argument("--time-limit", type=float, default=15.0)
    b.add_argument("--out", required=True, help="output directory")

    l = sub.add_parser("lp", help="emit the Big-M linear model as text")
    l.add_argument("instance", help="instance JSON path")
    l.add_argument("--out", default=None, help="output path (default stdout)")
    return parser


def _cmd_gen(args) -> int:
    cfg_kwargs = dict(
        max_events=args.max_events,
        max_days=args.max_days,
        area_km=args.area_km,
        fixed_fraction=args.fixed_fraction,
        station_probability=args.station_probability,
        event_count=args.events,
    )
    seeds = range(args.seed, args.seed + args.count)
    out = Path(args.out)
    if args.count == 1:
        paths = [out]
        out.parent.mkdir(parents=True, exist_ok=True)
    else:
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"instance_{seed}.json" for seed in seeds]
    for seed, path in zip(seeds, paths):
        inst = generate(GenConfig(seed=seed, **cfg_kwargs))
        save(inst, path)
        print(path)
    return EXIT_OK


def _cmd_solve(args) -> int:
    inst = load(args.instance)
    if args.epsilon is not None:
        inst = replace(inst, epsilon=args.epsilon)
    if args.weights is not None:
        inst = replace(inst, weights=normalize_weights(inst, args.weights))
    sched, status, _, wall_ms = run_solver(args.solver, inst, args.time_limit, args.seed)
    header = "solver,seed,n_events,objective,status,stops,order,wall_time_ms"
    if sched is None:
        row = f"{args.solver},{args.seed},{inst.event_count},,{status},,,{wall_ms:.6f}"
    else:
        order_txt = " ".join(str(u) for u in sched.order)
        row = (
            f"{args.solver},{args.seed},{inst.event_count},{sched.objective:.6f},"
            f"{status},{sched.stops},{order_txt},{wall_ms:.6f}"
        )
    text = header + "\n" + row + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK if sched is not None else EXIT_INFEASIBLE


def _cmd_bench(args) -> int:
    cfg = BenchConfig(
        out_dir=args.out,
        seeds=args.seeds,
        per_run_time_limit=args.time_limit,
        solvers=args.solvers,
        sizes=args.sizes,
    )
    runs_path, agg_path = run_benchmark(cfg)
    print(runs_path)
    print(agg_path)
    return EXIT_OK


def _cmd_lp(args) -> int:
    inst = load(args.instance)
    text = linearize(inst).to_text()
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "lp":
            return _cmd_lp(args)
        parser.error(f"unknown command {args.command!r}")
    except (NoInitialSolutionError, NoSolutionFoundError):
        print("infeasible: no feasible schedule found", file=sys.stderr)
        return EXIT_INFEASIBLE
    except EvrouteError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
