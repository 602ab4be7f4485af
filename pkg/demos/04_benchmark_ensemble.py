"""Run a miniature benchmark ensemble and print the aggregate report.

The full protocol (100 seeds, 15 s per run) is the default of
``BenchConfig``; this demo trims it to stay fast.

Run:  python3 demos/04_benchmark_ensemble.py
"""

from pathlib import Path
from tempfile import TemporaryDirectory

from evroute import BenchConfig, run_benchmark

with TemporaryDirectory() as d:
    cfg = BenchConfig(
        out_dir=d,
        seeds=tuple(range(4)),
        sizes=(4, 6),
        solvers=("exact", "ts", "alns", "aco"),
        per_run_time_limit=15.0,
    )
    runs_csv, agg_csv = run_benchmark(cfg)
    print(f"wrote {runs_csv} and {agg_csv}")
    print()
    print("aggregate (mean quality is scored against the exact optimum):")
    print(Path(agg_csv).read_text())
    print("first per-run rows:")
    for line in Path(runs_csv).read_text().splitlines()[:6]:
        print(" ", line)
