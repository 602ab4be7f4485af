"""Compare the exhaustive oracle, branch-and-bound and the three
metaheuristics on one small instance.

Run:  python3 demos/02_exact_vs_metaheuristics.py
"""

import time

from evroute import (
    AcoParams,
    BnBConfig,
    GenConfig,
    TsParams,
    aco,
    alns,
    generate,
    oracle,
    quality,
    quality_shift,
    solve_exact,
    tabu_search,
    validate,
)

inst = generate(GenConfig(seed=42, event_count=6, max_days=1))
shift = quality_shift(inst.weights)

reference = oracle(inst)
print(f"oracle optimum: {reference.objective:.6f}  order {reference.order}  "
      f"stops {reference.stops}")

runs = {}


def run(name, fn):
    start = time.perf_counter()
    sched = fn()
    wall = (time.perf_counter() - start) * 1000.0
    runs[name] = (sched, wall)


run("branch-and-bound", lambda: solve_exact(inst, BnBConfig(time_limit=15.0)).schedule)
run("tabu search", lambda: tabu_search(inst, params=TsParams(iterations=200)))
run("neighborhood search", lambda: alns(inst, rng_seed=1))
run("ant colony", lambda: aco(inst, params=AcoParams(iterations=100), rng_seed=0))

print()
print(f"{'solver':<20} {'objective':>10} {'quality':>8} {'stops':>5} {'ms':>8}  valid")
for name, (sched, wall) in runs.items():
    q = quality(sched.objective, min(reference.objective, sched.objective), shift)
    ok = validate(sched, inst) == []
    print(f"{name:<20} {sched.objective:>10.6f} {q:>8.4f} {sched.stops:>5} {wall:>8.1f}  {ok}")
