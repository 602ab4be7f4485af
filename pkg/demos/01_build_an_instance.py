"""Generate a multi-day routing instance, look inside it, and round-trip it
through the JSON format.

Run:  python3 demos/01_build_an_instance.py
"""

from pathlib import Path
from tempfile import TemporaryDirectory

from evroute import GenConfig, generate, load, save

cfg = GenConfig(seed=42, event_count=6, max_days=1)
inst = generate(cfg)

print(f"instance: {inst.n} nodes, {inst.event_count} events, "
      f"{len(inst.separators)} day boundary(ies)")
print(f"battery: reserve {inst.k_min} km, start {inst.k_start} km, max {inst.k_max} km")
print()
print("node  kind       window (min)        stay  charger")
for nd in inst.nodes:
    window = f"[{nd.a_min:7.0f}, {nd.a_max:7.0f}]"
    charger = "-"
    if nd.charging is not None:
        charger = (f"{nd.charging.rate:.2f} km/min, walk {nd.charging.walk_time:.1f} min, "
                   f"up to {nd.charging.max_gain:.0f} km")
    print(f"{nd.id:>4}  {nd.kind.value:<9}  {window}  {nd.duration:4.0f}  {charger}")

# The normalized weights balance the distance, day-length and end-charge
# summands against the spreads estimated from the initial solution.
w = inst.weights
print()
print(f"weights: wd={w.wd:.6f} wt={w.wt:.6f} wc={w.wc:.6f} (prefs {w.prefs})")
print(f"summand bounds: distance {w.bounds[0]}, day length {w.bounds[1]}, "
      f"end charge {w.bounds[2]}")

# Instances serialize to versioned JSON and round-trip exactly.
with TemporaryDirectory() as d:
    path = Path(d) / "instance.json"
    save(inst, path)
    again = load(path)
    print()
    print(f"saved {path.stat().st_size} bytes; reload equal: {again == inst}")
