"""Emit the Big-M linear model for a tiny instance as portable text.

The file can be handed to any MIP front end; nothing in this package
solves it.

Run:  python3 demos/05_export_linear_model.py
"""

from evroute import GenConfig, generate, linearize

inst = generate(GenConfig(seed=6, event_count=2, max_days=1))
model = linearize(inst)

print(f"{len(model.variables)} variables, {len(model.rows)} constraint rows")
print(f"big-M constants: time {model.m_time:.1f} min, range {model.m_range:.1f} km")
print()
text = model.to_text()
lines = text.splitlines()
for line in lines[:14]:
    print(line)
print(f"... ({len(lines)} lines total)")
