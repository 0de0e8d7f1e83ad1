"""Cost-sensitivity sweeps.

Each cost coefficient is scaled independently while the rest stay put:
ownership (q), light-travel crew rate (e), the work-event cost triple (c),
and the relocation rate (g).  With proven optima the objective is always
non-decreasing and concave in the factor; the interesting part is how the
plan itself shifts between fleet size, work events and repositioning.
"""

from railplan import SolveBudget, SweepConfig, generate_synthetic, run_sweep

inst = generate_synthetic(seed=12, n_terminals=3, n_trains=4, max_legs=2)
factors = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)

for parameter in ("q", "e", "c", "g"):
    rows = run_sweep(
        inst,
        SweepConfig(parameter=parameter, factors=factors, budget=SolveBudget(max_seconds=60)),
    )
    print(f"\nsweep over {parameter}:")
    print(f"  {'factor':>7} {'objective':>10} {'fleet':>5} {'events':>6} {'lt_min':>6} {'dh_min':>6}")
    for row in rows:
        print(
            f"  {row['factor']:>7} {row['objective']:>10} {row['fleet_size']:>5}"
            f" {row['work_events']:>6} {row['lt_minutes']:>6} {row['dh_minutes']:>6}"
        )
    values = [row["objective"] for row in rows]
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))
print("\nall sweeps non-decreasing in the scaled coefficient, as proven optima must be")
