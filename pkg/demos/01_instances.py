"""Build, save and inspect problem instances.

An instance is the weekly world the planner sees: terminals, transit times,
scheduled train legs with their power demands, railcar work-event flags at
intermediate stops, and the cost parameters.  This script generates a small
synthetic instance, round-trips it through JSON, and looks at the weekly
power balance that drives all repositioning.
"""

import json
import tempfile
from pathlib import Path

from railplan import (
    generate_synthetic,
    load_instance,
    net_power_balance,
    save_instance,
    validate_instance,
)

inst = generate_synthetic(seed=7, n_terminals=4, n_trains=10, max_legs=3)
print(f"terminals: {[t.id for t in inst.terminals]}")
print(f"trains: {len(inst.trains)}, legs: {len(inst.legs())}")
print(f"violations: {validate_instance(inst)}")

# Every instance lives in a stable JSON schema.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "instance.json"
    save_instance(inst, path)
    again = load_instance(path)
    doc = json.loads(path.read_text())
    print(f"schema_version: {doc['schema_version']}, file keys: {sorted(doc)}")
    assert len(again.legs()) == len(inst.legs())

# Surplus terminals accumulate locomotives over the week; deficit terminals
# run out.  The imbalance is what light travel and deadheading must fix.
balance = net_power_balance(inst)
print("net weekly power balance (arrivals - departures):")
for terminal, value in sorted(balance.items()):
    tag = "surplus" if value > 0 else "deficit" if value < 0 else "balanced"
    print(f"  {terminal}: {value:+d}  ({tag})")
assert sum(balance.values()) == 0
