"""The cyclic space-time network.

Every leg contributes a departure and arrival node plus two ground-side
nodes: where locomotives finish preparation before boarding, and where they
re-enter ground inventory after the post-arrival inspection.  Ground nodes
chain up per terminal and close the week with one wrap-around arc, so a
feasible flow is automatically a plan that repeats every week.
"""

from collections import Counter

from railplan import arcs_of_kind, build_network, generate_synthetic, pickup_arcs, setout_arcs, wrap_arcs

inst = generate_synthetic(seed=7, n_terminals=4, n_trains=10, max_legs=3)
net = build_network(inst)

print(f"nodes: {len(net.nodes)}, arcs: {len(net.arcs)}")
print("arcs by kind:", dict(Counter(a.kind for a in net.arcs_in_order())))
print(f"pick-up decision arcs: {len(pickup_arcs(net))} (ground-departures of legs after the first)")
print(f"set-out decision arcs: {len(setout_arcs(net))} (arrival-grounds of legs before the last)")

# The wrap-around set counts the fleet: any activity in progress at the week
# boundary holds a locomotive across weeks.
wraps = wrap_arcs(net)
print("wrap-around arcs by kind:", dict(Counter(a.kind for a in wraps)))
assert len(arcs_of_kind(net, "ground", lambda a: a.wrap)) == len(inst.terminals)

# A preparation window that starts before midnight Sunday wraps modularly.
early = [a for a in arcs_of_kind(net, "ground_departure") if a.wrap]
for arc in early[:3]:
    tail = net.nodes[arc.tail]
    head = net.nodes[arc.head]
    print(f"  wrapped preparation: {tail.terminal}@{tail.time} -> departure @{head.time}")

# Ground chains visit every ground node exactly once per cycle.
for terminal, chain in sorted(net.ground_chains.items()):
    times = [net.nodes[n].time for n in chain]
    assert times == sorted(times)
    print(f"  {terminal}: ground chain of {len(chain)} nodes, first/last minute {times[0]}/{times[-1]}")
