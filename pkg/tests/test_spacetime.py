import json

from railplan.instance import generate_synthetic
from railplan.spacetime import (
    arcs_of_kind,
    build_network,
    classify_wrap,
    network_to_dict,
    pickup_arcs,
    setout_arcs,
    wrap_arcs,
)

from .conftest import make_instance


def test_example_network_arc_taxonomy(three_terminal_example):
    net = build_network(three_terminal_example)
    assert len(pickup_arcs(net)) == 1
    assert len(setout_arcs(net)) == 1
    assert len(arcs_of_kind(net, "transition")) == 1
    ground_wraps = arcs_of_kind(net, "ground", lambda a: a.wrap)
    assert len(ground_wraps) == 3  # one per terminal
    # The set-out arc is the arrival-ground arc of the two-leg train's first leg.
    assert setout_arcs(net)[0].id == "R:a:1"
    assert pickup_arcs(net)[0].id == "E:a:2"


def test_single_leg_prep_and_inspect_nodes():
    inst = make_instance(
        ["A", "B"],
        {("A", "B"): 600, ("B", "A"): 600},
        [("t1", [("A", "B", 100, 1)], [])],
        prep_minutes=60,
        inspect_minutes=120,
    )
    net = build_network(inst)
    assert net.nodes["gd:t1:1"].time == 40
    assert net.nodes["ag:t1:1"].time == 820
    assert pickup_arcs(net) == [] and setout_arcs(net) == []


def test_early_departure_wraps_preparation():
    inst = make_instance(
        ["A", "B"],
        {("A", "B"): 600, ("B", "A"): 600},
        [("t1", [("A", "B", 30, 1)], [])],
    )
    net = build_network(inst)
    assert net.nodes["gd:t1:1"].time == (30 - 60) % 10080 == 10050
    arc = net.arcs["E:t1:1"]
    assert arc.wrap and arc.crossings == 1


def test_classify_wrap_examples():
    assert classify_wrap(10000, 200, 280) is True
    assert classify_wrap(0, 500, 500) is False
    assert classify_wrap(9900, 0, 180) is True  # lands exactly on the boundary


def test_arc_counts_linear_in_instance_size():
    for seed in (1, 4, 9):
        inst = generate_synthetic(seed, 4, 6, 3)
        net = build_network(inst)
        n_legs = len(inst.legs())
        n_transitions = sum(len(t.legs) - 1 for t in inst.trains)
        assert len(arcs_of_kind(net, "train")) == n_legs
        assert len(arcs_of_kind(net, "ground_departure")) == n_legs
        assert len(arcs_of_kind(net, "arrival_ground")) == n_legs
        assert len(arcs_of_kind(net, "transition")) == n_transitions
        assert len(arcs_of_kind(net, "ground", lambda a: a.wrap)) == len(inst.terminals)
        # one ground arc per ground node: the chain is a single cycle
        assert len(arcs_of_kind(net, "ground")) == len(net.ground_nodes())


def test_durations_within_horizon():
    inst = generate_synthetic(2, 4, 6, 3)
    net = build_network(inst)
    H = net.horizon
    for arc in net.arcs_in_order():
        if arc.kind == "ground":
            assert 0 <= arc.duration <= H
        else:
            assert 0 < arc.duration < H
        tail, head = net.nodes[arc.tail], net.nodes[arc.head]
        assert arc.duration % H == (head.time - tail.time) % H


def test_ground_chain_visits_every_ground_node_once():
    inst = generate_synthetic(6, 3, 5, 2)
    net = build_network(inst)
    for terminal, chain in net.ground_chains.items():
        nodes = {n.id for n in net.ground_nodes(terminal)}
        assert set(chain) == nodes and len(chain) == len(nodes)
        assert net.nodes[chain[0]].kind == "initial"
        times = [net.nodes[n].time for n in chain]
        assert times == sorted(times)


def test_every_noninitial_node_is_connected():
    inst = generate_synthetic(11, 4, 6, 2)
    net = build_network(inst)
    for node in net.nodes.values():
        if node.kind == "initial":
            continue
        assert net.in_arcs[node.id], node.id
        assert net.out_arcs[node.id], node.id


def test_terminal_without_traffic_gets_week_long_park_arc():
    inst = make_instance(
        ["A", "B", "C"],
        {("A", "B"): 500, ("B", "A"): 500, ("A", "C"): 400, ("C", "A"): 400, ("B", "C"): 450, ("C", "B"): 450},
        [("t1", [("A", "B", 100, 1)], [])],
    )
    net = build_network(inst)
    loop = [a for a in arcs_of_kind(net, "ground") if a.tail == a.head == "init:C"]
    assert len(loop) == 1 and loop[0].duration == 10080 and loop[0].wrap


def test_wrap_set_spans_all_kinds():
    inst = make_instance(
        ["A", "B"],
        {("A", "B"): 600, ("B", "A"): 600},
        [("t1", [("A", "B", 9900, 1)], [])],  # train arc crosses the boundary
    )
    net = build_network(inst)
    kinds = {a.kind for a in wrap_arcs(net)}
    assert "train" in kinds and "ground" in kinds
    assert net.arcs["T:t1:1"].wrap


def test_coincident_ground_events_are_ordered():
    # Arrival-ground lands at the same minute another leg starts preparation.
    inst = make_instance(
        ["A", "B"],
        {("A", "B"): 600, ("B", "A"): 600},
        [
            ("t1", [("A", "B", 100, 1)], []),  # ag at B at 820
            ("t2", [("B", "A", 880, 1)], []),  # gd at B at 820
        ],
    )
    net = build_network(inst)
    chain = net.ground_chains["B"]
    assert list(chain) == ["init:B", "ag:t1:1", "gd:t2:1"]
    zero = [a for a in arcs_of_kind(net, "ground") if a.duration == 0]
    assert any(a.tail == "ag:t1:1" and a.head == "gd:t2:1" for a in zero)


def test_network_dump_is_deterministic(three_terminal_example):
    a = json.dumps(network_to_dict(build_network(three_terminal_example)))
    b = json.dumps(network_to_dict(build_network(three_terminal_example)))
    assert a == b


def test_arcs_of_kind_ordering(three_terminal_example):
    net = build_network(three_terminal_example)
    trains = arcs_of_kind(net, "train")
    keys = [(net.nodes[a.tail].terminal, net.nodes[a.tail].time, a.id) for a in trains]
    assert keys == sorted(keys)
