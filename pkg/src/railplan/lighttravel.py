"""Light-travel arc generation.

Two generators produce the repositioning arc set: the exact reduction
(earliest-reachability then latest-origin filtering, with careful wrap-around
handling) and the minimum-cost-flow heuristic (net weekly imbalances routed
on a terminal graph with congestion-penalized costs, then one arc per time
window for origin-destination pairs whose optimal flow exceeds a threshold).
A full enumerator exists for oracle testing on micro instances.

All generators return deterministically ordered lists of
:class:`LightArcSpec`.
"""

from __future__ import annotations

import heapq
import logging
import statistics
from dataclasses import dataclass

from .instance import Instance, net_power_balance
from .spacetime import Node, SpaceTimeNetwork, with_light_arcs

log = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 200
DEFAULT_WINDOW_MINUTES = 480
DEFAULT_FLOW_THRESHOLD = 1


class CapExceededError(RuntimeError):
    """Raised when full enumeration is attempted beyond the micro-instance cap."""


class McfError(RuntimeError):
    """Raised when the repositioning flow problem is ill-posed or disconnected."""


@dataclass(frozen=True)
class LightArcSpec:
    """One candidate light-travel arc between ground nodes of two terminals.

    ``transit`` is the pure travel time delta(tail terminal, head terminal);
    ``span`` additionally includes the wait at the destination until the head
    event, plus a full horizon for arcs whose head cannot be reached within
    the same cycle (the deceptive wrap case).  Costs are proportional to the
    transit time, so all arcs between the same terminal pair share identical
    costs regardless of departure time.
    """

    tail: str
    head: str
    tail_terminal: str
    head_terminal: str
    transit: int
    span: int
    wrap: bool
    crossings: int
    fixed_cost: float | int  # e_l
    unit_cost: float | int  # g_l


def _spec_sort_key(spec: LightArcSpec) -> tuple:
    return (spec.tail_terminal, spec.head_terminal, spec.tail, spec.head)


def _make_spec(net: SpaceTimeNetwork, tail: Node, head: Node, delta: int) -> LightArcSpec:
    H = net.horizon
    costs = net.instance.costs
    wait = (head.time - (tail.time + delta)) % H
    span = delta + wait
    crossings = (tail.time + span) // H
    return LightArcSpec(
        tail=tail.id,
        head=head.id,
        tail_terminal=tail.terminal,
        head_terminal=head.terminal,
        transit=delta,
        span=span,
        wrap=crossings > 0,
        crossings=crossings,
        fixed_cost=costs.e_rate * delta,
        unit_cost=costs.g_rate * delta,
    )


def _first_at_or_after(nodes: list[Node], t: int, horizon: int) -> Node | None:
    """First node (chain order) at or after minute ``t``, wrapping cyclically."""
    if not nodes:
        return None
    t = t % horizon
    for node in nodes:
        if node.time >= t:
            return node
    return nodes[0]


def _ground_nodes_by_terminal(net: SpaceTimeNetwork) -> dict[str, list[Node]]:
    return {
        term: [net.nodes[nid] for nid in chain]
        for term, chain in net.ground_chains.items()
    }


# ---------------------------------------------------------------------------
# Exact reduction and full enumeration


def enumerate_full_arcs(
    net: SpaceTimeNetwork, max_ground_nodes: int = DEFAULT_ENUMERATION_CAP
) -> list[LightArcSpec]:
    """Densest useful candidate set, for oracle testing on micro instances.

    Emits one arc from every ground node to the earliest ground-departure
    node it can reach at every other terminal (falling back to the initial
    node at terminals that never dispatch a train).  Waiting on the ground is
    free, so later entry points at the destination are reachable from the
    earliest one via the ground chain and add nothing.

    This set is strictly richer than the arrival-based universe the exact
    reduction draws from: departures from preparation or week-start nodes let
    units relay through an intermediate terminal without an arrival event
    there.  When several units may share one light-train crew (rho_u > 1),
    such relays can consolidate crew charges in ways no arrival-tailed arc
    set can express, so optimality comparisons against the reduction are
    guaranteed only under per-unit crews (rho_u = 1); see
    :func:`full_pairwise_arcs` for the capacity-independent comparison.
    """
    ground = _ground_nodes_by_terminal(net)
    total = sum(len(v) for v in ground.values())
    if total > max_ground_nodes:
        raise CapExceededError(
            f"full enumeration capped at {max_ground_nodes} ground nodes, instance has {total}"
        )
    transit = net.instance.transit
    H = net.horizon
    specs: list[LightArcSpec] = []
    for term_from in sorted(ground):
        for tail in ground[term_from]:
            for term_to in sorted(ground):
                if term_to == term_from:
                    continue
                delta = transit.get(term_from, term_to)
                if delta is None:
                    continue
                gd_nodes = [n for n in ground[term_to] if n.kind == "ground_departure"]
                head = _first_at_or_after(gd_nodes, (tail.time + delta) % H, H)
                if head is None:
                    head = next(n for n in ground[term_to] if n.kind == "initial")
                specs.append(_make_spec(net, tail, head, delta))
    return sorted(specs, key=_spec_sort_key)


def full_pairwise_arcs(
    net: SpaceTimeNetwork, max_ground_nodes: int = DEFAULT_ENUMERATION_CAP
) -> list[LightArcSpec]:
    """Every (arrival-ground, ground-departure) pair across terminals.

    The complete candidate universe the exact reduction is drawn from: one
    arc from each node where locomotives become idle to each node where they
    are required, at every other terminal with a transit entry.  On a cyclic
    horizon every such head is reachable (waiting wraps into the next week),
    so this is the densest arrival-based set.  The reduction provably loses
    nothing against it for any crew capacity.
    """
    ground = _ground_nodes_by_terminal(net)
    total = sum(len(v) for v in ground.values())
    if total > max_ground_nodes:
        raise CapExceededError(
            f"pairwise enumeration capped at {max_ground_nodes} ground nodes, instance has {total}"
        )
    transit = net.instance.transit
    specs: list[LightArcSpec] = []
    for term_from in sorted(ground):
        tails = [n for n in ground[term_from] if n.kind == "arrival_ground"]
        for term_to in sorted(ground):
            if term_to == term_from:
                continue
            delta = transit.get(term_from, term_to)
            if delta is None:
                continue
            heads = [n for n in ground[term_to] if n.kind == "ground_departure"]
            for tail in tails:
                for head in heads:
                    specs.append(_make_spec(net, tail, head, delta))
    return sorted(specs, key=_spec_sort_key)


def _earliest_reachability(net: SpaceTimeNetwork) -> list[LightArcSpec]:
    """Step 1 of the reduction: arrival-ground tails to the first reachable
    ground-departure node at each other terminal."""
    ground = _ground_nodes_by_terminal(net)
    transit = net.instance.transit
    H = net.horizon
    candidates: list[LightArcSpec] = []
    for term_from in sorted(ground):
        tails = [n for n in ground[term_from] if n.kind == "arrival_ground"]
        for term_to in sorted(ground):
            if term_to == term_from:
                continue
            delta = transit.get(term_from, term_to)
            if delta is None:
                continue
            gd_nodes = [n for n in ground[term_to] if n.kind == "ground_departure"]
            if not gd_nodes:
                continue
            for tail in tails:
                head = _first_at_or_after(gd_nodes, (tail.time + delta) % H, H)
                candidates.append(_make_spec(net, tail, head, delta))
    return candidates


def reduce_exact(net: SpaceTimeNetwork) -> list[LightArcSpec]:
    """Exact reduced light-travel arc set.

    Step 1 (earliest reachability): every arrival-ground node connects to the
    first ground-departure node it can reach at each other terminal, walking
    forward in cyclic time from arrival + transit.  Step 2 (latest origin
    filtering): among arcs from the same origin terminal into the same
    ground-departure node, only the one departing last - equivalently with
    the least idle time at the destination - is kept.  Arcs whose journey
    crosses the horizon are wrap arcs; this includes the deceptive case where
    the head lies numerically ahead of the tail but cannot be reached within
    the travel time, so it is only caught after the plan wraps around.
    """
    candidates = _earliest_reachability(net)

    # Latest origin filtering: minimal destination idle wins; ties go to the
    # latest tail event in chain order.
    best: dict[tuple[str, str], LightArcSpec] = {}
    tail_node = {spec.tail: net.nodes[spec.tail] for spec in candidates}
    for spec in candidates:
        key = (spec.head, spec.tail_terminal)
        idle = spec.span - spec.transit
        cur = best.get(key)
        if cur is None:
            best[key] = spec
            continue
        cur_idle = cur.span - cur.transit
        if idle < cur_idle:
            best[key] = spec
        elif idle == cur_idle:
            a, b = tail_node[spec.tail], tail_node[cur.tail]
            if (a.time, a.id) > (b.time, b.id):
                best[key] = spec
    return sorted(best.values(), key=_spec_sort_key)


# ---------------------------------------------------------------------------
# Minimum-cost-flow heuristic


def mcf_cost(delta_ij: float | int, o_ij: int, mcf_alpha: float) -> float | int:
    """Penalized repositioning cost between a terminal pair.

    Pairs served by at most two weekly trains cost their distance; busier
    pairs are penalized by ``alpha`` or ``alpha**2`` to discourage routing
    light power through heavily serviced corridors.
    """
    if mcf_alpha <= 2:
        raise ValueError(f"mcf_alpha must exceed 2, got {mcf_alpha}")
    if delta_ij <= 0:
        raise ValueError("delta_ij must be positive")
    if o_ij < 0:
        raise ValueError("o_ij must be non-negative")
    if o_ij <= 2:
        return delta_ij
    if o_ij < mcf_alpha:
        return delta_ij * mcf_alpha
    return delta_ij * mcf_alpha * mcf_alpha


@dataclass(frozen=True)
class McfProblem:
    supplies: dict[str, int]  # positive = surplus source, negative = deficit sink
    costs: dict[tuple[str, str], float | int]
    o_counts: dict[tuple[str, str], int]
    mcf_alpha: float


def build_mcf(inst: Instance, mcf_alpha: float | None = None) -> McfProblem:
    """Terminal-level repositioning flow problem from weekly net imbalances.

    ``o_ij`` counts scheduled legs between i and j in either direction.  The
    penalization factor defaults to the mean of the positive counts, nudged
    above 2 when the schedule is too sparse for the mean to be a valid factor.
    """
    supplies = net_power_balance(inst)
    ids = sorted(supplies)
    o_counts: dict[tuple[str, str], int] = {}
    for leg in inst.legs():
        for pair in ((leg.origin, leg.dest), (leg.dest, leg.origin)):
            o_counts[pair] = o_counts.get(pair, 0) + 1
    if mcf_alpha is None:
        positive = [v for v in o_counts.values() if v > 0]
        mean = statistics.mean(positive) if positive else 0.0
        mcf_alpha = float(mean) if mean > 2 else 2.0 + 1e-9
    elif mcf_alpha <= 2:
        raise ValueError(f"mcf_alpha must exceed 2, got {mcf_alpha}")
    costs = {}
    for i in ids:
        for j in ids:
            if i == j:
                continue
            delta = inst.transit.get(i, j)
            if delta is None:
                continue
            costs[(i, j)] = mcf_cost(delta, o_counts.get((i, j), 0), mcf_alpha)
    return McfProblem(supplies=supplies, costs=costs, o_counts=o_counts, mcf_alpha=mcf_alpha)


def solve_mcf(problem: McfProblem) -> dict[tuple[str, str], int]:
    """Integral min-cost flow via successive shortest paths with potentials.

    Deterministic: sources are drained in terminal-id order and shortest-path
    ties break toward lower terminal ids.  A complementary-slackness check
    runs before returning.
    """
    if sum(problem.supplies.values()) != 0:
        raise McfError("supplies must sum to zero")
    ids = sorted(problem.supplies)
    index = {k: i for i, k in enumerate(ids)}
    n = len(ids)

    # Residual network: per edge (head, cost, cap, index of reverse edge).
    graph: list[list[list]] = [[] for _ in range(n)]

    def add_edge(u: int, v: int, cost) -> None:
        graph[u].append([v, cost, float("inf"), len(graph[v]), True])
        graph[v].append([u, -cost, 0, len(graph[u]) - 1, False])

    for (i, j) in sorted(problem.costs):
        add_edge(index[i], index[j], problem.costs[(i, j)])

    remaining = {k: v for k, v in problem.supplies.items()}
    potential = [0.0] * n

    while True:
        sources = [k for k in ids if remaining[k] > 0]
        if not sources:
            break
        s = index[sources[0]]
        dist = [float("inf")] * n
        prev: list[tuple[int, int] | None] = [None] * n
        dist[s] = 0.0
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u] + 1e-12:
                continue
            for ei, edge in enumerate(graph[u]):
                v, cost, cap, _rev, _fwd = edge
                if cap <= 0:
                    continue
                nd = d + cost + potential[u] - potential[v]
                if nd < dist[v] - 1e-12:
                    dist[v] = nd
                    prev[v] = (u, ei)
                    heapq.heappush(heap, (nd, v))
        sinks = [k for k in ids if remaining[k] < 0 and dist[index[k]] < float("inf")]
        if not sinks:
            missing = [k for k in ids if remaining[k] < 0]
            raise McfError(
                f"no repositioning path from {ids[s]} to deficit terminals {missing}; "
                "transit entries leave the terminal graph disconnected"
            )
        t = index[min(sinks, key=lambda k: (dist[index[k]], k))]

        amount = min(remaining[ids[s]], -remaining[ids[t]])
        v = t
        while v != s:
            u, ei = prev[v]
            amount = min(amount, graph[u][ei][2])
            v = u
        v = t
        while v != s:
            u, ei = prev[v]
            edge = graph[u][ei]
            edge[2] -= amount
            graph[edge[0]][edge[3]][2] += amount
            v = u
        for k in range(n):
            if dist[k] < float("inf"):
                potential[k] += dist[k]
        remaining[ids[s]] -= amount
        remaining[ids[t]] += amount

    flows: dict[tuple[str, str], int] = {}
    for u in range(n):
        for edge in graph[u]:
            v, cost, cap, _rev, forward = edge
            if forward:
                flow = graph[v][edge[3]][2]  # reverse residual capacity equals flow
                if flow > 0:
                    flows[(ids[u], ids[v])] = int(flow)
            # Complementary slackness: open residual edges cannot be improving.
            if cap > 0 and cost + potential[u] - potential[v] < -1e-6:
                raise McfError("complementary slackness violated; flow is not optimal")
    return flows


def mcf_flow_cost(problem: McfProblem, flows: dict[tuple[str, str], int]):
    return sum(problem.costs[pair] * units for pair, units in flows.items())


def mcf_insert_arcs(
    net: SpaceTimeNetwork,
    flow: dict[tuple[str, str], int],
    window_minutes: int = DEFAULT_WINDOW_MINUTES,
    threshold: int = DEFAULT_FLOW_THRESHOLD,
) -> list[LightArcSpec]:
    """Insert one space-time arc per time window for busy repositioning pairs.

    Only origin-destination pairs with flow strictly greater than
    ``threshold`` receive arcs.  Each window contributes one arc from the
    earliest origin ground node inside it; empty windows borrow from the
    nearest non-empty window, ties resolved toward the earlier one.
    Duplicate (tail, head) pairs produced by borrowing collapse to one arc.
    """
    H = net.horizon
    if window_minutes <= 0 or window_minutes > H:
        raise ValueError("window_minutes must lie in (0, horizon]")
    n_windows = -(-H // window_minutes)
    ground = _ground_nodes_by_terminal(net)
    transit = net.instance.transit

    specs: dict[tuple[str, str], LightArcSpec] = {}
    for (term_from, term_to) in sorted(flow):
        if flow[(term_from, term_to)] <= threshold:
            continue
        delta = transit.get(term_from, term_to)
        if delta is None:
            log.warning("no transit entry for flow pair (%s, %s); skipped", term_from, term_to)
            continue
        origins = ground.get(term_from, [])
        dest_nodes = ground.get(term_to, [])
        if not origins or not dest_nodes:
            log.warning("no ground nodes for flow pair (%s, %s); skipped", term_from, term_to)
            continue
        by_window: dict[int, list[Node]] = {}
        for node in origins:
            by_window.setdefault(node.time // window_minutes, []).append(node)
        occupied = sorted(by_window)
        for w in range(n_windows):
            if w in by_window:
                tail = by_window[w][0]
            else:
                nearest = min(occupied, key=lambda w2: (abs(w2 - w), w2))
                tail = by_window[nearest][0]
            head = _first_at_or_after(dest_nodes, (tail.time + delta) % H, H)
            spec = _make_spec(net, tail, head, delta)
            specs.setdefault((spec.tail, spec.head), spec)
    return sorted(specs.values(), key=_spec_sort_key)


# ---------------------------------------------------------------------------
# Method dispatch and the reduction-optimality check


def generate_light_arcs(
    net: SpaceTimeNetwork,
    method: str = "exact",
    mcf_window: int = DEFAULT_WINDOW_MINUTES,
    mcf_threshold: int = DEFAULT_FLOW_THRESHOLD,
    mcf_alpha: float | None = None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> list[LightArcSpec]:
    if method == "exact":
        return reduce_exact(net)
    if method == "full":
        return enumerate_full_arcs(net, max_ground_nodes=enumeration_cap)
    if method == "mcf":
        problem = build_mcf(net.instance, mcf_alpha=mcf_alpha)
        flow = solve_mcf(problem)
        return mcf_insert_arcs(net, flow, window_minutes=mcf_window, threshold=mcf_threshold)
    raise ValueError(f"unknown light-travel method {method!r}")


@dataclass(frozen=True)
class ReductionComparison:
    objective_full: float | int | None
    objective_reduced: float | int | None
    status_full: str
    status_reduced: str
    n_full_arcs: int
    n_reduced_arcs: int

    @property
    def equal(self) -> bool:
        return (
            self.status_full == "optimal"
            and self.status_reduced == "optimal"
            and self.objective_full == self.objective_reduced
        )


def verify_reduction_optimality(
    inst: Instance,
    budget=None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
    candidates: str = "full",
) -> ReductionComparison:
    """Solve the model once with a dense candidate arc set and once with the
    exact reduction; both proven optima must coincide.

    ``candidates`` selects the dense side: ``"pairwise"`` uses every
    arrival-to-departure pair (lossless for any crew capacity), ``"full"``
    additionally allows departures from preparation and week-start nodes,
    for which the no-loss guarantee requires per-unit crews (rho_u = 1).
    """
    from .model import build_base_model
    from .solver import solve_bb

    from .spacetime import build_network

    net = build_network(inst)
    if candidates == "pairwise":
        full = full_pairwise_arcs(net, max_ground_nodes=enumeration_cap)
    elif candidates == "full":
        full = enumerate_full_arcs(net, max_ground_nodes=enumeration_cap)
    else:
        raise ValueError(f"unknown candidate set {candidates!r}")
    reduced = reduce_exact(net)
    results = []
    for specs in (full, reduced):
        model = build_base_model(with_light_arcs(net, specs), specs, inst.costs)
        results.append(solve_bb(model, budget=budget))
    return ReductionComparison(
        objective_full=results[0].objective,
        objective_reduced=results[1].objective,
        status_full=results[0].status,
        status_reduced=results[1].status,
        n_full_arcs=len(full),
        n_reduced_arcs=len(reduced),
    )
