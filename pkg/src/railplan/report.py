"""KPIs, sensitivity sweeps, extension ladders, and tabular emission.

The KPI ledger partitions every locomotive-minute of the week: active
traction, deadheading, pre-departure preparation, post-arrival inspection,
connection dwell, light travel, and idle ground time.  Because flow
conservation routes every unit through a full week of arcs, the shares sum
to exactly one when divided by fleet size times the horizon.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .instance import Instance, instance_from_dict, instance_to_dict
from .lighttravel import generate_light_arcs
from .model import (
    ConfigError,
    ExtensionConfig,
    InfeasibleStartError,
    MilpModel,
    apply_extension,
    build_base_model,
    group_events_by_terminal_day,
    warm_start_from,
)
from .solver import Solution, SolveBudget, check_feasibility, evaluate_objective, solve_bb
from .spacetime import SpaceTimeNetwork, build_network, pickup_arcs, setout_arcs, with_light_arcs

SHARE_KEYS = (
    "active",
    "deadhead",
    "pre_departure",
    "post_arrival",
    "connection",
    "light_travel",
    "idle",
)

KPI_COLUMNS = (
    "fleet_size",
    "work_events",
    "pickups",
    "setouts",
    "pickup_units",
    "setout_units",
    "active_terminals",
    "active_terminal_days",
    "coverage_ratio",
    "light_arcs_used",
    "light_trains",
    "light_od_pairs",
    "dh_minutes",
    "lt_minutes",
    *(f"share_{k}" for k in SHARE_KEYS),
    "cost_ownership",
    "cost_deadhead",
    "cost_light_travel",
    "cost_work_events",
)

SWEEP_COLUMNS = (
    "parameter",
    "factor",
    "status",
    "objective",
    "lower_bound",
    "upper_bound",
    "node_count",
    "wall_time",
    *KPI_COLUMNS,
)

LADDER_COLUMNS = (
    "version",
    "alpha",
    "warm_started",
    "status",
    "objective",
    "improvement_vs_v1prime_pct",
    "node_count",
    "wall_time",
    *KPI_COLUMNS,
)


@dataclass(frozen=True)
class KpiReport:
    fleet_size: int
    work_events: int
    pickups: int
    setouts: int
    pickup_units: int
    setout_units: int
    active_terminals: int
    active_terminal_days: int
    coverage_ratio: float
    light_arcs_used: int
    light_trains: int
    light_od_pairs: int
    dh_minutes: int
    lt_minutes: int
    activity_minutes: dict[str, int]
    activity_shares: dict[str, float]
    cost_breakdown: dict[str, float]
    objective: float | int

    def per_train_minutes(self, n_trains: int) -> dict[str, float]:
        """Weekly average minutes per scheduled train spent in each activity."""
        if n_trains <= 0:
            raise ValueError("n_trains must be positive")
        return {key: self.activity_minutes[key] / n_trains for key in SHARE_KEYS}

    def to_row(self) -> dict:
        row = {
            "fleet_size": self.fleet_size,
            "work_events": self.work_events,
            "pickups": self.pickups,
            "setouts": self.setouts,
            "pickup_units": self.pickup_units,
            "setout_units": self.setout_units,
            "active_terminals": self.active_terminals,
            "active_terminal_days": self.active_terminal_days,
            "coverage_ratio": self.coverage_ratio,
            "light_arcs_used": self.light_arcs_used,
            "light_trains": self.light_trains,
            "light_od_pairs": self.light_od_pairs,
            "dh_minutes": self.dh_minutes,
            "lt_minutes": self.lt_minutes,
        }
        for key in SHARE_KEYS:
            row[f"share_{key}"] = self.activity_shares[key]
        for key in ("ownership", "deadhead", "light_travel", "work_events"):
            row[f"cost_{key}"] = self.cost_breakdown.get(key, 0)
        return row


def compute_kpis(net: SpaceTimeNetwork | None, model: MilpModel, sol: Solution) -> KpiReport:
    """All KPI fields from a feasible solution.

    Light arcs log their pure travel minutes as light travel; the wait at the
    destination baked into the arc span counts as idle, as does any extra
    cycle a deceptive wrap arc spans.
    """
    if sol.values is None:
        raise ValueError("solution carries no values")
    net = net or model.network
    if net is None:
        raise ValueError("a network is required to compute KPIs")
    violations = check_feasibility(model, sol.values)
    if violations:
        raise ValueError(
            "solution is infeasible for the model: " + ", ".join(v.tag for v in violations[:5])
        )
    values = sol.values
    H = net.horizon

    minutes = {key: 0 for key in SHARE_KEYS}
    fleet = 0
    light_arcs_used = 0
    light_od: set[tuple[str, str]] = set()
    for arc in net.arcs_in_order():
        x = values[f"x:{arc.id}"]
        fleet += arc.crossings * x
        if arc.kind == "train":
            minutes["active"] += arc.b * arc.duration
            minutes["deadhead"] += (x - arc.b) * arc.duration
        elif arc.kind == "ground_departure":
            minutes["pre_departure"] += x * arc.duration
        elif arc.kind == "arrival_ground":
            minutes["post_arrival"] += x * arc.duration
        elif arc.kind == "transition":
            minutes["connection"] += x * arc.duration
        elif arc.kind == "ground":
            minutes["idle"] += x * arc.duration
        elif arc.kind == "light":
            minutes["light_travel"] += x * arc.transit
            minutes["idle"] += x * (arc.duration - arc.transit)
            if x > 0:
                light_arcs_used += 1
                light_od.add((net.nodes[arc.tail].terminal, net.nodes[arc.head].terminal))

    light_trains = sum(
        values[v.id] for v in model.variables if v.family == "u"
    )

    so_arcs = setout_arcs(net)
    pu_arcs = pickup_arcs(net)
    setouts = sum(values[f"yso:{a.id}"] for a in so_arcs)
    pickups = sum(values[f"ypu:{a.id}"] for a in pu_arcs)
    setout_units = sum(values[f"x:{a.id}"] for a in so_arcs if values[f"yso:{a.id}"] > 0)
    pickup_units = sum(values[f"x:{a.id}"] for a in pu_arcs if values[f"ypu:{a.id}"] > 0)
    opportunities = len(so_arcs) + len(pu_arcs)
    coverage = (setouts + pickups) / opportunities if opportunities else 0.0

    groups = group_events_by_terminal_day(net)
    events_at = {
        key: sum(values[so] + values[pu] for so, pu in pairs) for key, pairs in groups.items()
    }
    active_days = [key for key, n in events_at.items() if n > 0]
    active_terminals = {k for (k, _d) in active_days}

    denom = fleet * H
    shares = {key: (minutes[key] / denom if denom else 0.0) for key in SHARE_KEYS}

    objective, breakdown = evaluate_objective(model, values)
    return KpiReport(
        fleet_size=fleet,
        work_events=setouts + pickups,
        pickups=pickups,
        setouts=setouts,
        pickup_units=pickup_units,
        setout_units=setout_units,
        active_terminals=len(active_terminals),
        active_terminal_days=len(active_days),
        coverage_ratio=coverage,
        light_arcs_used=light_arcs_used,
        light_trains=light_trains,
        light_od_pairs=len(light_od),
        dh_minutes=minutes["deadhead"],
        lt_minutes=minutes["light_travel"],
        activity_minutes=minutes,
        activity_shares=shares,
        cost_breakdown=breakdown,
        objective=objective,
    )


def event_heatmap_rows(net: SpaceTimeNetwork, sol: Solution) -> list[dict]:
    """Work-event counts per (terminal, day) in long form.

    The tabular stand-in for activation heatmaps: one row per terminal-day
    with at least one scheduled stop, in (terminal, day) order.
    """
    if sol.values is None:
        raise ValueError("solution carries no values")
    groups = group_events_by_terminal_day(net)
    return [
        {
            "terminal": k,
            "day": d,
            "events": sum(sol.values[so] + sol.values[pu] for so, pu in pairs),
        }
        for (k, d), pairs in sorted(groups.items())
    ]


# ---------------------------------------------------------------------------
# Pipeline helper


def scaled_costs(costs, parameter: str, factor: float):
    """Scaling conventions: q scales ownership only, e the light-travel crew
    rate, c all three work-event costs jointly, g the relocation rate used by
    both deadheading and light travel."""
    if factor <= 0:
        raise ValueError("factors must be positive")
    if parameter == "q":
        return replace(costs, q=costs.q * factor)
    if parameter == "e":
        return replace(costs, e_rate=costs.e_rate * factor)
    if parameter == "c":
        return replace(costs, c1=costs.c1 * factor, c2=costs.c2 * factor, c3=costs.c3 * factor)
    if parameter == "g":
        return replace(costs, g_rate=costs.g_rate * factor)
    raise ValueError(f"unknown sweep parameter {parameter!r}")


def assemble(
    inst: Instance,
    lt_method: str = "exact",
    extension: ExtensionConfig | None = None,
    costs=None,
    mcf_window: int = 480,
    mcf_threshold: int = 1,
    mcf_alpha: float | None = None,
    mutual_exclusion: bool = True,
):
    """Build (merged network, light specs, model) for an instance."""
    net = build_network(inst)
    specs = generate_light_arcs(
        net, method=lt_method, mcf_window=mcf_window, mcf_threshold=mcf_threshold, mcf_alpha=mcf_alpha
    )
    merged = with_light_arcs(net, specs)
    model = build_base_model(merged, specs, costs or inst.costs, mutual_exclusion=mutual_exclusion)
    if extension is not None and extension.version != "V0":
        model = apply_extension(model, extension)
    return merged, specs, model


# ---------------------------------------------------------------------------
# Sensitivity sweeps


def default_factors() -> tuple[float, ...]:
    return tuple(round(0.1 * i, 1) for i in range(1, 10)) + tuple(float(i) for i in range(1, 11))


@dataclass(frozen=True)
class SweepConfig:
    parameter: str  # one of q, e, c, g
    factors: tuple[float, ...] = field(default_factory=default_factors)
    lt_method: str = "exact"
    budget: SolveBudget | None = None
    mcf_window: int = 480
    mcf_threshold: int = 1
    mcf_alpha: float | None = None
    parallel: int = 0

    def __post_init__(self):
        if self.parameter not in ("q", "e", "c", "g"):
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        if any(f <= 0 for f in self.factors):
            raise ValueError("factors must be positive")
        if list(self.factors) != sorted(self.factors):
            raise ValueError("factors must be sorted ascending")


def _solution_row(sol: Solution, net, model) -> dict:
    row = {
        "status": sol.status,
        "objective": sol.objective,
        "lower_bound": sol.bounds[0],
        "upper_bound": sol.bounds[1],
        "node_count": sol.node_count,
        "wall_time": round(sol.wall_time, 4),
    }
    if sol.values is not None:
        row.update(compute_kpis(net, model, sol).to_row())
    else:
        row.update({col: None for col in KPI_COLUMNS})
    return row


def _sweep_cell(payload: dict) -> dict:
    inst = instance_from_dict(payload["instance"])
    cfg = SweepConfig(
        parameter=payload["parameter"],
        factors=(payload["factor"],),
        lt_method=payload["lt_method"],
        mcf_window=payload["mcf_window"],
        mcf_threshold=payload["mcf_threshold"],
        mcf_alpha=payload["mcf_alpha"],
    )
    budget = SolveBudget(**payload["budget"]) if payload["budget"] else None
    return _run_one_factor(inst, cfg, payload["factor"], budget)


def _run_one_factor(inst: Instance, cfg: SweepConfig, factor: float, budget) -> dict:
    costs = scaled_costs(inst.costs, cfg.parameter, factor)
    net, _specs, model = assemble(
        inst,
        lt_method=cfg.lt_method,
        costs=costs,
        mcf_window=cfg.mcf_window,
        mcf_threshold=cfg.mcf_threshold,
        mcf_alpha=cfg.mcf_alpha,
    )
    sol = solve_bb(model, budget=budget)
    row = {"parameter": cfg.parameter, "factor": factor}
    row.update(_solution_row(sol, net, model))
    return row


def run_sweep(inst: Instance, cfg: SweepConfig) -> list[dict]:
    """One proven (or budget-limited) solve per factor, rows in factor order.

    Per-cell budget exhaustion is recorded in the row; the sweep continues.
    """
    if cfg.parallel and cfg.parallel > 1:
        payloads = [
            {
                "instance": instance_to_dict(inst),
                "parameter": cfg.parameter,
                "factor": factor,
                "lt_method": cfg.lt_method,
                "mcf_window": cfg.mcf_window,
                "mcf_threshold": cfg.mcf_threshold,
                "mcf_alpha": cfg.mcf_alpha,
                "budget": {
                    "max_seconds": cfg.budget.max_seconds,
                    "max_nodes": cfg.budget.max_nodes,
                    "rel_gap": cfg.budget.rel_gap,
                }
                if cfg.budget
                else None,
            }
            for factor in cfg.factors
        ]
        with ProcessPoolExecutor(max_workers=cfg.parallel) as pool:
            return list(pool.map(_sweep_cell, payloads))

    # Light arcs do not depend on cost rates, so generate once and rebuild
    # only the model per factor.
    base_net = build_network(inst)
    specs = generate_light_arcs(
        base_net,
        method=cfg.lt_method,
        mcf_window=cfg.mcf_window,
        mcf_threshold=cfg.mcf_threshold,
        mcf_alpha=cfg.mcf_alpha,
    )
    merged = with_light_arcs(base_net, specs)
    rows = []
    for factor in cfg.factors:
        costs = scaled_costs(inst.costs, cfg.parameter, factor)
        model = build_base_model(merged, specs, costs)
        sol = solve_bb(model, budget=cfg.budget)
        row = {"parameter": cfg.parameter, "factor": factor}
        row.update(_solution_row(sol, merged, model))
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Extension ladders


def default_alpha_grid(version: str, baseline, steps: int) -> list[int]:
    """Activation budget grids: terminals move in steps of one, terminal-days
    in steps of five; redesigns start from the baseline-active counts."""
    if version == "V1":
        return list(range(steps))
    if version == "V2":
        return list(range(steps))
    if version == "V3":
        return [5 * i for i in range(steps)]
    active_pairs = baseline.active_pairs()
    if version == "V4":
        start = len({k for (k, _d) in active_pairs})
        return [start + i for i in range(steps)]
    if version == "V5":
        start = len(active_pairs)
        return [start + 5 * i for i in range(steps)]
    raise ConfigError(f"no ladder grid for version {version!r}")


def _config_for(version: str, alpha: int, theta) -> ExtensionConfig:
    kwargs = {"version": version, "theta": theta}
    key = {"V1": "lambda_", "V2": "alpha_c", "V3": "alpha_d", "V4": "alpha_e", "V5": "alpha_f"}[version]
    kwargs[key] = alpha
    return ExtensionConfig(**kwargs)


def run_extension_ladder(
    inst: Instance,
    versions: list[str],
    budgets: list[int] | None = None,
    warm_chain: bool = True,
    theta: float | int = 6,
    steps: int = 4,
    budget: SolveBudget | None = None,
    lt_method: str = "exact",
) -> list[dict]:
    """Solve the capacity-doubling reference first, then each requested
    version across its activation-budget grid, warm-chaining consecutive
    rungs when enabled.  Objective improvement is reported relative to the
    reference solve."""
    if inst.baseline is None:
        raise ConfigError("extension ladders require an instance with a baseline plan")
    net, _specs, base_model = assemble(inst, lt_method=lt_method)

    rows: list[dict] = []
    v1p_model = apply_extension(base_model, ExtensionConfig(version="V1prime", theta=theta))
    v1p_sol = solve_bb(v1p_model, budget=budget)
    row = {"version": "V1prime", "alpha": None, "warm_started": False}
    row.update(_solution_row(v1p_sol, net, v1p_model))
    row["improvement_vs_v1prime_pct"] = 0.0
    rows.append(row)
    reference = v1p_sol.objective

    for version in versions:
        if version == "V1prime":
            continue
        grid = budgets if budgets is not None else default_alpha_grid(version, inst.baseline, steps)
        prev_sol = None
        for alpha in grid:
            model = apply_extension(base_model, _config_for(version, alpha, theta))
            warm_used = False
            if warm_chain:
                for source in (prev_sol, v1p_sol):
                    if source is None or source.values is None:
                        continue
                    try:
                        model = warm_start_from(model, source)
                        warm_used = True
                        break
                    except InfeasibleStartError:
                        continue
            sol = solve_bb(model, budget=budget)
            row = {"version": version, "alpha": alpha, "warm_started": warm_used}
            row.update(_solution_row(sol, net, model))
            if reference and sol.objective is not None:
                row["improvement_vs_v1prime_pct"] = 100.0 * (reference - sol.objective) / reference
            else:
                row["improvement_vs_v1prime_pct"] = None
            rows.append(row)
            if sol.values is not None:
                prev_sol = sol
    return rows


# ---------------------------------------------------------------------------
# Emission


def emit_report(rows: list[dict], format: str = "csv", path=None, columns=None) -> None:
    """Write rows as CSV (RFC-4180 quoting) or JSON with a stable column order."""
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    if format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
    elif format == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump([{k: row.get(k) for k in columns} for row in rows], fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown report format {format!r}")


def read_report(path, format: str = "json") -> list[dict]:
    if format == "json":
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    if format == "csv":
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))
    raise ValueError(f"unknown report format {format!r}")
