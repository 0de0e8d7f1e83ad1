import json
import math

import pytest

from railplan.lighttravel import reduce_exact
from railplan.model import build_base_model
from railplan.report import (
    KPI_COLUMNS,
    SweepConfig,
    assemble,
    compute_kpis,
    default_factors,
    emit_report,
    read_report,
    run_extension_ladder,
    run_sweep,
    scaled_costs,
)
from railplan.solver import SolveBudget, solve_bb
from railplan.spacetime import build_network, with_light_arcs

from .conftest import make_instance


def _solve(inst):
    net = build_network(inst)
    specs = reduce_exact(net)
    merged = with_light_arcs(net, specs)
    model = build_base_model(merged, specs, inst.costs)
    return merged, model, solve_bb(model, SolveBudget(max_seconds=60))


def test_round_trip_kpis_hand_ledger(round_trip_instance):
    merged, model, sol = _solve(round_trip_instance)
    k = compute_kpis(merged, model, sol)
    assert k.fleet_size == 1
    assert k.dh_minutes == 0 and k.lt_minutes == 0
    assert k.work_events == 0 and k.coverage_ratio == 0.0
    H = round_trip_instance.horizon
    assert k.activity_shares["active"] == 1200 / H
    assert k.activity_shares["pre_departure"] == 120 / H
    assert k.activity_shares["post_arrival"] == 240 / H
    assert k.activity_shares["idle"] == 8520 / H
    assert sum(k.activity_shares.values()) == pytest.approx(1.0, abs=1e-12)
    assert k.cost_breakdown["ownership"] == k.objective


def test_per_train_minutes_view(round_trip_instance):
    merged, model, sol = _solve(round_trip_instance)
    k = compute_kpis(merged, model, sol)
    per_train = k.per_train_minutes(len(round_trip_instance.trains))
    assert per_train["active"] == 600
    assert sum(per_train.values()) * len(round_trip_instance.trains) == k.fleet_size * round_trip_instance.horizon
    with pytest.raises(ValueError):
        k.per_train_minutes(0)


def test_dh_minutes_zero_when_flows_match_power(round_trip_instance):
    merged, model, sol = _solve(round_trip_instance)
    trains = [a for a in merged.arcs_in_order() if a.kind == "train"]
    assert all(sol.values[f"x:{a.id}"] == a.b for a in trains)
    assert compute_kpis(merged, model, sol).dh_minutes == 0


def test_light_train_minutes_and_count():
    # Two units must return by light travel over a 600-minute hop.
    inst = make_instance(
        ["A", "B"],
        {("A", "B"): 600, ("B", "A"): 600},
        [("t1", [("A", "B", 300, 2)], [])],
        f=2,
        rho_u=2,
    )
    merged, model, sol = _solve(inst)
    assert sol.status == "optimal"
    k = compute_kpis(merged, model, sol)
    assert k.lt_minutes == 1200
    assert k.light_trains == 1
    assert k.light_arcs_used == 1 and k.light_od_pairs == 1
    assert sum(k.activity_shares.values()) == pytest.approx(1.0, abs=1e-12)


def test_kpis_reject_infeasible_values(round_trip_instance):
    merged, model, sol = _solve(round_trip_instance)
    from dataclasses import replace

    bad = replace(sol, values=dict(sol.values))
    bad.values["x:T:t1:1"] = 0
    with pytest.raises(ValueError, match="infeasible"):
        compute_kpis(merged, model, bad)


def test_coverage_ratio_bounds(ladder_instance):
    merged, model, sol = _solve(ladder_instance)
    k = compute_kpis(merged, model, sol)
    assert 0.0 <= k.coverage_ratio <= 1.0


def test_default_factors_grid():
    factors = default_factors()
    assert factors[0] == pytest.approx(0.1)
    assert factors[-1] == 10.0
    assert len(factors) == 19
    assert list(factors) == sorted(factors)


def test_scaled_costs_conventions(round_trip_instance):
    c = round_trip_instance.costs
    assert scaled_costs(c, "q", 2.0).q == 2 * c.q
    assert scaled_costs(c, "e", 0.5).e_rate == 0.5 * c.e_rate
    sc = scaled_costs(c, "c", 3.0)
    assert (sc.c1, sc.c2, sc.c3) == (3 * c.c1, 3 * c.c2, 3 * c.c3)
    assert scaled_costs(c, "g", 4.0).g_rate == 4 * c.g_rate
    with pytest.raises(ValueError):
        scaled_costs(c, "z", 1.0)


def test_sweep_factor_one_matches_direct_solve(round_trip_instance):
    rows = run_sweep(
        round_trip_instance,
        SweepConfig(parameter="q", factors=(1.0,), budget=SolveBudget(max_seconds=60)),
    )
    _merged, _model, direct = _solve(round_trip_instance)
    assert len(rows) == 1
    assert rows[0]["objective"] == direct.objective
    assert rows[0]["status"] == "optimal"


def test_sweep_rows_in_factor_order(round_trip_instance):
    rows = run_sweep(
        round_trip_instance,
        SweepConfig(parameter="g", factors=(0.5, 1.0, 2.0), budget=SolveBudget(max_seconds=60)),
    )
    assert [r["factor"] for r in rows] == [0.5, 1.0, 2.0]
    for row in rows:
        assert row["parameter"] == "g"
        for col in KPI_COLUMNS:
            assert col in row


def test_high_crew_cost_discourages_light_minutes(strict_dominance_instance):
    lo, hi = (
        run_sweep(
            strict_dominance_instance,
            SweepConfig(parameter="e", factors=(f,), budget=SolveBudget(max_seconds=60)),
        )[0]
        for f in (0.1, 10.0)
    )
    assert lo["status"] == hi["status"] == "optimal"
    assert hi["lt_minutes"] <= lo["lt_minutes"]


def test_ladder_requires_baseline(round_trip_instance):
    from railplan.model import ConfigError

    with pytest.raises(ConfigError):
        run_extension_ladder(round_trip_instance, ["V3"])


def test_ladder_reports_reference_and_improvement(ladder_instance):
    rows = run_extension_ladder(
        ladder_instance, ["V3"], steps=2, budget=SolveBudget(max_seconds=60)
    )
    assert rows[0]["version"] == "V1prime"
    assert rows[0]["improvement_vs_v1prime_pct"] == 0.0
    v3_rows = [r for r in rows if r["version"] == "V3"]
    assert [r["alpha"] for r in v3_rows] == [0, 5]
    assert all(r["improvement_vs_v1prime_pct"] >= -1e-9 for r in v3_rows)


def test_emit_empty_rows_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    emit_report([], "csv", path, columns=["factor", "objective"])
    assert path.read_bytes() == b"factor,objective\r\n"


def test_emit_single_row_csv(tmp_path):
    path = tmp_path / "one.csv"
    emit_report([{"factor": 1.0, "objective": 42}], "csv", path, columns=["factor", "objective"])
    assert path.read_bytes() == b"factor,objective\r\n1.0,42\r\n"


def test_emit_csv_quotes_embedded_commas(tmp_path):
    path = tmp_path / "quoted.csv"
    emit_report([{"name": 'a,"b"', "v": 1}], "csv", path, columns=["name", "v"])
    assert path.read_text().splitlines()[1] == '"a,""b""",1'


def test_json_report_round_trip(tmp_path):
    rows = [{"factor": 0.5, "objective": 12.5, "status": "optimal"}]
    path = tmp_path / "rows.json"
    emit_report(rows, "json", path, columns=["factor", "objective", "status"])
    assert read_report(path, "json") == rows
    assert json.loads(path.read_text()) == rows


def test_sweep_continues_past_budget_exhaustion(ladder_instance):
    rows = run_sweep(
        ladder_instance,
        SweepConfig(
            parameter="q",
            factors=(0.5, 1.0),
            budget=SolveBudget(max_seconds=60, max_nodes=2),
        ),
    )
    assert len(rows) == 2
    assert all(r["status"] in ("optimal", "budget_exceeded") for r in rows)
    assert any(r["status"] == "budget_exceeded" for r in rows)
    for row in rows:
        if row["status"] == "budget_exceeded" and row["objective"] is None:
            assert row["fleet_size"] is None  # KPI columns stay present but empty


def test_sweep_parallel_matches_serial(round_trip_instance):
    cfg = dict(parameter="q", factors=(0.5, 1.0), budget=SolveBudget(max_seconds=60))
    serial = run_sweep(round_trip_instance, SweepConfig(**cfg))
    parallel = run_sweep(round_trip_instance, SweepConfig(**cfg, parallel=2))
    for a, b in zip(serial, parallel):
        assert a["objective"] == b["objective"]
        assert a["factor"] == b["factor"]


def test_event_heatmap_rows(ladder_instance):
    from railplan.report import event_heatmap_rows

    merged, model, sol = _solve(ladder_instance)
    rows = event_heatmap_rows(merged, sol)
    assert rows == sorted(rows, key=lambda r: (r["terminal"], r["day"]))
    total = sum(r["events"] for r in rows)
    assert total == compute_kpis(merged, model, sol).work_events


def test_assemble_pipeline_smoke(ladder_instance):
    merged, specs, model = assemble(ladder_instance, lt_method="mcf")
    assert model.network is merged
    assert len(model.vars_of_family("u")) == len(specs)
    assert math.isfinite(sum(model.objective.values()))
