import json

from railplan.cli import main
from railplan.instance import instance_to_dict, save_instance
from railplan.report import read_report


def _write(tmp_path, inst, name="inst.json"):
    path = tmp_path / name
    save_instance(inst, path)
    return str(path)


def test_generate_validate_solve_report_round_trip(tmp_path):
    inst_path = str(tmp_path / "gen.json")
    assert main(["generate", "--seed", "3", "--terminals", "3", "--trains", "4", "--max-legs", "2", "--out", inst_path]) == 0
    assert main(["validate", "--instance", inst_path]) == 0

    sol_path = str(tmp_path / "sol.json")
    assert main(["solve", "--instance", inst_path, "--out", sol_path, "--budget-seconds", "60"]) == 0
    sol = json.loads(open(sol_path).read())
    assert sol["status"] == "optimal"
    assert sol["decomposition"]["ownership"] > 0

    report_path = str(tmp_path / "kpi.csv")
    heatmap_path = str(tmp_path / "heat.csv")
    assert main([
        "report", "--instance", inst_path, "--solution", sol_path,
        "--format", "csv", "--out", report_path, "--heatmap", heatmap_path,
    ]) == 0
    rows = read_report(report_path, "csv")
    assert len(rows) == 1 and rows[0]["status"] == "optimal"
    heat = read_report(heatmap_path, "csv")
    assert all(set(r) == {"terminal", "day", "events"} for r in heat)


def test_validate_rejects_bad_instance(tmp_path, round_trip_instance):
    doc = instance_to_dict(round_trip_instance)
    doc["trains"][0]["legs"][0]["arr"] = 999  # duration mismatch
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", "--instance", str(bad)]) == 2


def test_validate_rejects_unparseable_file(tmp_path):
    bad = tmp_path / "broken.json"
    bad.write_text("{nope")
    assert main(["validate", "--instance", str(bad)]) == 2


def test_build_writes_mps_and_dump(tmp_path, three_terminal_example):
    inst_path = _write(tmp_path, three_terminal_example)
    mps_path = tmp_path / "model.mps"
    dump_path = tmp_path / "net.json"
    assert main(["build", "--instance", inst_path, "--out", str(mps_path), "--network-dump", str(dump_path)]) == 0
    assert mps_path.read_text().startswith("NAME")
    dump = json.loads(dump_path.read_text())
    assert {a["kind"] for a in dump["arcs"]} >= {"train", "ground", "light"}


def test_solve_infeasible_exit_code(tmp_path):
    from .conftest import make_instance

    # One train out and no transit entry home: no light arc can be generated,
    # so the weekly cycle cannot close.
    inst = make_instance(
        ["A", "B"],
        {("A", "B"): 500},
        [("t1", [("A", "B", 100, 1)], [])],
    )
    inst_path = _write(tmp_path, inst)
    code = main(["solve", "--instance", inst_path, "--lt-method", "exact", "--budget-seconds", "30"])
    assert code == 3


def test_solve_budget_exit_code(tmp_path):
    from railplan.instance import generate_synthetic

    inst_path = _write(tmp_path, generate_synthetic(12, 4, 6, 2))
    code = main(
        ["solve", "--instance", inst_path, "--budget-nodes", "1", "--budget-seconds", "60", "--out", str(tmp_path / "s.json")]
    )
    assert code in (0, 4)  # 4 when the single node leaves no incumbent
    data = json.loads((tmp_path / "s.json").read_text())
    assert data["status"] in ("budget_exceeded", "optimal")


def test_sweep_cli_writes_rows(tmp_path, round_trip_instance):
    inst_path = _write(tmp_path, round_trip_instance)
    out = tmp_path / "sweep.csv"
    assert (
        main(
            [
                "sweep", "--instance", inst_path, "--param", "q",
                "--factors", "0.5,1.0,2.0", "--format", "csv", "--out", str(out),
                "--budget-seconds", "60",
            ]
        )
        == 0
    )
    rows = read_report(out, "csv")
    assert [r["factor"] for r in rows] == ["0.5", "1.0", "2.0"]
    assert all(r["status"] == "optimal" for r in rows)


def test_ladder_cli_writes_rows(tmp_path, ladder_instance):
    inst_path = _write(tmp_path, ladder_instance)
    out = tmp_path / "ladder.json"
    assert (
        main(
            [
                "ladder", "--instance", inst_path, "--versions", "V3,V5",
                "--steps", "2", "--format", "json", "--out", str(out),
                "--budget-seconds", "60",
            ]
        )
        == 0
    )
    rows = read_report(out, "json")
    assert rows[0]["version"] == "V1prime"
    assert {r["version"] for r in rows} == {"V1prime", "V3", "V5"}


def test_unknown_extension_version_fails_cleanly(tmp_path, round_trip_instance):
    inst_path = _write(tmp_path, round_trip_instance)
    assert main(["solve", "--instance", inst_path, "--extension", "V3", "--budget-seconds", "10"]) == 2  # missing --alpha


def test_mcf_knobs_accepted(tmp_path, strict_dominance_instance):
    inst_path = _write(tmp_path, strict_dominance_instance)
    out = tmp_path / "m.mps"
    assert (
        main(
            [
                "build", "--instance", inst_path, "--lt-method", "mcf",
                "--mcf-window", "480", "--mcf-threshold", "1", "--mcf-alpha", "3.5",
                "--out", str(out),
            ]
        )
        == 0
    )
    assert out.read_text().startswith("NAME")
