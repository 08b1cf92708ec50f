"""Command-line pipeline: end-to-end runs, exit codes, determinism."""

import csv
import json

import pytest

from platoonplan.cli import main, run_montecarlo, write_montecarlo_csv


def _write_scenario_config(path, **scenario):
    doc = {"scenario": scenario}
    path.write_text(json.dumps(doc))
    return str(path)


def _generate(tmp_path, **scenario):
    cfg = _write_scenario_config(tmp_path / "config.json", **scenario)
    out = tmp_path / "gen"
    rc = main(["generate", "--config", cfg, "--out-dir", str(out)])
    assert rc == 0
    return cfg, out / "network.json", out / "assignments.json"


def test_generate_then_plan_end_to_end(tmp_path):
    weights = {
        f"n{r}_{c}": (1.0 if (r in (0, 5) and c in (0, 5)) else 0.05)
        for r in range(6)
        for c in range(6)
    }
    cfg, network, assignments = _generate(
        tmp_path, rows=6, cols=6, edge_len_m=8000.0, n_assignments=24, seed=4,
        start_window_s=900.0, node_weights=weights,
    )
    out = tmp_path / "run"
    rc = main(
        [
            "plan",
            "--network", str(network),
            "--assignments", str(assignments),
            "--config", cfg,
            "--out-dir", str(out),
            "--graph-csv",
            "--check",
        ]
    )
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["n_assignments"] == 24
    assert 0.0 <= report["saving_stage3"] <= report["saving_stage4"] < 1.0
    assert report["stage4_fuel_kg"] <= report["stage3_fuel_kg"] <= report["default_fuel_kg"]
    plans = json.loads((out / "plans.json").read_text())
    assert len(plans) == 24
    leaders = json.loads((out / "leaders.json").read_text())
    assert set(leaders["follower_of"].values()) <= set(leaders["leaders"])
    assert (out / "graph.csv").exists()
    # Stage-3 fuel drop equals the selected leader set's objective.
    stage3_drop = report["default_fuel_kg"] - report["stage3_fuel_kg"]
    assert stage3_drop == pytest.approx(leaders["objective_kg"], rel=1e-9, abs=1e-12)


def test_plan_rerun_reproduces_identical_outputs(tmp_path):
    cfg, network, assignments = _generate(
        tmp_path, rows=5, cols=5, edge_len_m=6000.0, n_assignments=16, seed=8,
        start_window_s=600.0,
    )
    outputs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        rc = main(
            ["plan", "--network", str(network), "--assignments", str(assignments),
             "--config", cfg, "--out-dir", str(out)]
        )
        assert rc == 0
        outputs.append(
            {f: (out / f).read_bytes() for f in ("plans.json", "leaders.json", "report.json")}
        )
    assert outputs[0] == outputs[1]


def test_plan_zero_assignments(tmp_path):
    cfg, network, assignments = _generate(
        tmp_path, rows=3, cols=3, edge_len_m=1000.0, n_assignments=0, seed=1
    )
    out = tmp_path / "empty"
    rc = main(
        ["plan", "--network", str(network), "--assignments", str(assignments),
         "--config", cfg, "--out-dir", str(out)]
    )
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["saving_stage4"] == 0.0
    assert json.loads((out / "plans.json").read_text()) == []


def test_malformed_network_exits_2(tmp_path):
    bad = tmp_path / "net.json"
    bad.write_text("{broken")
    assignments = tmp_path / "assignments.json"
    assignments.write_text("[]")
    rc = main(["plan", "--network", str(bad), "--assignments", str(assignments),
               "--out-dir", str(tmp_path / "x")])
    assert rc == 2


def test_missing_file_exits_2(tmp_path):
    rc = main(["plan", "--network", str(tmp_path / "nope.json"),
               "--assignments", str(tmp_path / "nada.json"),
               "--out-dir", str(tmp_path / "x")])
    assert rc == 2


def test_exact_subcommand_on_graph_dump(tmp_path):
    graph_csv = tmp_path / "graph.csv"
    graph_csv.write_text("src,dst,saving_kg\n1,3,2.0\n2,3,3.0\n3,1,1.0\n")
    out = tmp_path / "leaders.json"
    rc = main(["exact", "--graph-csv", str(graph_csv), "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["leaders"] == ["3"]
    assert doc["objective_kg"] == 5.0


def test_montecarlo_rows_and_means(tmp_path):
    cfg = _write_scenario_config(
        tmp_path / "config.json", rows=5, cols=5, edge_len_m=6000.0, start_window_s=900.0
    )
    rows = run_montecarlo(cfg, sizes=[10], runs=3, base_seed=123, selection="greedy", jobs=1)
    assert len(rows) == 3
    rows_again = run_montecarlo(cfg, sizes=[10], runs=3, base_seed=123, selection="greedy", jobs=1)
    metric_cols = ["size", "seed", "saving_stage3", "saving_stage4", "saving_spontaneous",
                   "upper_bound_rel"]
    strip = lambda rs: [{k: r[k] for k in metric_cols} for r in rs]
    assert strip(rows) == strip(rows_again)
    for r in rows:
        assert r["saving_stage4"] >= r["saving_stage3"] - 1e-12

    out = tmp_path / "mc.csv"
    write_montecarlo_csv(rows, [10], str(out))
    with open(out, newline="") as fh:
        parsed = list(csv.DictReader(fh))
    assert len(parsed) == 4  # 3 runs + 1 mean row
    assert parsed[-1]["seed"] == "mean"


def test_montecarlo_cli_parallel_jobs(tmp_path):
    cfg = _write_scenario_config(
        tmp_path / "config.json", rows=4, cols=4, edge_len_m=5000.0, start_window_s=600.0
    )
    out = tmp_path / "mc"
    rc = main(["montecarlo", "--config", cfg, "--runs", "2", "--sizes", "6,8",
               "--seed", "5", "--jobs", "2", "--out-dir", str(out)])
    assert rc == 0
    with open(out / "montecarlo.csv", newline="") as fh:
        parsed = list(csv.DictReader(fh))
    data_rows = [r for r in parsed if r["seed"] != "mean"]
    assert len(data_rows) == 4
    assert {r["size"] for r in data_rows} == {"6", "8"}


def test_plan_random_selection_and_exact(tmp_path):
    cfg, network, assignments = _generate(
        tmp_path, rows=4, cols=4, edge_len_m=6000.0, n_assignments=10, seed=21,
        start_window_s=300.0,
    )
    out_r = tmp_path / "rand"
    assert main(["plan", "--network", str(network), "--assignments", str(assignments),
                 "--config", cfg, "--out-dir", str(out_r),
                 "--selection", "random", "--seed", "3"]) == 0
    out_e = tmp_path / "ex"
    assert main(["plan", "--network", str(network), "--assignments", str(assignments),
                 "--config", cfg, "--out-dir", str(out_e), "--exact",
                 "--exact-limit", "10"]) == 0
    rand_rep = json.loads((out_r / "report.json").read_text())
    exact_rep = json.loads((out_e / "report.json").read_text())
    # Exact selection never does worse than the heuristic at stage 3.
    assert exact_rep["saving_stage3"] >= rand_rep["saving_stage3"] - 1e-12


def test_report_subcommand(tmp_path):
    cfg, network, assignments = _generate(
        tmp_path, rows=5, cols=5, edge_len_m=6000.0, n_assignments=12, seed=2,
        start_window_s=600.0,
    )
    out = tmp_path / "run"
    assert main(["plan", "--network", str(network), "--assignments", str(assignments),
                 "--config", cfg, "--out-dir", str(out)]) == 0
    rep_dir = tmp_path / "rep"
    rc = main(["report", "--report", str(out / "report.json"), "--out-dir", str(rep_dir)])
    assert rc == 0
    with open(rep_dir / "metrics.csv", newline="") as fh:
        metrics = {row["metric"]: row["value"] for row in csv.DictReader(fh)}
    assert "saving_stage4" in metrics
    with open(rep_dir / "histogram.csv", newline="") as fh:
        hist_rows = list(csv.DictReader(fh))
    assert all(set(r) == {"size", "meters"} for r in hist_rows)


def test_env_var_overrides_seed(tmp_path, monkeypatch):
    cfg = _write_scenario_config(tmp_path / "config.json", rows=3, cols=3,
                                 edge_len_m=1000.0, n_assignments=4)
    monkeypatch.setenv("PLATOON_SEED", "99")
    out1 = tmp_path / "env"
    assert main(["generate", "--config", cfg, "--out-dir", str(out1)]) == 0
    monkeypatch.delenv("PLATOON_SEED")
    out2 = tmp_path / "flag"
    assert main(["generate", "--config", cfg, "--seed", "99", "--out-dir", str(out2)]) == 0
    assert (out1 / "assignments.json").read_bytes() == (out2 / "assignments.json").read_bytes()
