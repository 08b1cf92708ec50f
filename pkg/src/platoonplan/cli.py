"""Command-line orchestration of the four-stage coordination pipeline.

Stages: (1) shortest routes, (2) pairwise adapted plans collected into the
coordination graph, (3) leader selection, (4) joint speed-profile
optimization per coordination group. Subcommands:

    generate    sample a scenario, write network + assignment files
    plan        run the pipeline on a scenario, write plans and a report
    exact       optimal leader selection on a dumped coordination graph
    montecarlo  repeated runs over assignment counts, aggregate CSV
    report      expand a report JSON into metrics/histogram CSVs

Exit codes: 0 ok, 1 infeasible or diverged, 2 input error. Logs are one
JSON object per line on stderr. Selected flags fall back to PLATOON_*
environment variables before their built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from . import evaluation, scenario
from .coordination_graph import build, load_graph_csv, save_graph_csv
from .fuel_model import FuelModel, plan_fuel
from .joint_optimization import (
    SolverSettings,
    build_group,
    extract_plans,
    solve,
)
from .leader_selection import SizeLimitError, cluster, exact, upper_bound
from .planning import (
    Assignment,
    InfeasibleDeadlineError,
    VehiclePlan,
    default_plan,
    sample,
    validate,
)
from .road_network import (
    NetworkFormatError,
    RoadNetwork,
    load_network,
    positions_coincide,
    save_network,
)
from .scenario import ScenarioConfig, ScenarioError

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2


def _log(event: str, **fields) -> None:
    print(json.dumps({"event": event, **fields}, sort_keys=True), file=sys.stderr)


def _env_default(name: str, fallback, cast=str):
    raw = os.environ.get(f"PLATOON_{name}")
    if raw is None:
        return fallback
    return cast(raw)


@dataclass
class RunConfig:
    model: FuelModel
    scenario: ScenarioConfig
    selection: str = "greedy"
    seed: int = 0
    exact_selection: bool = False
    exact_limit: int = 20
    solver: SolverSettings = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.solver is None:
            self.solver = SolverSettings()


def load_config(path: Optional[str]) -> RunConfig:
    doc = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read config {path}: {exc}") from exc
    solver_block = doc.get("solver", {})
    return RunConfig(
        model=FuelModel.from_config(doc.get("fuel", {})),
        scenario=ScenarioConfig.from_json(doc.get("scenario", {})),
        selection=doc.get("selection", "greedy"),
        seed=int(doc.get("seed", 0)),
        exact_limit=int(doc.get("exact_limit", 20)),
        solver=SolverSettings(
            tol=float(solver_block.get("tol", 1e-8)),
            max_iter=int(solver_block.get("max_iter", 200)),
            barrier_mu=float(solver_block.get("barrier_mu", 10.0)),
        ),
    )


@dataclass
class PipelineResult:
    assignments: dict
    routes: dict
    default_plans: dict
    stage3_plans: dict
    stage4_plans: dict
    leader_set: object
    graph: object
    report: evaluation.RunReport
    group_logs: list


def run_pipeline(
    net: RoadNetwork,
    assignments: list[Assignment],
    run: RunConfig,
    routes: Optional[dict] = None,
) -> PipelineResult:
    """Stages 1-4 over prepared assignments; raises on infeasible inputs."""
    amap = {a.id: a for a in assignments}

    if routes is None:
        routes = {}
        for a in assignments:
            r = _route_for_assignment(net, a)
            if r is None:
                raise ScenarioError(f"assignment {a.id}: no route exists")
            routes[a.id] = r

    default_plans = {aid: default_plan(amap[aid], routes[aid], run.model) for aid in amap}

    graph, plan_cache = build(amap, routes, default_plans, run.model)

    if run.exact_selection:
        leader_set = exact(graph, limit=run.exact_limit)
    else:
        leader_set = cluster(graph, rule=run.selection, seed=run.seed)

    stage3_plans = dict(default_plans)
    for follower, leader in leader_set.follower_of.items():
        stage3_plans[follower] = plan_cache[(follower, leader)]

    stage4_plans = dict(default_plans)
    group_logs = []
    groups_of: dict = {}
    for follower, leader in leader_set.follower_of.items():
        groups_of.setdefault(leader, []).append(follower)
    for leader, members in sorted(groups_of.items()):
        group = build_group(
            amap[leader],
            default_plans[leader],
            [(amap[f], plan_cache[(f, leader)]) for f in sorted(members)],
        )
        before = sum(
            plan_fuel(run.model, stage3_plans[m]) for m in group.members()
        )
        sol = solve(group, run.model, run.solver)
        plans = extract_plans(group, sol, run.model)
        stage4_plans.update(plans)
        group_logs.append(
            {
                "leader": leader,
                "followers": len(members),
                "newton_steps": sol.newton_steps,
                "converged": sol.converged,
                "objective_before_kg": before,
                "objective_after_kg": sol.objective,
                "kkt_residual": sol.kkt_residual,
            }
        )

    report = evaluation.make_report(
        amap,
        default_plans,
        stage3_plans,
        stage4_plans,
        run.model,
        upper_bound_kg=upper_bound(graph),
        n_leaders=len(leader_set.leaders),
    )
    return PipelineResult(
        assignments=amap,
        routes=routes,
        default_plans=default_plans,
        stage3_plans=stage3_plans,
        stage4_plans=stage4_plans,
        leader_set=leader_set,
        graph=graph,
        report=report,
        group_logs=group_logs,
    )


def _route_for_assignment(net: RoadNetwork, a: Assignment):
    from .road_network import shortest_route

    return shortest_route(net, a.start, a.dest)


def check_follower_coincidence(result: PipelineResult, net: RoadNetwork) -> list[str]:
    """1 s grid audit that every follower rides exactly on its leader."""
    problems = []
    for truck, plan in result.stage4_plans.items():
        if plan.platoon_leader_id is None:
            continue
        leader_plan = result.stage4_plans[plan.platoon_leader_id]
        t_m, t_sp = plan.platoon_interval()
        t = t_m
        while t < t_sp:
            own = sample(plan, t).position
            lead = sample(leader_plan, t).position
            if not positions_coincide(net, own, lead, tol=1e-6):
                problems.append(
                    f"{truck} at t={t:.1f}: {own} vs leader {lead}"
                )
                break
            t += 1.0
    return problems


def validate_all(result: PipelineResult, model: FuelModel) -> list[str]:
    problems = []
    for stage, plans in (("stage3", result.stage3_plans), ("stage4", result.stage4_plans)):
        for truck, plan in plans.items():
            issues = validate(plan, result.assignments[truck], model)
            problems.extend(f"{stage}/{truck}: {msg}" for msg in issues)
    return problems


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _plan_to_doc(truck: str, plan: VehiclePlan) -> dict:
    return {
        "id": truck,
        "route": {
            "edges": list(plan.route.edges),
            "start_offset_m": plan.route.start_offset,
            "dest_offset_m": plan.route.dest_offset,
        },
        "speeds_ms": list(plan.speeds),
        "breakpoints_s": list(plan.times),
        "follower_flags": list(plan.follower_flags),
        "leader_id": plan.platoon_leader_id,
    }


def _write_outputs(out_dir: str, result: PipelineResult, graph_csv: bool) -> None:
    os.makedirs(out_dir, exist_ok=True)
    plans_doc = [
        _plan_to_doc(truck, plan) for truck, plan in sorted(result.stage4_plans.items())
    ]
    with open(os.path.join(out_dir, "plans.json"), "w", encoding="utf-8") as fh:
        json.dump(plans_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    leaders_doc = {
        "leaders": sorted(result.leader_set.leaders),
        "follower_of": dict(sorted(result.leader_set.follower_of.items())),
        "objective_kg": result.leader_set.objective,
    }
    with open(os.path.join(out_dir, "leaders.json"), "w", encoding="utf-8") as fh:
        json.dump(leaders_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(result.report.to_json())
        fh.write("\n")
    if graph_csv:
        save_graph_csv(result.graph, os.path.join(out_dir, "graph.csv"))


def cmd_generate(args) -> int:
    run = load_config(args.config)
    if args.seed is not None:
        run.scenario.seed = args.seed
    if args.size is not None:
        run.scenario.n_assignments = args.size
    net, assignments, _ = scenario.generate(run.scenario, run.model)
    os.makedirs(args.out_dir, exist_ok=True)
    save_network(net, os.path.join(args.out_dir, "network.json"))
    scenario.save_assignments(assignments, os.path.join(args.out_dir, "assignments.json"))
    _log(
        "generated",
        out_dir=args.out_dir,
        nodes=len(net.nodes),
        edges=len(net.edges),
        assignments=len(assignments),
        seed=run.scenario.seed,
    )
    return EXIT_OK


def cmd_plan(args) -> int:
    run = load_config(args.config)
    if args.selection is not None:
        run.selection = args.selection
    if args.seed is not None:
        run.seed = args.seed
    run.exact_selection = args.exact
    if args.exact_limit is not None:
        run.exact_limit = args.exact_limit

    net = load_network(args.network)
    assignments = scenario.load_assignments(args.assignments)
    for a in assignments:
        net.check_position(a.start)
        net.check_position(a.dest)

    result = run_pipeline(net, assignments, run)
    problems = validate_all(result, run.model)
    if args.check:
        problems.extend(check_follower_coincidence(result, net))
    if problems:
        for p in problems[:20]:
            _log("plan_invalid", detail=p)
        return EXIT_INFEASIBLE
    _write_outputs(args.out_dir, result, args.graph_csv)
    for entry in result.group_logs:
        _log("group_solved", **entry)
    _log(
        "planned",
        out_dir=args.out_dir,
        assignments=len(assignments),
        leaders=len(result.leader_set.leaders),
        followers=len(result.leader_set.follower_of),
        saving_stage3=result.report.saving_stage3,
        saving_stage4=result.report.saving_stage4,
    )
    return EXIT_OK


def cmd_exact(args) -> int:
    graph = load_graph_csv(args.graph_csv)
    leader_set = exact(graph, limit=args.limit)
    doc = {
        "leaders": sorted(leader_set.leaders),
        "follower_of": dict(sorted(leader_set.follower_of.items())),
        "objective_kg": leader_set.objective,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _log("exact_done", nodes=len(graph.nodes), objective_kg=leader_set.objective)
    return EXIT_OK


def _montecarlo_run(payload: tuple) -> dict:
    """One seeded pipeline run; top-level so process pools can pickle it.

    Failures are reported as rows with an "error" key so a bad seed never
    aborts the whole batch.
    """
    config_path, size, size_idx, run_idx, base_seed, selection = payload
    seed = base_seed + 10_000 * size_idx + run_idx
    try:
        run = load_config(config_path)
        run.selection = selection
        run.scenario.n_assignments = size
        run.scenario.seed = seed
        run.seed = seed
        started = time.perf_counter()
        net, assignments, routes = scenario.generate(run.scenario, run.model)
        result = run_pipeline(net, assignments, run, routes=routes)
        wallclock = time.perf_counter() - started
    except Exception as exc:  # recorded, aggregation continues
        return {"size": size, "seed": seed, "error": f"{type(exc).__name__}: {exc}"}
    rep = result.report
    return {
        "size": size,
        "seed": seed,
        "saving_stage3": rep.saving_stage3,
        "saving_stage4": rep.saving_stage4,
        "saving_spontaneous": rep.saving_spontaneous,
        "upper_bound_rel": rep.upper_bound_rel,
        "wallclock_s": wallclock,
    }


def run_montecarlo(
    config_path: Optional[str],
    sizes: list[int],
    runs: int,
    base_seed: int,
    selection: str,
    jobs: int,
) -> list[dict]:
    payloads = [
        (config_path, size, size_idx, run_idx, base_seed, selection)
        for size_idx, size in enumerate(sizes)
        for run_idx in range(runs)
    ]
    results: list[dict] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_montecarlo_run, payloads))
    else:
        results = [_montecarlo_run(payload) for payload in payloads]
    rows = []
    for row in results:
        if "error" in row:
            _log("montecarlo_failed", **row)
        else:
            _log("montecarlo_run", **row)
            rows.append(row)
    return rows


def write_montecarlo_csv(rows: list[dict], sizes: list[int], path: str) -> None:
    fieldnames = [
        "size",
        "seed",
        "saving_stage3",
        "saving_stage4",
        "saving_spontaneous",
        "upper_bound_rel",
        "wallclock_s",
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        for size in sizes:
            batch = [r for r in rows if r["size"] == size]
            if not batch:
                continue
            mean_row = {"size": size, "seed": "mean"}
            for key in fieldnames[2:]:
                mean_row[key] = sum(r[key] for r in batch) / len(batch)
            writer.writerow(mean_row)


def cmd_montecarlo(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    rows = run_montecarlo(
        args.config, sizes, args.runs, args.seed, args.selection, args.jobs
    )
    os.makedirs(args.out_dir, exist_ok=True)
    out_path = os.path.join(args.out_dir, "montecarlo.csv")
    write_montecarlo_csv(rows, sizes, out_path)
    _log("montecarlo_done", rows=len(rows), csv=out_path)
    return EXIT_OK if rows else EXIT_INFEASIBLE


def cmd_report(args) -> int:
    with open(args.report, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    histogram = {int(k): float(v) for k, v in doc.pop("histogram", {}).items()}
    rep = evaluation.RunReport(histogram=histogram, **doc)
    os.makedirs(args.out_dir, exist_ok=True)
    evaluation.write_metrics_csv(rep, os.path.join(args.out_dir, "metrics.csv"))
    evaluation.write_histogram_csv(rep.histogram, os.path.join(args.out_dir, "histogram.csv"))
    _log("report_written", out_dir=args.out_dir)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoonplan",
        description="Plan fuel-efficient truck platoons en route.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="sample a scenario to files")
    p_gen.add_argument("--config", default=None)
    p_gen.add_argument("--seed", type=int, default=_env_default("SEED", None, int))
    p_gen.add_argument("--size", type=int, default=None, help="assignment count override")
    p_gen.add_argument("--out-dir", default=_env_default("OUT_DIR", "out"))
    p_gen.set_defaults(func=cmd_generate)

    p_plan = sub.add_parser("plan", help="run the four-stage pipeline")
    p_plan.add_argument("--network", required=True)
    p_plan.add_argument("--assignments", required=True)
    p_plan.add_argument("--config", default=None)
    p_plan.add_argument("--out-dir", default=_env_default("OUT_DIR", "out"))
    p_plan.add_argument(
        "--selection", choices=("greedy", "random"), default=_env_default("SELECTION", None)
    )
    p_plan.add_argument("--seed", type=int, default=_env_default("SEED", None, int))
    p_plan.add_argument("--exact", action="store_true", help="exact leader selection")
    p_plan.add_argument("--exact-limit", type=int, default=None)
    p_plan.add_argument("--graph-csv", action="store_true", help="dump graph.csv")
    p_plan.add_argument(
        "--check", action="store_true", help="audit platoon position coincidence"
    )
    p_plan.set_defaults(func=cmd_plan)

    p_exact = sub.add_parser("exact", help="exact leader selection on a graph dump")
    p_exact.add_argument("--graph-csv", required=True)
    p_exact.add_argument("--out", required=True)
    p_exact.add_argument("--limit", type=int, default=20)
    p_exact.set_defaults(func=cmd_exact)

    p_mc = sub.add_parser("montecarlo", help="repeated seeded pipeline runs")
    p_mc.add_argument("--config", default=None)
    p_mc.add_argument("--runs", type=int, default=10)
    p_mc.add_argument("--sizes", default="50,200,800")
    p_mc.add_argument("--seed", type=int, default=_env_default("SEED", 0, int))
    p_mc.add_argument(
        "--selection", choices=("greedy", "random"), default=_env_default("SELECTION", "greedy")
    )
    p_mc.add_argument("--jobs", type=int, default=_env_default("JOBS", 1, int))
    p_mc.add_argument("--out-dir", default=_env_default("OUT_DIR", "out"))
    p_mc.set_defaults(func=cmd_montecarlo)

    p_rep = sub.add_parser("report", help="expand a report JSON into CSVs")
    p_rep.add_argument("--report", required=True)
    p_rep.add_argument("--out-dir", default=_env_default("OUT_DIR", "out"))
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NetworkFormatError, ScenarioError, SizeLimitError, FileNotFoundError) as exc:
        _log("input_error", error=str(exc))
        return EXIT_INPUT
    except (InfeasibleDeadlineError, ValueError) as exc:
        _log("run_error", error=str(exc))
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
