"""Baselines and run metrics: spontaneous platooning, savings, platoon sizes.

The spontaneous baseline estimates how much fuel would be saved if trucks
kept their default trajectories and platooned only with others that happen
to reach an edge within a minute of each other. Run reports aggregate the
fuel totals of each pipeline stage against that baseline and the
leader-selection upper bound.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

from .fuel_model import FuelModel, plan_fuel

CHAIN_GAP_S = 60.0  # consecutive arrivals within this gap platoon spontaneously


@dataclass(frozen=True)
class EdgeArrivalEvent:
    edge: str
    truck: str
    t_arrival: float
    driven_m: float


def edge_arrival_events(default_plans: dict) -> dict:
    """Per edge, every default-plan visit with its arrival time.

    A constant-speed plan reaches edge i of its route at the start time plus
    the prefix distance over the plan speed; partially driven first/last
    edges count with the meters actually driven.
    """
    by_edge: dict = {}
    for truck, plan in default_plans.items():
        v = plan.speeds[0]
        r = plan.route
        for i, eid in enumerate(r.edges):
            arc = r.arc_at_edge_start(i)
            driven = r.lengths[i]
            if i == 0:
                driven -= r.start_offset
            if i == len(r.edges) - 1:
                driven -= r.lengths[i] - r.dest_offset
            if driven <= 0:
                continue
            t = plan.times[0] + max(arc, 0.0) / v
            by_edge.setdefault(eid, []).append(EdgeArrivalEvent(eid, truck, t, driven))
    return by_edge


def spontaneous_baseline(default_plans: dict, model: FuelModel) -> float:
    """Fuel saved (kg) by per-edge platoons of trucks arriving within 60 s chains.

    Arrival times per edge are sorted; maximal chains with consecutive gaps
    of at most one minute form platoons driving at their default speeds. The
    earliest truck of each chain leads (no saving), the rest pay follower
    rates over their driven meters. Trajectories are not altered.
    """
    saving = 0.0
    for _, visits in edge_arrival_events(default_plans).items():
        visits.sort(key=lambda e: (e.t_arrival, e.truck))
        chain_start = 0
        for i in range(1, len(visits) + 1):
            if i == len(visits) or visits[i].t_arrival - visits[i - 1].t_arrival > CHAIN_GAP_S:
                for event in visits[chain_start + 1 : i]:
                    v = default_plans[event.truck].speeds[0]
                    saving += (model.solo_rate(v) - model.follower_rate(v)) * event.driven_m
                chain_start = i
    return saving


def platoon_size_histogram(plans: dict) -> dict:
    """Meters traveled per platoon size, summed over every platoon member.

    Computed from the plans actually driven: follower plans mark their
    platoon window and leader; a sweep over each leader's follower intervals
    counts concurrent members. Solo driving (including a leader outside its
    followers' windows) lands in bucket 1; every member of a size-k interval
    contributes its own traversed meters to bucket k.
    """
    followers_of: dict = {}
    for truck, plan in plans.items():
        if plan.platoon_leader_id is not None:
            window = plan.platoon_interval()
            if window is not None:
                followers_of.setdefault(plan.platoon_leader_id, []).append((truck, window))

    histogram: dict = {}

    def add(size: int, meters: float) -> None:
        if meters > 0:
            histogram[size] = histogram.get(size, 0.0) + float(meters)

    for truck, plan in plans.items():
        intervals = followers_of.get(truck, [])
        if plan.platoon_leader_id is None and not intervals:
            add(1, sum(v * (plan.times[i + 1] - plan.times[i]) for i, v in enumerate(plan.speeds)))
            continue
        # Sweep this truck's own timeline against the follower count of its
        # leader role; follower pieces take the size of the leader's
        # concurrent count during the same window.
        cuts = set(plan.times)
        for _, (t_m, t_sp) in intervals:
            cuts.update((t_m, t_sp))
        own_window = plan.platoon_interval()
        leader_intervals = followers_of.get(
            plan.platoon_leader_id, []
        ) if plan.platoon_leader_id is not None else []
        for _, w in leader_intervals:
            cuts.update(w)
        grid = sorted(t for t in cuts if plan.times[0] <= t <= plan.times[-1])
        for t0, t1 in zip(grid, grid[1:]):
            if t1 - t0 <= 1e-9:
                continue
            mid = 0.5 * (t0 + t1)
            piece = 0
            while piece + 1 < len(plan.speeds) and plan.times[piece + 1] <= mid:
                piece += 1
            meters = plan.speeds[piece] * (t1 - t0)
            if own_window is not None and own_window[0] <= mid < own_window[1]:
                # Riding as follower: size = leader + followers concurrent with us.
                size = 1 + sum(
                    1 for _, (a, b) in leader_intervals if a <= mid < b
                )
            else:
                size = 1 + sum(1 for _, (a, b) in intervals if a <= mid < b)
            add(size, meters)
    return histogram


@dataclass
class RunReport:
    n_assignments: int
    default_fuel_kg: float
    stage3_fuel_kg: float
    stage4_fuel_kg: float
    spontaneous_fuel_kg: float
    upper_bound_kg: float
    saving_stage3: float
    saving_stage4: float
    saving_spontaneous: float
    upper_bound_rel: float
    n_leaders: int
    n_followers: int
    histogram: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = dict(self.__dict__)
        doc["histogram"] = {str(k): v for k, v in sorted(self.histogram.items())}
        return json.dumps(doc, indent=2, sort_keys=True)


def relative_saving(fuel: float, default_fuel: float) -> float:
    if default_fuel <= 0:
        return 0.0
    return 1.0 - fuel / default_fuel


def make_report(
    assignments: dict,
    default_plans: dict,
    stage3_plans: dict,
    stage4_plans: dict,
    model: FuelModel,
    upper_bound_kg: float,
    n_leaders: int,
) -> RunReport:
    """Assemble the per-run metrics from the stage outputs."""
    default_fuel = sum(plan_fuel(model, p) for p in default_plans.values())
    stage3_fuel = sum(plan_fuel(model, p) for p in stage3_plans.values())
    stage4_fuel = sum(plan_fuel(model, p) for p in stage4_plans.values())
    spont_saving = spontaneous_baseline(default_plans, model)
    n_followers = sum(1 for p in stage4_plans.values() if p.platoon_leader_id is not None)
    return RunReport(
        n_assignments=len(assignments),
        default_fuel_kg=default_fuel,
        stage3_fuel_kg=stage3_fuel,
        stage4_fuel_kg=stage4_fuel,
        spontaneous_fuel_kg=default_fuel - spont_saving,
        upper_bound_kg=upper_bound_kg,
        saving_stage3=relative_saving(stage3_fuel, default_fuel),
        saving_stage4=relative_saving(stage4_fuel, default_fuel),
        saving_spontaneous=relative_saving(default_fuel - spont_saving, default_fuel),
        upper_bound_rel=(upper_bound_kg / default_fuel) if default_fuel > 0 else 0.0,
        n_leaders=n_leaders,
        n_followers=n_followers,
        histogram=platoon_size_histogram(stage4_plans),
    )


def write_metrics_csv(report: RunReport, path: str) -> None:
    rows = [
        ("n_assignments", report.n_assignments),
        ("default_fuel_kg", report.default_fuel_kg),
        ("stage3_fuel_kg", report.stage3_fuel_kg),
        ("stage4_fuel_kg", report.stage4_fuel_kg),
        ("spontaneous_fuel_kg", report.spontaneous_fuel_kg),
        ("upper_bound_kg", report.upper_bound_kg),
        ("saving_stage3", report.saving_stage3),
        ("saving_stage4", report.saving_stage4),
        ("saving_spontaneous", report.saving_spontaneous),
        ("upper_bound_rel", report.upper_bound_rel),
        ("n_leaders", report.n_leaders),
        ("n_followers", report.n_followers),
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerows(rows)


def write_histogram_csv(histogram: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "meters"])
        for size in sorted(histogram):
            writer.writerow([size, repr(histogram[size])])
