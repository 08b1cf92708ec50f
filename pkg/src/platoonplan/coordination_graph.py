"""Weighted directed graph of positive pairwise platooning fuel savings.

An edge (n, m) with weight w means truck n saves w kilograms by adapting
its plan to m's default plan. Building the graph evaluates adapted plans
over candidate ordered pairs; a sound pruning pass skips pairs that cannot
possibly platoon.
"""

from __future__ import annotations

import csv

from .fuel_model import FuelModel
from .planning import Assignment, VehiclePlan, adapted_plan, default_speed
from .road_network import Route, common_subpaths, route_length

WEIGHT_FLOOR = 1e-12  # savings at or below this are float dust, not edges


class CoordinationGraph:
    """Nodes are assignment ids; weights are strictly positive kg savings."""

    def __init__(self, nodes, weights: dict) -> None:
        self.nodes = list(nodes)
        node_set = set(self.nodes)
        self.weight: dict = {}
        self.out_edges: dict = {n: [] for n in self.nodes}
        self.in_edges: dict = {n: [] for n in self.nodes}
        for (n, m), w in weights.items():
            if n == m:
                raise ValueError(f"self loop on {n!r}")
            if n not in node_set or m not in node_set:
                raise ValueError(f"edge ({n!r}, {m!r}) references unknown node")
            if not (w > 0):
                raise ValueError(f"edge ({n!r}, {m!r}) has nonpositive weight {w}")
            self.weight[(n, m)] = float(w)
            self.out_edges[n].append((m, float(w)))
            self.in_edges[m].append((n, float(w)))
        # Heaviest-first out-adjacency makes best-leader scans early-exit.
        for n in self.nodes:
            self.out_edges[n].sort(key=lambda mw: (-mw[1], str(mw[0])))
            self.in_edges[n].sort(key=lambda mw: str(mw[0]))

    def out_neighbors(self, n) -> list:
        return [m for m, _ in self.out_edges[n]]

    def in_neighbors(self, n) -> list:
        return [m for m, _ in self.in_edges[n]]

    def num_edges(self) -> int:
        return len(self.weight)


def prune_pairs(
    assignments: dict[str, Assignment],
    routes: dict[str, Route],
    model: FuelModel,
) -> list[tuple[str, str]]:
    """Ordered pairs (follower, leader) that could conceivably platoon.

    A pair survives when the routes share at least one fully traversed edge
    and a merge is time-feasible somewhere on a shared segment. The test is
    sound: the admissible-merge region is an arc interval ending at the
    segment end, so feasibility at the segment end (with slightly relaxed
    speed bounds) is implied whenever any merge point exists.
    """
    ids = sorted(assignments)
    trucks_on_edge: dict = {}
    windows = {}
    for n in ids:
        r = routes[n]
        lo = 0 if r.start_offset == 0.0 else 1
        hi = len(r.edges) - 1 if r.dest_offset == r.lengths[-1] else len(r.edges) - 2
        windows[n] = (lo, hi)
        for i in range(lo, hi + 1):
            trucks_on_edge.setdefault(r.edges[i], []).append(n)

    candidates = set()
    for trucks in trucks_on_edge.values():
        for n in trucks:
            for m in trucks:
                if n != m:
                    candidates.add((n, m))

    v_lo = model.v_min * (1.0 - 1e-9) - 1e-9
    v_hi = model.v_max * (1.0 + 1e-9) + 1e-9
    speeds = {
        n: default_speed(
            model, route_length(routes[n]), assignments[n].t_deadline - assignments[n].t_start
        )
        for n in ids
    }

    kept = []
    for n, m in sorted(candidates):
        follower, leader = assignments[n], assignments[m]
        v_leader = speeds[m]
        feasible = False
        for seg in common_subpaths(routes[n], routes[m]):
            d0 = routes[n].arc_at_edge_start(seg.a_start)
            alpha = leader.t_start + routes[m].arc_at_edge_start(seg.b_start) / v_leader
            # Catch-up speed evaluated at the segment end.
            denom = (alpha - follower.t_start) + seg.length_m / v_leader
            numer = d0 + seg.length_m
            if denom > 0 and v_lo <= numer / denom <= v_hi:
                feasible = True
                break
            if abs(denom) <= 1e-12 and numer <= 1e-9:
                feasible = True
                break
        if feasible:
            kept.append((n, m))
    return kept


def build(
    assignments: dict[str, Assignment],
    routes: dict[str, Route],
    default_plans: dict[str, VehiclePlan],
    model: FuelModel,
    prune: bool = True,
) -> tuple[CoordinationGraph, dict[tuple[str, str], VehiclePlan]]:
    """Evaluate adapted plans over ordered pairs and collect positive savings.

    Returns the coordination graph plus a cache of the adapted plan behind
    every edge, keyed by (follower, leader); later stages reuse the cached
    plans instead of re-deriving them.
    """
    ids = sorted(assignments)
    if prune:
        pairs = prune_pairs(assignments, routes, model)
    else:
        pairs = [(n, m) for n in ids for m in ids if n != m]

    # Shared-segment detection is symmetric; compute it once per unordered pair.
    segment_cache: dict = {}
    weights: dict = {}
    plan_cache: dict = {}
    for n, m in pairs:
        key = (n, m) if n < m else (m, n)
        if key not in segment_cache:
            segment_cache[key] = common_subpaths(routes[key[0]], routes[key[1]])
        segs = segment_cache[key]
        if not segs:
            continue
        if n != key[0]:
            segs = [
                type(s)(s.b_start, s.b_end, s.a_start, s.a_end, s.length_m) for s in segs
            ]
        result = adapted_plan(
            assignments[n],
            routes[n],
            m,
            default_plans[m],
            model,
            follower_default=default_plans[n],
            segments=segs,
        )
        if result is None:
            continue
        plan, saving = result
        if saving > WEIGHT_FLOOR:
            weights[(n, m)] = saving
            plan_cache[(n, m)] = plan
    return CoordinationGraph(ids, weights), plan_cache


def save_graph_csv(g: CoordinationGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "saving_kg"])
        for (n, m), w in sorted(g.weight.items()):
            writer.writerow([n, m, repr(w)])


def load_graph_csv(path: str) -> CoordinationGraph:
    weights = {}
    nodes = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["src", "dst", "saving_kg"]:
            raise ValueError(f"{path}: expected header src,dst,saving_kg")
        for row in reader:
            n, m = row["src"], row["dst"]
            nodes.update((n, m))
            weights[(n, m)] = float(row["saving_kg"])
    return CoordinationGraph(sorted(nodes), weights)
