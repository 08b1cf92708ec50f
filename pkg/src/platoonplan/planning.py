"""Default plans, pairwise adapted plans, trajectory sampling, validation.

A vehicle plan is a route plus a piecewise-constant speed schedule. The
default plan drives the whole route at the cheapest feasible constant speed.
An adapted plan reshapes a follower's schedule into (catch-up, platoon
behind a leader, finish) so that the two trajectories coincide on a shared
stretch of road.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Optional

from .fuel_model import FuelModel, plan_fuel
from .road_network import Position, Route, SharedSegment, common_subpaths, route_length

# Arc positions are resolved to this tolerance; speeds get a matching
# relative guard so closed-form boundary solutions never fail validation.
ARC_TOL = 1e-9
REL_TOL = 1e-9
DIST_TOL = 1e-6  # meters, distance-conservation check


class InfeasibleDeadlineError(ValueError):
    """No admissible constant speed reaches the destination by the deadline."""


@dataclass(frozen=True)
class Assignment:
    id: str
    start: Position
    dest: Position
    t_start: float
    t_deadline: float

    def __post_init__(self) -> None:
        if not self.t_deadline > self.t_start:
            raise ValueError(f"assignment {self.id}: deadline must exceed start time")


@dataclass(frozen=True)
class VehiclePlan:
    route: Route
    speeds: tuple
    times: tuple
    follower_flags: tuple
    platoon_leader_id: Optional[str] = None

    @property
    def t_start(self) -> float:
        return self.times[0]

    @property
    def t_arrival(self) -> float:
        return self.times[-1]

    def platoon_interval(self) -> Optional[tuple[float, float]]:
        """[merge, split) time window of the single platoon episode, if any."""
        for i, flag in enumerate(self.follower_flags):
            if flag:
                j = i
                while j + 1 < len(self.follower_flags) and self.follower_flags[j + 1]:
                    j += 1
                return (self.times[i], self.times[j + 1])
        return None


@dataclass(frozen=True)
class TrajectorySample:
    position: Position
    speed: float
    follower: bool


def default_speed(model: FuelModel, distance: float, window: float) -> float:
    """Cheapest admissible constant speed for a trip of given length and window.

    The solo consumption rate is affine nondecreasing in speed, so the
    minimizer over [v_cm, v_max] is the slowest admissible speed
    v_cm = max(v_min, D / window); ties also resolve to the slowest.
    """
    v_cm = max(model.v_min, distance / window)
    if v_cm > model.v_max * (1.0 + REL_TOL):
        raise InfeasibleDeadlineError(
            f"required speed {v_cm:.3f} m/s exceeds v_max {model.v_max:.3f} m/s"
        )
    return min(v_cm, model.v_max)


def default_plan(a: Assignment, r: Route, model: FuelModel) -> VehiclePlan:
    """Constant-speed plan at the most fuel-efficient feasible speed."""
    d = route_length(r)
    v = default_speed(model, d, a.t_deadline - a.t_start)
    return VehiclePlan(
        route=r,
        speeds=(v,),
        times=(a.t_start, a.t_start + d / v),
        follower_flags=(0,),
    )


def _clamp_speed(v: float, model: FuelModel) -> Optional[float]:
    """Snap v into [v_min, v_max]; None if it misses by more than the guard."""
    guard = REL_TOL * model.v_max
    if v < model.v_min - guard or v > model.v_max + guard:
        return None
    return min(max(v, model.v_min), model.v_max)


def _segment_candidate(
    d0: float,
    d_tail: float,
    seg_len: float,
    alpha: float,
    v_leader: float,
    t_start_f: float,
    t_deadline_f: float,
    v_cd_f: float,
    model: FuelModel,
):
    """Earliest-merge / latest-split platooning window on one shared segment.

    The leader passes arc position s of the segment at the affine time
    t_L(s) = alpha + s / v_leader. Both pre-merge speed bounds reduce to
    lower bounds on the merge arc, and the post-split deadline bound to an
    upper bound on the split arc, so the extreme feasible arcs are closed
    form. Returns (s_merge, s_split, v1, v3, t_merge, t_split, t_arrival)
    or None when no positive-length platoon episode fits.
    """
    v_min, v_max = model.v_min, model.v_max
    dt0 = alpha - t_start_f  # leader's head start at the segment start

    # v1(s) = (d0 + s) / (dt0 + s/vL) <= v_max
    slope_max = v_max / v_leader - 1.0
    if slope_max > 0:
        s_merge = (d0 - v_max * dt0) / slope_max
    elif d0 <= v_max * dt0:
        s_merge = 0.0
    else:
        return None
    # v1(s) >= v_min
    slope_min = 1.0 - v_min / v_leader
    if slope_min > 0:
        s_merge = max(s_merge, (v_min * dt0 - d0) / slope_min)
    elif d0 < v_min * dt0:
        return None
    s_merge = max(s_merge, 0.0)
    if s_merge > seg_len + ARC_TOL:
        return None
    s_merge = min(s_merge, seg_len)

    # Remaining distance d1(s) = (seg_len - s) + d_tail must fit the deadline
    # at <= v_max: upper bound on the split arc.
    dt_deadline = t_deadline_f - alpha
    slack = v_max * dt_deadline - (seg_len + d_tail)
    if slope_max > 0:
        s_split = min(seg_len, slack / slope_max)
    elif slack >= 0:
        s_split = seg_len
    else:
        return None
    if s_split < s_merge + ARC_TOL:
        return None

    t_merge = alpha + s_merge / v_leader
    t_split = alpha + s_split / v_leader

    pre_dist = d0 + s_merge
    if pre_dist > ARC_TOL:
        v1 = _clamp_speed(pre_dist / (t_merge - t_start_f), model)
        if v1 is None:
            return None
    else:
        # Degenerate catch-up piece: follower starts exactly where and when
        # the leader passes.
        if abs(t_merge - t_start_f) > ARC_TOL:
            return None
        v1 = None

    tail_dist = (seg_len - s_split) + d_tail
    if tail_dist > ARC_TOL:
        v3 = _clamp_speed(max(v_cd_f, tail_dist / (t_deadline_f - t_split)), model)
        if v3 is None:
            return None
        t_arrival = t_split + tail_dist / v3
    else:
        v3 = None
        t_arrival = t_split
    return s_merge, s_split, v1, v3, t_merge, t_split, t_arrival


def adapted_plan(
    follower: Assignment,
    follower_route: Route,
    leader_id: str,
    leader_plan: VehiclePlan,
    model: FuelModel,
    follower_default: Optional[VehiclePlan] = None,
    segments: Optional[list[SharedSegment]] = None,
) -> Optional[tuple[VehiclePlan, float]]:
    """Best fuel-saving plan of `follower` platooning behind a constant-speed leader.

    Platooning is stretched as far as each shared segment allows: merge at
    the earliest feasible arc, split at the latest arc from which the
    deadline is still reachable, then finish at least at default speed.
    Returns (plan, saving_kg) for the best shared segment, or None when no
    segment admits a positive saving (routes disjoint, or speed bounds and
    the deadline rule platooning out).
    """
    if len(leader_plan.speeds) != 1:
        raise ValueError("leader plan must be a constant-speed default plan")
    if follower_default is None:
        follower_default = default_plan(follower, follower_route, model)
    v_cd_f = follower_default.speeds[0]
    fuel_default = plan_fuel(model, follower_default)
    if segments is None:
        segments = common_subpaths(follower_route, leader_plan.route)
    if not segments:
        return None

    v_leader = leader_plan.speeds[0]
    t_leader_start = leader_plan.times[0]
    d_follower = route_length(follower_route)

    best = None
    best_saving = 0.0
    for seg in segments:
        d0 = follower_route.arc_at_edge_start(seg.a_start)
        d_tail = d_follower - (d0 + seg.length_m)
        alpha = t_leader_start + leader_plan.route.arc_at_edge_start(seg.b_start) / v_leader
        cand = _segment_candidate(
            d0,
            d_tail,
            seg.length_m,
            alpha,
            v_leader,
            follower.t_start,
            follower.t_deadline,
            v_cd_f,
            model,
        )
        if cand is None:
            continue
        s_merge, s_split, v1, v3, t_merge, t_split, t_arrival = cand
        fuel = model.follower_rate(v_leader) * (s_split - s_merge)
        if v1 is not None:
            fuel += model.solo_rate(v1) * (d0 + s_merge)
        if v3 is not None:
            fuel += model.solo_rate(v3) * ((seg.length_m - s_split) + d_tail)
        saving = fuel_default - fuel
        if saving > best_saving:
            best_saving = saving
            best = (v1, v3, t_merge, t_split, t_arrival)

    if best is None:
        return None
    v1, v3, t_merge, t_split, t_arrival = best
    speeds, times, flags = [], [follower.t_start], []
    if v1 is not None:
        speeds.append(v1)
        flags.append(0)
        times.append(t_merge)
    speeds.append(v_leader)
    flags.append(1)
    times.append(t_split)
    if v3 is not None:
        speeds.append(v3)
        flags.append(0)
        times.append(t_arrival)
    plan = VehiclePlan(
        route=follower_route,
        speeds=tuple(speeds),
        times=tuple(times),
        follower_flags=tuple(flags),
        platoon_leader_id=leader_id,
    )
    # Report the saving as the exact fuel difference of the two plans, which
    # can drift from the ranking estimate by float dust after speed clamping.
    saving = fuel_default - plan_fuel(model, plan)
    if saving <= 0:
        return None
    return plan, saving


def sample(plan: VehiclePlan, t: float) -> TrajectorySample:
    """Position, speed and follower flag at time t in [t_start, t_arrival)."""
    if not (plan.times[0] <= t < plan.times[-1]):
        raise ValueError(f"time {t} outside plan domain [{plan.times[0]}, {plan.times[-1]})")
    k = bisect.bisect_right(plan.times, t) - 1
    k = min(k, len(plan.speeds) - 1)
    traveled = plan.speeds[k] * (t - plan.times[k])
    for i in range(k):
        traveled += plan.speeds[i] * (plan.times[i + 1] - plan.times[i])

    route = plan.route
    # Largest edge index whose start arc lies strictly before the traveled
    # distance; falls back to the first edge at departure.
    arc = -route.start_offset
    edge_idx = 0
    for i, length in enumerate(route.lengths):
        if arc < traveled:
            edge_idx = i
        else:
            break
        arc += length
    offset = traveled - route.arc_at_edge_start(edge_idx)
    return TrajectorySample(
        position=Position(route.edges[edge_idx], offset),
        speed=plan.speeds[k],
        follower=bool(plan.follower_flags[k]),
    )


def validate(plan: VehiclePlan, a: Assignment, model: FuelModel) -> list[str]:
    """All invariant violations of a plan against its assignment; empty if valid."""
    problems = []
    k = len(plan.speeds)
    if len(plan.times) != k + 1:
        problems.append(f"times has {len(plan.times)} entries, expected {k + 1}")
        return problems
    if len(plan.follower_flags) != k:
        problems.append("follower_flags length mismatch")
        return problems
    for t0, t1 in zip(plan.times, plan.times[1:]):
        if not t1 > t0:
            problems.append(f"times not strictly increasing at {t0} -> {t1}")
    guard = REL_TOL * model.v_max
    for i, v in enumerate(plan.speeds):
        if v < model.v_min - guard or v > model.v_max + guard:
            problems.append(f"speed {v:.9f} of piece {i} outside bounds")
    dist = sum(v * (plan.times[i + 1] - plan.times[i]) for i, v in enumerate(plan.speeds))
    d = route_length(plan.route)
    if abs(dist - d) > DIST_TOL:
        problems.append(f"distance conservation off by {dist - d:.3e} m")
    if abs(plan.times[0] - a.t_start) > 1e-9:
        problems.append(f"plan starts at {plan.times[0]}, assignment at {a.t_start}")
    if plan.times[-1] > a.t_deadline + 1e-6:
        problems.append(f"arrival {plan.times[-1]} misses deadline {a.t_deadline}")
    flags = plan.follower_flags
    ones = [i for i, f in enumerate(flags) if f]
    if ones and ones != list(range(ones[0], ones[-1] + 1)):
        problems.append("platoon episode is not contiguous")
    if any(f not in (0, 1) for f in flags):
        problems.append("follower flags must be 0 or 1")
    return problems
