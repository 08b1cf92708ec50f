"""Joint re-timing of a coordination leader and its followers.

The pairwise plans fix who platoons with whom and where each follower merges
and splits. This module re-optimizes *when*: per-segment traversal times are
the variables of a convex program

    minimize   sum over trucks, segments of f(W_i / T_i, p_i) * W_i
    subject to W_i / v_max <= T_i <= W_i / v_min          (speed window)
               sum of T_i per truck <= deadline slack     (arrival)
               follower reaches its merge point when the leader does
               follower and leader traversal times agree while platooning

With affine consumption each objective term is c2 / T + const with c2 >= 0,
so the problem is convex with linear constraints. The synchronization
equalities are eliminated through a null-space parameterization; the
inequalities are handled by a logarithmic-barrier Newton method started from
a strictly interior point (found by a small LP), followed by an active-set
polish. Degenerate groups whose feasible set has an empty interior are
reduced by converting permanently tight rows into equalities; a fully
pinned group returns its initial point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, nnls

from .fuel_model import FuelModel
from .planning import Assignment, VehiclePlan

EVENT_TOL = 1e-9  # seconds; nearly simultaneous merge/split events collapse


class InconsistentGroupError(ValueError):
    """Follower plans do not fit the leader they were supposedly adapted to."""


class InfeasibleGroupError(ValueError):
    """The group's constraint system admits no feasible point."""


@dataclass
class SolverSettings:
    tol: float = 1e-8
    max_iter: int = 200
    barrier_mu: float = 10.0


@dataclass
class CoordinationGroup:
    """One leader, its followers, and their segment partitions.

    The leader's distances partition its route; each follower's interior
    entries are copies of the leader entries between its merge and split
    segment indices (inclusive).
    """

    leader_id: str
    follower_ids: tuple
    distances: dict
    platoon_flags: dict
    initial_times: dict
    t_start: dict
    t_deadline: dict
    merge_index: dict
    split_index: dict
    routes: dict
    leader_speed: float

    def members(self) -> list:
        return [self.leader_id, *self.follower_ids]


@dataclass
class TimingSolution:
    times: dict
    objective: float
    kkt_residual: float
    newton_steps: int = 0
    converged: bool = True


def _snap(value: float, grid: list[float]) -> float:
    for g in grid:
        if abs(value - g) <= EVENT_TOL:
            return g
    return value


def build_group(
    leader: Assignment,
    leader_plan: VehiclePlan,
    followers: list[tuple[Assignment, VehiclePlan]],
) -> CoordinationGroup:
    """Partition the leader's timeline at every merge/split event.

    Event times of all followers are merged into one sorted grid (nearly
    simultaneous events are deduplicated); the leader's constant default
    speed converts time gaps into segment distances.
    """
    if len(leader_plan.speeds) != 1:
        raise InconsistentGroupError("leader must run a constant-speed default plan")
    v_leader = leader_plan.speeds[0]
    t0, t_arr = leader_plan.times[0], leader_plan.times[-1]

    events: list[float] = [t0, t_arr]
    intervals = {}
    for a, plan in followers:
        if plan.platoon_leader_id != leader.id:
            raise InconsistentGroupError(
                f"follower {a.id} is adapted to {plan.platoon_leader_id!r}, not {leader.id!r}"
            )
        window = plan.platoon_interval()
        if window is None:
            raise InconsistentGroupError(f"follower {a.id} plan has no platoon episode")
        t_merge, t_split = (_snap(t, events) for t in window)
        if t_merge < t0 - EVENT_TOL or t_split > t_arr + EVENT_TOL:
            raise InconsistentGroupError(
                f"follower {a.id} platoons outside the leader's journey"
            )
        k = plan.follower_flags.index(1)
        if abs(plan.speeds[k] - v_leader) > 1e-6 * v_leader:
            raise InconsistentGroupError(
                f"follower {a.id} platoon speed differs from the leader's"
            )
        for t in (t_merge, t_split):
            if all(abs(t - e) > EVENT_TOL for e in events):
                events.append(t)
        intervals[a.id] = (_snap(t_merge, events), _snap(t_split, events))
    events.sort()

    leader_w = tuple((events[i + 1] - events[i]) * v_leader for i in range(len(events) - 1))
    distances = {leader.id: leader_w}
    platoon_flags = {leader.id: tuple(0 for _ in leader_w)}
    initial_times = {leader.id: tuple(events[i + 1] - events[i] for i in range(len(events) - 1))}
    t_start = {leader.id: leader.t_start}
    t_deadline = {leader.id: leader.t_deadline}
    routes = {leader.id: leader_plan.route}
    merge_index = {}
    split_index = {}

    for a, plan in followers:
        t_merge, t_split = intervals[a.id]
        i_m = events.index(t_merge)
        i_sp = events.index(t_split) - 1
        if i_sp < i_m:
            raise InconsistentGroupError(f"follower {a.id} has an empty platoon window")
        w: list[float] = []
        p: list[int] = []
        tt: list[float] = []
        if plan.follower_flags[0] == 0:
            w.append(plan.speeds[0] * (t_merge - a.t_start))
            p.append(0)
            tt.append(t_merge - a.t_start)
        w.extend(leader_w[i_m : i_sp + 1])
        p.extend(1 for _ in range(i_m, i_sp + 1))
        tt.extend(initial_times[leader.id][i_m : i_sp + 1])
        if plan.follower_flags[-1] == 0:
            dur = plan.times[-1] - t_split
            w.append(plan.speeds[-1] * dur)
            p.append(0)
            tt.append(dur)
        if any(x <= 0 for x in w):
            raise InconsistentGroupError(f"follower {a.id} produced a nonpositive segment")
        distances[a.id] = tuple(w)
        platoon_flags[a.id] = tuple(p)
        initial_times[a.id] = tuple(tt)
        t_start[a.id] = a.t_start
        t_deadline[a.id] = a.t_deadline
        routes[a.id] = plan.route
        merge_index[a.id] = i_m
        split_index[a.id] = i_sp

    return CoordinationGroup(
        leader_id=leader.id,
        follower_ids=tuple(a.id for a, _ in followers),
        distances=distances,
        platoon_flags=platoon_flags,
        initial_times=initial_times,
        t_start=t_start,
        t_deadline=t_deadline,
        merge_index=merge_index,
        split_index=split_index,
        routes=routes,
        leader_speed=v_leader,
    )


def group_objective(group: CoordinationGroup, model: FuelModel, times: dict) -> float:
    """Fuel in kg of the group under the given traversal times."""
    total = 0.0
    for member in group.members():
        for w, p, t in zip(group.distances[member], group.platoon_flags[member], times[member]):
            v = w / t
            rate = model.follower_rate(v) if p else model.solo_rate(v)
            total += rate * w
    return total


# ---------------------------------------------------------------------------
# Matrix assembly
# ---------------------------------------------------------------------------


@dataclass
class _Problem:
    x0: np.ndarray
    c2: np.ndarray  # objective terms c2_j / x_j
    c0: float  # constant fuel part
    A: np.ndarray  # equality rows
    b: np.ndarray  # equality right-hand sides
    G: np.ndarray
    h: np.ndarray
    var_slices: dict

    def objective(self, x: np.ndarray) -> float:
        return float(np.sum(self.c2 / x)) + self.c0

    def grad(self, x: np.ndarray) -> np.ndarray:
        return -self.c2 / (x * x)

    def hess_diag(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * self.c2 / (x * x * x)


def _assemble(group: CoordinationGroup, model: FuelModel) -> _Problem:
    members = group.members()
    var_slices = {}
    offset = 0
    for member in members:
        k = len(group.distances[member])
        var_slices[member] = slice(offset, offset + k)
        offset += k
    n = offset

    x0 = np.empty(n)
    c2 = np.empty(n)
    c0 = 0.0
    for member in members:
        sl = var_slices[member]
        w = np.asarray(group.distances[member])
        p = np.asarray(group.platoon_flags[member])
        x0[sl] = group.initial_times[member]
        slope = np.where(p == 1, model.ap, model.a0)
        inter = np.where(p == 1, model.bp, model.b0)
        c2[sl] = slope * w * w
        c0 += float(np.sum(inter * w))

    eq_rows = []
    eq_rhs = []
    lead_sl = var_slices[group.leader_id]
    for fid in group.follower_ids:
        sl = var_slices[fid]
        i_m, i_sp = group.merge_index[fid], group.split_index[fid]
        has_head = group.platoon_flags[fid][0] == 0
        # Merge synchronization: follower start + head time equals the
        # leader's arrival at the merge segment, i.e.
        # T_head - sum(leader prefix) = t_start_leader - t_start_follower.
        row = np.zeros(n)
        if has_head:
            row[sl.start] = 1.0
        row[lead_sl.start : lead_sl.start + i_m] -= 1.0
        rhs = group.t_start[group.leader_id] - group.t_start[fid]
        if np.any(row):
            eq_rows.append(row)
            eq_rhs.append(rhs)
        elif abs(rhs) > 1e-6:
            raise InconsistentGroupError(
                f"follower {fid} merges at the leader's start but departs elsewhere in time"
            )
        # Equal traversal times while platooning.
        first_platoon = sl.start + (1 if has_head else 0)
        for j in range(i_sp - i_m + 1):
            row = np.zeros(n)
            row[first_platoon + j] = 1.0
            row[lead_sl.start + i_m + j] = -1.0
            eq_rows.append(row)
            eq_rhs.append(0.0)
    A = np.array(eq_rows) if eq_rows else np.zeros((0, n))
    b = np.array(eq_rhs) if eq_rhs else np.zeros(0)

    g_rows = []
    h_vals = []
    for j in range(n):
        lo = np.zeros(n)
        lo[j] = -1.0
        g_rows.append(lo)
    for member in members:
        sl = var_slices[member]
        w = np.asarray(group.distances[member])
        h_vals.extend(list(-w / model.v_max))
    for j in range(n):
        hi = np.zeros(n)
        hi[j] = 1.0
        g_rows.append(hi)
    for member in members:
        w = np.asarray(group.distances[member])
        h_vals.extend(list(w / model.v_min))
    for member in members:
        row = np.zeros(n)
        row[var_slices[member]] = 1.0
        g_rows.append(row)
        h_vals.append(group.t_deadline[member] - group.t_start[member])
    G = np.array(g_rows)
    h = np.array(h_vals)
    return _Problem(x0=x0, c2=c2, c0=c0, A=A, b=b, G=G, h=h, var_slices=var_slices)


# ---------------------------------------------------------------------------
# Reduced-space machinery: x = base + Z y with G x <= h
# ---------------------------------------------------------------------------

_ZERO_ROW = 1e-12
_INTERIOR_EPS = 1e-9


@dataclass
class _Reduced:
    base: np.ndarray
    Z: np.ndarray
    Gy: np.ndarray
    hy: np.ndarray
    rows: np.ndarray  # indices into the original G/h

    @property
    def dim(self) -> int:
        return self.Z.shape[1]

    def x(self, y: np.ndarray) -> np.ndarray:
        return self.base + self.Z @ y

    def slack(self, y: np.ndarray) -> np.ndarray:
        return self.hy - self.Gy @ y


def _reduce(prob: _Problem, base: np.ndarray, Z: np.ndarray) -> _Reduced:
    """Project the inequality system onto the affine subspace base + range(Z).

    Rows insensitive to y must hold identically (they are runs of the
    equality structure); a violated constant row means the group is broken.
    """
    Gy_full = prob.G @ Z
    hy_full = prob.h - prob.G @ base
    keep = []
    for k in range(Gy_full.shape[0]):
        if np.linalg.norm(Gy_full[k]) <= _ZERO_ROW:
            if hy_full[k] < -1e-6:
                raise InfeasibleGroupError(
                    f"constraint row {k} violated by {-hy_full[k]:.3e} with no freedom left"
                )
        else:
            keep.append(k)
    rows = np.array(keep, dtype=int)
    return _Reduced(base=base, Z=Z, Gy=Gy_full[rows], hy=hy_full[rows], rows=rows)


def _interior_point(red: _Reduced):
    """A strictly interior y, or (y_best, implicit_row_mask) when none exists.

    Maximizes the minimum row-normalized slack by LP. If the optimum is
    (numerically) zero the feasible region is flat against some rows; each
    candidate row gets its own slack maximized to separate rows that are
    genuinely pinned from rows that merely bind at the max-margin point, and
    the mean of all witness points is interior to every non-pinned row.
    """
    m, d = red.Gy.shape
    scale = 1.0 + np.abs(red.hy)
    if m == 0:
        return np.zeros(d), None
    slack0 = red.slack(np.zeros(d))
    if np.min(slack0 / scale) > _INTERIOR_EPS:
        return np.zeros(d), None

    norms = np.linalg.norm(red.Gy, axis=1)
    a_ub = np.hstack([red.Gy, norms[:, None]])
    c = np.zeros(d + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * d + [(None, 1e6)]
    res = linprog(c, A_ub=a_ub, b_ub=red.hy, bounds=bounds, method="highs")
    if not res.success:
        raise InfeasibleGroupError(f"interior search LP failed: {res.message}")
    y_star = res.x[:d]
    slack = red.slack(y_star)
    if np.min(slack / scale) > _INTERIOR_EPS:
        return y_star, None

    candidates = np.where(slack / scale <= _INTERIOR_EPS)[0]
    witnesses = [y_star]
    implicit = np.zeros(m, dtype=bool)
    for k in candidates:
        res_k = linprog(
            red.Gy[k] / scale[k],
            A_ub=red.Gy,
            b_ub=red.hy,
            bounds=[(None, None)] * d,
            method="highs",
        )
        if not res_k.success:
            raise InfeasibleGroupError(f"per-row interior LP failed: {res_k.message}")
        best_slack = (red.hy[k] - red.Gy[k] @ res_k.x) / scale[k]
        if best_slack <= _INTERIOR_EPS:
            implicit[k] = True
        else:
            witnesses.append(res_k.x)
    y_bar = np.mean(witnesses, axis=0)
    return y_bar, implicit


def _newton_centering(prob, red, y, t, max_steps, rel_tol=1e-9):
    """Damped Newton on t * F + log barrier; returns (y, steps_used).

    Stops when half the squared Newton decrement is small relative to the
    centering objective, which keeps late barrier stages (huge t) from
    chasing decrements below the float64 noise floor. Path following only
    needs approximate centering; the final polish supplies precision.
    """
    steps = 0
    for _ in range(max_steps):
        x = red.x(y)
        s = red.slack(y)
        grad = t * (red.Z.T @ prob.grad(x)) + red.Gy.T @ (1.0 / s)
        d2 = t * prob.hess_diag(x)
        H = (red.Z * d2[:, None]).T @ red.Z + (red.Gy / s[:, None]).T @ (red.Gy / s[:, None])
        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            H = H + 1e-12 * np.eye(H.shape[0]) * max(1.0, np.trace(H))
            step = np.linalg.lstsq(H, -grad, rcond=None)[0]
        decrement2 = float(-grad @ step)
        phi0 = t * prob.objective(x) - float(np.sum(np.log(s)))
        if decrement2 <= 0 or decrement2 / 2.0 <= rel_tol * (1.0 + abs(phi0)):
            break
        # Longest step keeping every slack positive.
        ds = red.Gy @ step
        pos = ds > 0
        alpha = 1.0
        if np.any(pos):
            alpha = min(1.0, 0.99 * float(np.min(s[pos] / ds[pos])))
        g_dot = float(grad @ step)
        while alpha > 1e-14:
            y_new = y + alpha * step
            s_new = red.slack(y_new)
            if np.all(s_new > 0):
                phi_new = t * prob.objective(red.x(y_new)) - float(np.sum(np.log(s_new)))
                if phi_new <= phi0 + 0.25 * alpha * g_dot:
                    break
            alpha *= 0.5
        else:
            break
        y = y + alpha * step
        steps += 1
    return y, steps


def _minimize_on_face(prob, red, y, act: np.ndarray):
    """Newton minimizer of F restricted to {active rows tight}; None on failure."""
    E = red.Gy[act]
    if act.size:
        y_p, *_ = np.linalg.lstsq(E, red.hy[act], rcond=None)
        N = null_space(E)
        if N.size == 0:
            x = red.x(y_p)
            return y_p if np.all(x > 0) else None
        y_cur = y_p + N @ (N.T @ (y - y_p))
    else:
        N = np.eye(red.dim)
        y_cur = y.copy()

    for _ in range(40):
        x = red.x(y_cur)
        if np.any(x <= 0):
            return None
        g = N.T @ (red.Z.T @ prob.grad(x))
        d2 = prob.hess_diag(x)
        ZN = red.Z @ N
        H = (ZN * d2[:, None]).T @ ZN
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        ndec = float(g @ step)
        alpha = 1.0
        f0 = prob.objective(x)
        while alpha > 1e-14:
            y_new = y_cur + alpha * (N @ step)
            x_new = red.x(y_new)
            if np.all(x_new > 0) and prob.objective(x_new) <= f0 + 0.25 * alpha * ndec:
                break
            alpha *= 0.5
        else:
            break
        y_cur = y_new
        if -ndec <= 1e-16 * (1.0 + abs(f0)):
            break
    return y_cur


def _polish(prob, red, y, act_mask, rounds=8):
    """Active-set refinement seeded by a guessed set of binding rows.

    Each round minimizes F on the current face, then repairs the set: the
    most violated inactive row is added, or the active row with the most
    negative multiplier (which blocks descent) is dropped. Returns the best
    feasible face minimum found, or None.
    """
    act_set = set(np.where(act_mask)[0])
    feas_scale = 1e-9 * (1.0 + np.abs(red.hy))
    best = None
    seed = y
    for _ in range(rounds):
        act = np.array(sorted(act_set), dtype=int)
        y_new = _minimize_on_face(prob, red, seed, act)
        if y_new is None:
            break
        seed = y_new
        s = red.slack(y_new)
        violated = np.where(s < -feas_scale)[0]
        violated = [k for k in violated if k not in act_set]
        if violated:
            act_set.add(min(violated, key=lambda k: s[k] / (1.0 + abs(red.hy[k]))))
            continue
        if best is None or prob.objective(red.x(y_new)) <= prob.objective(red.x(best)):
            best = y_new
        if act.size == 0:
            break
        gF = prob.grad(red.x(y_new))
        g_y = red.Z.T @ gF
        mu, *_ = np.linalg.lstsq(red.Gy[act].T, -g_y, rcond=None)
        mu_floor = -1e-9 * (1.0 + float(np.max(np.abs(gF))))
        if np.min(mu) >= mu_floor:
            break
        act_set.discard(int(act[int(np.argmin(mu))]))
    return best


def _crossover(prob, red, y, t) -> np.ndarray:
    """Snap a barrier iterate onto its optimal face via active-set polish.

    The barrier multipliers 1 / (t * slack) sit near the true values for
    binding rows and near 1/t for slack rows, so the two clusters are split
    at their geometric mean; a few coarser thresholds are tried as well and
    the stationarity residual picks the winner. Returns the best point found
    (possibly y itself when every polish is rejected).
    """
    lam = 1.0 / (t * red.slack(y))
    lam_max = float(np.max(lam))
    lam_min = float(np.min(lam))
    thresholds = {math.sqrt(lam_max * max(lam_min, 1e-300))}
    thresholds.update(f * lam_max for f in (1e-1, 1e-3))
    best_y = y
    best_res = _kkt_residual(prob, red, y)
    seen = set()
    obj_ref = prob.objective(red.x(y))
    for thr in sorted(thresholds, reverse=True):
        mask = lam >= thr
        key = mask.tobytes()
        if key in seen or not np.any(mask):
            continue
        seen.add(key)
        y_pol = _polish(prob, red, y, mask)
        if y_pol is None or prob.objective(red.x(y_pol)) > obj_ref:
            continue
        res = _kkt_residual(prob, red, y_pol)
        if res < best_res:
            best_res = res
            best_y = y_pol
    return best_y


def _kkt_residual(prob, red, y, act_tol=1e-3) -> float:
    """Distance of -grad F from the cone of active constraint normals.

    Measured in the reduced space (equalities are quotiented out), relative
    to the gradient scale; multipliers are constrained nonnegative.
    """
    if red.dim == 0:
        return 0.0
    x = red.x(y)
    gF = prob.grad(x)
    g_y = red.Z.T @ gF
    scale = 1.0 + float(np.max(np.abs(gF)))
    s = red.slack(y)
    act = np.where(s <= act_tol * (1.0 + np.abs(red.hy)))[0]
    if act.size == 0:
        return float(np.max(np.abs(g_y))) / scale
    M = red.Gy[act].T
    mu, _ = nnls(M, -g_y)
    return float(np.max(np.abs(g_y + M @ mu))) / scale


def solve(
    group: CoordinationGroup, model: FuelModel, settings: Optional[SolverSettings] = None
) -> TimingSolution:
    """Minimize the group's fuel subject to speed, deadline and sync constraints.

    The pairwise plans provide a feasible start; the returned point is never
    worse than it. Barrier iterations run until the duality-gap estimate
    falls below tol * (1 + |objective|) or the Newton-step budget is spent,
    in which case the best feasible iterate is returned with converged=False.
    """
    if settings is None:
        settings = SolverSettings()
    prob = _assemble(group, model)

    if prob.A.size:
        residual = prob.A @ prob.x0 - prob.b
        if np.max(np.abs(residual)) > 1e-6:
            raise InconsistentGroupError(
                f"initial plans violate synchronization by {np.max(np.abs(residual)):.3e} s"
            )
        Z0 = null_space(prob.A)
    else:
        Z0 = np.eye(prob.x0.size)

    base = prob.x0.copy()
    Z = Z0
    converged = True
    steps_total = 0
    x_found = prob.x0

    # Every degeneracy-elimination round removes at least one dimension.
    for _ in range(prob.x0.size + 2):
        red = _reduce(prob, base, Z)
        if red.dim == 0:
            x_found = base
            break
        y0, implicit = _interior_point(red)
        if implicit is None:
            # Barrier path following from the strictly interior start.
            y = y0
            m_rows = red.Gy.shape[0]
            f_init = prob.objective(red.x(y))
            t = max(1.0, m_rows / (0.1 * (1.0 + abs(f_init))))
            budget = settings.max_iter
            y_best = y
            gap_converged = False
            for _round in range(60):
                y, used = _newton_centering(
                    prob, red, y, t, max_steps=max(1, min(50, budget - steps_total))
                )
                steps_total += used
                gap = m_rows / t
                if gap <= settings.tol * (1.0 + abs(prob.objective(red.x(y)))):
                    gap_converged = True
                    y_best = _crossover(prob, red, y, t)
                    if _kkt_residual(prob, red, y_best) <= max(settings.tol, 1e-10):
                        break
                if steps_total >= budget or t > 1e60:
                    converged = gap_converged
                    break
                t *= settings.barrier_mu
            else:
                converged = gap_converged
            x_found = red.x(y_best)
            break
        # Degenerate feasible set: freeze the permanently tight rows as
        # equalities and retry in the smaller space.
        base = red.x(y0)
        x_found = base
        E = red.Gy[implicit]
        N = null_space(E)
        if N.size == 0:
            Z = np.zeros((prob.x0.size, 0))
        else:
            Z = red.Z @ N
    else:
        raise InfeasibleGroupError("degeneracy elimination did not terminate")

    # The initial point is feasible by construction; never return worse.
    x_best = x_found if prob.objective(x_found) <= prob.objective(prob.x0) else prob.x0

    # Stationarity is reported in the space that quotients out only the
    # explicit equalities; implicitly tight rows appear among the active
    # inequalities there, whose opposing normals span the pinned directions.
    if Z0.shape[1]:
        red0 = _reduce(prob, prob.x0, Z0)
        y_best = Z0.T @ (x_best - prob.x0)
        kkt = _kkt_residual(prob, red0, y_best)
    else:
        kkt = 0.0

    times = {
        member: tuple(float(t) for t in x_best[prob.var_slices[member]])
        for member in group.members()
    }
    return TimingSolution(
        times=times,
        objective=prob.objective(x_best),
        kkt_residual=kkt,
        newton_steps=steps_total,
        converged=converged,
    )


def extract_plans(
    group: CoordinationGroup, sol: TimingSolution, model: FuelModel
) -> dict:
    """Vehicle plans realizing the optimized traversal times.

    Segment speeds are W / T with breakpoints as prefix sums from each
    truck's start time; merge/split locations are untouched because the
    distance partition is fixed.
    """
    guard = 1e-9 * model.v_max
    plans = {}
    for member in group.members():
        w = group.distances[member]
        times_rel = sol.times[member]
        speeds = []
        for wi, ti in zip(w, times_rel):
            v = float(wi / ti)
            if v > model.v_max and v <= model.v_max + guard:
                v = model.v_max
            elif v < model.v_min and v >= model.v_min - guard:
                v = model.v_min
            speeds.append(v)
        breakpoints = [group.t_start[member]]
        for ti in times_rel:
            breakpoints.append(breakpoints[-1] + ti)
        plans[member] = VehiclePlan(
            route=group.routes[member],
            speeds=tuple(speeds),
            times=tuple(breakpoints),
            follower_flags=group.platoon_flags[member],
            platoon_leader_id=None if member == group.leader_id else group.leader_id,
        )
    return plans
