"""Coordination-leader selection: local-search heuristic, exact search, bounds.

The objective of a leader set L is the summed saving of every non-leader
following its best leader:

    F(L) = sum over n not in L of max(W(n, m) for m in out(n) & L, default 0)

Maximizing F is NP-hard (minimum set cover embeds into it, see
`reduce_set_cover`), so the workhorse is an iterative flip heuristic that
adds or removes whichever node currently improves F.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .coordination_graph import CoordinationGraph


class SizeLimitError(ValueError):
    """Exact search refused: instance exceeds the node limit."""


@dataclass(frozen=True)
class LeaderSet:
    leaders: frozenset
    follower_of: dict = field(compare=False)
    objective: float = 0.0


@dataclass(frozen=True)
class SetCoverInstance:
    universe: frozenset
    family: tuple

    def __post_init__(self) -> None:
        union = frozenset().union(*self.family) if self.family else frozenset()
        if union != self.universe:
            raise ValueError("family does not cover the universe")


def objective_value(g: CoordinationGraph, leaders) -> float:
    """Direct evaluation of F(L)."""
    leaders = set(leaders)
    total = 0.0
    for n in g.nodes:
        if n in leaders:
            continue
        for m, w in g.out_edges[n]:  # heaviest first
            if m in leaders:
                total += w
                break
    return total


def make_leader_set(g: CoordinationGraph, leaders) -> LeaderSet:
    """Assemble follower assignments for a leader set; ties pick the smallest id."""
    leaders = frozenset(leaders)
    follower_of = {}
    total = 0.0
    for n in g.nodes:
        if n in leaders:
            continue
        # out_edges is ordered heaviest-first with smallest-id ties, so the
        # first leader hit is the tie-broken argmax.
        for m, w in g.out_edges[n]:
            if m in leaders:
                follower_of[n] = m
                total += w
                break
    return LeaderSet(leaders=leaders, follower_of=follower_of, objective=total)


def _best_weight(g: CoordinationGraph, n, leaders, skip=None) -> float:
    """Max weight from n into leaders (optionally ignoring one leader)."""
    for m, w in g.out_edges[n]:
        if m in leaders and m != skip:
            return w
    return 0.0


def delta_u(g: CoordinationGraph, leaders, n) -> float:
    """Objective change from flipping n's leader membership.

    Expands F(L +- {n}) - F(L) over n's in-neighborhood: non-leader
    in-neighbors may gain or lose n as their best leader, and n itself
    starts or stops following its own best leader.
    """
    leaders = set(leaders)
    if n not in leaders:
        gain = 0.0
        for i, w_in in g.in_edges[n]:
            if i in leaders:
                continue
            cur = _best_weight(g, i, leaders)
            gain += max(cur, w_in) - cur
        return gain - _best_weight(g, n, leaders)
    loss = 0.0
    for i, w_in in g.in_edges[n]:
        if i in leaders:
            continue
        cur = _best_weight(g, i, leaders)
        if w_in >= cur:
            loss += _best_weight(g, i, leaders, skip=n) - cur
    return loss + _best_weight(g, n, leaders, skip=n)


class _ClusterState:
    """Incremental bookkeeping for the flip heuristic.

    best[n] caches max(W(n, m) for m in out(n) & leaders); flip gains are
    cached per node and recomputed only inside the two-hop neighborhood of
    the flipped node, which keeps each iteration local to the average degree.
    """

    def __init__(self, g: CoordinationGraph) -> None:
        self.g = g
        self.leaders: set = set()
        self.best: dict = {n: 0.0 for n in g.nodes}
        self.objective = 0.0
        self.delta: dict = {n: self._compute_delta(n) for n in g.nodes}
        self.positive: set = {n for n, d in self.delta.items() if d > 0}

    def _compute_delta(self, n) -> float:
        g, leaders, best = self.g, self.leaders, self.best
        if n not in leaders:
            gain = 0.0
            for i, w_in in g.in_edges[n]:
                if i in leaders:
                    continue
                cur = best[i]
                if w_in > cur:
                    gain += w_in - cur
            return gain - best[n]
        loss = 0.0
        for i, w_in in g.in_edges[n]:
            if i in leaders:
                continue
            cur = best[i]
            if w_in >= cur:
                loss += _best_weight(g, i, leaders, skip=n) - cur
        return loss + best[n]

    def _two_hop(self, n) -> set:
        g = self.g
        first = {n}
        first.update(g.out_neighbors(n))
        first.update(g.in_neighbors(n))
        second = set(first)
        for i in g.in_neighbors(n):
            second.update(g.out_neighbors(i))
        for i in g.out_neighbors(n):
            second.update(g.in_neighbors(i))
        return second

    def flip(self, n) -> float:
        gain = self.delta[n]
        g = self.g
        if n in self.leaders:
            self.leaders.discard(n)
            for i, w_in in g.in_edges[n]:
                if self.best[i] <= w_in:
                    self.best[i] = _best_weight(g, i, self.leaders)
        else:
            self.leaders.add(n)
            for i, w_in in g.in_edges[n]:
                if w_in > self.best[i]:
                    self.best[i] = w_in
        self.objective += gain
        for m in self._two_hop(n):
            d = self._compute_delta(m)
            self.delta[m] = d
            if d > 0:
                self.positive.add(m)
            else:
                self.positive.discard(m)
        return gain


def cluster(
    g: CoordinationGraph,
    rule: str = "greedy",
    seed: int = 0,
    on_flip: Optional[Callable] = None,
) -> LeaderSet:
    """Iterative flip heuristic for the leader-selection objective.

    Starting from an empty leader set, repeatedly flips a node with a
    positive gain until none remains. `rule` picks the node: "greedy" takes
    the largest gain (ties to the smallest id), "random" samples uniformly
    from all positive-gain nodes with the given seed. The objective strictly
    increases every iteration, so termination is guaranteed.

    `on_flip(node, objective)` is invoked after every flip (used by tests to
    audit the incremental objective).
    """
    if rule not in ("greedy", "random"):
        raise ValueError(f"unknown selection rule {rule!r}")
    rng = random.Random(seed)
    state = _ClusterState(g)
    while state.positive:
        if rule == "greedy":
            best_gain = max(state.delta[x] for x in state.positive)
            n = min((x for x in state.positive if state.delta[x] == best_gain), key=str)
        else:
            n = rng.choice(sorted(state.positive, key=str))
        state.flip(n)
        if on_flip is not None:
            on_flip(n, state.objective)
    return make_leader_set(g, state.leaders)


def exact(g: CoordinationGraph, limit: int = 20) -> LeaderSet:
    """Global maximizer of the objective by exhaustive subset enumeration.

    Ties break toward fewer leaders, then the lexicographically smallest
    leader tuple. Guarded by `limit` since the search is exponential.
    """
    n_nodes = len(g.nodes)
    if n_nodes > limit:
        raise SizeLimitError(f"{n_nodes} nodes exceeds exact-search limit {limit}")
    nodes = sorted(g.nodes, key=str)
    index = {n: i for i, n in enumerate(nodes)}
    # Precompute per node: list of (out-neighbor bit, weight), heaviest first.
    out_bits = []
    for n in nodes:
        out_bits.append([(1 << index[m], w) for m, w in g.out_edges[n]])

    best_mask = 0
    best_obj = 0.0
    best_key = (0, ())
    for mask in range(1 << n_nodes):
        total = 0.0
        for i, edges in enumerate(out_bits):
            if (mask >> i) & 1:
                continue
            for bit, w in edges:
                if mask & bit:
                    total += w
                    break
        if total > best_obj:
            best_obj = total
            best_mask = mask
            best_key = (bin(mask).count("1"), tuple(str(nodes[i]) for i in range(n_nodes) if (mask >> i) & 1))
        elif total == best_obj:
            key = (bin(mask).count("1"), tuple(str(nodes[i]) for i in range(n_nodes) if (mask >> i) & 1))
            if key < best_key:
                best_mask = mask
                best_key = key
    leaders = {nodes[i] for i in range(n_nodes) if (best_mask >> i) & 1}
    return make_leader_set(g, leaders)


def upper_bound(g: CoordinationGraph) -> float:
    """Sum of every node's best outgoing saving; bounds any leader set's objective."""
    total = 0.0
    for n in g.nodes:
        edges = g.out_edges[n]
        if edges:
            total += edges[0][1]
    return total


def reduce_set_cover(inst: SetCoverInstance):
    """Embed a set-cover instance into a coordination graph.

    One node per universe element, one per family subset, plus a sink node.
    Element nodes point at every subset covering them with weight 1; every
    subset node points at the sink with weight 0.5. The optimal objective of
    the graph equals |U| + 0.5 * (|F| - k*) where k* is the minimum cover
    size, which is how hardness transfers.

    Returns (graph, node_maps) with node_maps = {"elements", "subsets", "sink"}.
    """
    element_node = {u: f"u:{u}" for u in sorted(inst.universe, key=str)}
    subset_node = {i: f"s:{i}" for i in range(len(inst.family))}
    sink = "sink"
    nodes = list(element_node.values()) + list(subset_node.values()) + [sink]
    weights = {}
    for i, subset in enumerate(inst.family):
        for u in subset:
            weights[(element_node[u], subset_node[i])] = 1.0
        weights[(subset_node[i], sink)] = 0.5
    graph = CoordinationGraph(nodes, weights)
    return graph, {"elements": element_node, "subsets": subset_node, "sink": sink}


def min_set_cover_size(inst: SetCoverInstance) -> int:
    """Brute-force minimum number of subsets covering the universe."""
    if not inst.universe:
        return 0
    for k in range(1, len(inst.family) + 1):
        for combo in itertools.combinations(range(len(inst.family)), k):
            covered = frozenset().union(*(inst.family[i] for i in combo))
            if covered == inst.universe:
                return k
    raise ValueError("family does not cover the universe")
