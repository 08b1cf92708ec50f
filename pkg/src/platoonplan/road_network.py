"""Directed road graph, positions, shortest-path routing, shared subpaths.

Positions are (edge id, offset in meters along that edge). Routes are edge
sequences with a start offset on the first edge and a destination offset on
the last edge; the distance covered is

    D = sum(length(e_i) for i in range(N - 1)) + dest_offset - start_offset.

All operations are pure functions of immutable inputs.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from typing import Iterable, Optional


class NetworkFormatError(ValueError):
    """Raised when a network file violates the schema or graph invariants."""


@dataclass(frozen=True)
class Position:
    edge: str
    offset: float


@dataclass(frozen=True)
class SharedSegment:
    """A maximal run of edges two routes traverse identically and in order.

    Index ranges are inclusive and refer to edge positions within each route.
    """

    a_start: int
    a_end: int
    b_start: int
    b_end: int
    length_m: float


class RoadNetwork:
    """Directed graph with strictly positive edge lengths.

    At most one edge per ordered node pair; edge ids are unique.
    """

    def __init__(self, nodes: Iterable, edges: Iterable[tuple]) -> None:
        """edges: iterable of (edge_id, from_node, to_node, length_m)."""
        self.nodes = set(nodes)
        self.edges: dict = {}
        self.adjacency: dict = {n: [] for n in self.nodes}
        seen_pairs = set()
        for eid, u, v, length in edges:
            if eid in self.edges:
                raise NetworkFormatError(f"duplicate edge id {eid!r}")
            if u not in self.nodes:
                raise NetworkFormatError(f"edge {eid!r} references unknown node {u!r}")
            if v not in self.nodes:
                raise NetworkFormatError(f"edge {eid!r} references unknown node {v!r}")
            if not (length > 0):
                raise NetworkFormatError(f"edge {eid!r} has nonpositive length {length}")
            if (u, v) in seen_pairs:
                raise NetworkFormatError(f"duplicate edge for node pair ({u!r}, {v!r})")
            seen_pairs.add((u, v))
            self.edges[eid] = (u, v, float(length))
            self.adjacency[u].append((eid, v, float(length)))

    def edge_length(self, eid: str) -> float:
        return self.edges[eid][2]

    def edge_tail(self, eid: str):
        return self.edges[eid][0]

    def edge_head(self, eid: str):
        return self.edges[eid][1]

    def check_position(self, p: Position) -> None:
        if p.edge not in self.edges:
            raise ValueError(f"position references unknown edge {p.edge!r}")
        if not (0.0 <= p.offset <= self.edge_length(p.edge)):
            raise ValueError(
                f"offset {p.offset} outside [0, {self.edge_length(p.edge)}] on edge {p.edge!r}"
            )


@dataclass(frozen=True)
class Route:
    """Connected edge path with boundary offsets; lengths are cached."""

    edges: tuple
    lengths: tuple
    start_offset: float
    dest_offset: float

    def arc_at_edge_start(self, i: int) -> float:
        """Distance from the route start to the start node of edge i."""
        return sum(self.lengths[:i]) - self.start_offset


def make_route(net: RoadNetwork, edges, start_offset: float, dest_offset: float) -> Route:
    """Validate connectivity and offsets, then build a Route."""
    edges = tuple(edges)
    if not edges:
        raise ValueError("route needs at least one edge")
    for e in edges:
        if e not in net.edges:
            raise ValueError(f"route references unknown edge {e!r}")
    for a, b in zip(edges, edges[1:]):
        if net.edge_head(a) != net.edge_tail(b):
            raise ValueError(f"edges {a!r} -> {b!r} are not connected")
    lengths = tuple(net.edge_length(e) for e in edges)
    if not (0.0 <= start_offset <= lengths[0]):
        raise ValueError("start_offset outside first edge")
    if not (0.0 <= dest_offset <= lengths[-1]):
        raise ValueError("dest_offset outside last edge")
    r = Route(edges, lengths, float(start_offset), float(dest_offset))
    if route_length(r) <= 0:
        raise ValueError("route covers no distance")
    return r


def route_length(r: Route) -> float:
    """Distance covered by the route (arrival-condition bookkeeping)."""
    return sum(r.lengths[:-1]) + r.dest_offset - r.start_offset


def _dijkstra(net: RoadNetwork, source) -> tuple[dict, dict]:
    """Node distances and predecessor edges from a source node."""
    dist = {source: 0.0}
    pred: dict = {}
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, float("inf")):
            continue
        for eid, v, length in net.adjacency[u]:
            nd = d + length
            if nd < dist.get(v, float("inf")):
                dist[v] = nd
                pred[v] = (u, eid)
                heapq.heappush(heap, (nd, v))
    return dist, pred


def _node_path_edges(pred: dict, source, target) -> list:
    edges = []
    node = target
    while node != source:
        u, eid = pred[node]
        edges.append(eid)
        node = u
    edges.reverse()
    return edges


def shortest_node_route(net: RoadNetwork, u, v) -> Optional[Route]:
    """Minimum-length route between two distinct nodes, or None if unreachable."""
    if u == v:
        raise ValueError("start and destination nodes coincide")
    dist, pred = _dijkstra(net, u)
    if v not in dist:
        return None
    edges = _node_path_edges(pred, u, v)
    return make_route(net, edges, 0.0, net.edge_length(edges[-1]))


def shortest_route(net: RoadNetwork, frm: Position, to: Position) -> Optional[Route]:
    """Minimum-length route from one position to another, or None.

    The vehicle is already on frm.edge and can only move forward along it,
    so every returned route starts with frm.edge and ends with to.edge.
    """
    net.check_position(frm)
    net.check_position(to)

    best: Optional[Route] = None
    if frm.edge == to.edge and frm.offset <= to.offset:
        if to.offset > frm.offset:
            best = Route((frm.edge,), (net.edge_length(frm.edge),), frm.offset, to.offset)
        else:
            raise ValueError("start and destination positions coincide")

    exit_node = net.edge_head(frm.edge)
    entry_node = net.edge_tail(to.edge)
    dist, pred = _dijkstra(net, exit_node)
    if entry_node in dist:
        middle = _node_path_edges(pred, exit_node, entry_node)
        edges = (frm.edge, *middle, to.edge)
        lengths = tuple(net.edge_length(e) for e in edges)
        candidate = Route(edges, lengths, frm.offset, to.offset)
        if route_length(candidate) > 0 and (
            best is None or route_length(candidate) < route_length(best)
        ):
            best = candidate
    return best


def _shareable_window(r: Route) -> tuple[int, int]:
    """Inclusive index range of fully traversed edges (may be empty: lo > hi)."""
    lo = 0 if r.start_offset == 0.0 else 1
    hi = len(r.edges) - 1 if r.dest_offset == r.lengths[-1] else len(r.edges) - 2
    return lo, hi


def common_subpaths(a: Route, b: Route) -> list[SharedSegment]:
    """All maximal runs of edges appearing contiguously and in order in both routes.

    Partially traversed first/last edges are excluded from sharing; two
    vehicles can only pair up on edges both drive end to end.
    """
    a_lo, a_hi = _shareable_window(a)
    b_lo, b_hi = _shareable_window(b)
    if a_lo > a_hi or b_lo > b_hi:
        return []
    positions_in_b: dict = {}
    for j in range(b_lo, b_hi + 1):
        positions_in_b.setdefault(b.edges[j], []).append(j)

    segments = []
    i = a_lo
    while i <= a_hi:
        starts = positions_in_b.get(a.edges[i])
        if not starts:
            i += 1
            continue
        for j in starts:
            # Only start a run at a maximal left end.
            if i > a_lo and j > b_lo and a.edges[i - 1] == b.edges[j - 1]:
                continue
            k = 0
            while i + k <= a_hi and j + k <= b_hi and a.edges[i + k] == b.edges[j + k]:
                k += 1
            segments.append(
                SharedSegment(
                    a_start=i,
                    a_end=i + k - 1,
                    b_start=j,
                    b_end=j + k - 1,
                    length_m=sum(a.lengths[i : i + k]),
                )
            )
        i += 1
    segments.sort(key=lambda s: s.a_start)
    return segments


def positions_coincide(net: RoadNetwork, p: Position, q: Position, tol: float = 1e-6) -> bool:
    """Whether two positions denote the same road point within tol meters.

    An offset at an edge end and offset 0 of a following edge are the same
    physical point (the shared node), so boundary representations are
    normalized before comparing.
    """

    def canonical(pos: Position):
        length = net.edge_length(pos.edge)
        if pos.offset <= tol:
            return ("node", net.edge_tail(pos.edge))
        if pos.offset >= length - tol:
            return ("node", net.edge_head(pos.edge))
        return ("edge", pos.edge)

    ca, cb = canonical(p), canonical(q)
    if ca[0] == "node" or cb[0] == "node":
        return ca == cb
    return p.edge == q.edge and abs(p.offset - q.offset) <= tol


# ---------------------------------------------------------------------------
# Network file I/O: {"nodes": [{"id": ...}], "edges": [{"id", "from", "to", "length_m"}]}
# ---------------------------------------------------------------------------


def _line_of(text: str, needle: str) -> Optional[int]:
    for ln, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return ln
    return None


def load_network(path: str) -> RoadNetwork:
    """Parse and validate a network JSON file.

    Errors carry the file path and, where derivable, the offending line.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc

    def fail(msg: str, needle: Optional[str] = None) -> NetworkFormatError:
        ln = _line_of(text, needle) if needle else None
        loc = f"{path}:{ln}" if ln else path
        return NetworkFormatError(f"{loc}: {msg}")

    if not isinstance(doc, dict) or "nodes" not in doc or "edges" not in doc:
        raise fail("expected an object with 'nodes' and 'edges' arrays")
    nodes = []
    for entry in doc["nodes"]:
        if not isinstance(entry, dict) or "id" not in entry:
            raise fail(f"node entry {entry!r} lacks an 'id'")
        nodes.append(entry["id"])
    edge_tuples = []
    for entry in doc["edges"]:
        if not isinstance(entry, dict):
            raise fail(f"edge entry {entry!r} is not an object")
        missing = [k for k in ("id", "from", "to", "length_m") if k not in entry]
        if missing:
            raise fail(
                f"edge entry {entry.get('id', entry)!r} missing {missing}",
                str(entry.get("id", "")),
            )
        length = entry["length_m"]
        if not isinstance(length, (int, float)) or not length > 0:
            raise fail(
                f"edge {entry['id']!r} has invalid length_m {length!r}",
                str(entry["id"]),
            )
        edge_tuples.append((entry["id"], entry["from"], entry["to"], float(length)))
    try:
        return RoadNetwork(nodes, edge_tuples)
    except NetworkFormatError as exc:
        # Re-raise with a line hint for the offending id if we can find one.
        first_token = str(exc).split()[0]
        raise fail(str(exc), first_token) from exc


def save_network(net: RoadNetwork, path: str) -> None:
    doc = {
        "nodes": [{"id": n} for n in sorted(net.nodes, key=str)],
        "edges": [
            {"id": eid, "from": u, "to": v, "length_m": length}
            for eid, (u, v, length) in sorted(net.edges.items(), key=lambda kv: str(kv[0]))
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
