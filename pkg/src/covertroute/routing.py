"""Hop graph construction and route optimization.

Covertness maximization is a widest (max-min) path problem on the
detection-SNR gain theta; latency minimization is a shortest path on the
per-hop minimum latency. Both run Dijkstra-style uniform-cost searches
with a deterministic tie-break: ties on the objective prefer fewer hops,
then the lexicographically smallest node sequence. The widest path runs
in two phases (optimal bottleneck first, then the hop/lex-minimal path on
the surviving edges) because max-min prefixes alone do not pin down the
hop-count tie-break.

Per-hop DEP is a monotone transform of theta (reliability pins snr_rx, so
theta = snr_reqd / snr_willie and DEP is non-increasing in snr_willie),
which is why widest-path-on-theta and widest-path-on-DEP give the same
objective; verify_theorem1 checks that equivalence numerically.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .allocation import (Constraints, HopAllocation, InfeasibleLinkError,
                         allocate_covert_max, allocate_latency_min)
from .detectors import dep_lookup, invert_dep
from .topology import Topology, WILLIE, link_gain
from .units import linear_to_db, watt_to_dbm

COVERT_MAX = "covert_max"
LATENCY_MIN = "latency_min"
MODES = (COVERT_MAX, LATENCY_MIN)


class RoutingError(ValueError):
    pass


class DisconnectedError(RoutingError):
    """No feasible Alice -> Bob path in the hop graph."""


@dataclass(frozen=True)
class HopGraph:
    mode: str
    alice: int
    bob: int
    nodes: tuple
    edges: dict  # (tx, rx) -> HopAllocation
    snr_w_max: float | None = None  # latency mode only

    def adjacency(self) -> dict:
        adj: dict[int, list[int]] = {u: [] for u in self.nodes}
        for (u, v) in self.edges:
            adj[u].append(v)
        for u in adj:
            adj[u].sort()
        return adj


@dataclass(frozen=True)
class Route:
    """Ordered Alice -> Bob hop chain with end-to-end metrics.

    e2e_dep is the minimum hop DEP (the weakest link), e2e_latency the sum
    of hop latencies; dep fields stay None until route_metrics fills them.
    """

    mode: str
    hops: tuple  # ((tx, rx, HopAllocation), ...)
    e2e_latency_s: float
    bottleneck_theta: float
    e2e_dep: float | None = None
    dep_extrapolated: bool = False
    hop_deps: tuple = ()

    def __post_init__(self):
        nodes = self.node_sequence()
        if len(set(nodes)) != len(nodes):
            raise RoutingError("route revisits a node")
        for (_, rx, _), (tx, _, _) in zip(self.hops, self.hops[1:]):
            if rx != tx:
                raise RoutingError("route hops do not chain")

    def node_sequence(self) -> tuple:
        if not self.hops:
            return ()
        return (self.hops[0][0],) + tuple(rx for _, rx, _ in self.hops)


def build_graph(topology: Topology, constraints: Constraints, mode: str,
                detector_table=None) -> HopGraph:
    """One directed edge per ordered node pair that passes feasibility.

    Latency mode needs a calibration table: the common Willie SNR cap
    comes from inverting it at dep_reqd with the message length as the
    observation window.
    """
    if mode not in MODES:
        raise RoutingError(f"unknown mode {mode!r}")
    snr_w_max = None
    if mode == LATENCY_MIN:
        if detector_table is None:
            raise RoutingError("latency mode requires a detector calibration table")
        if constraints.dep_reqd is None:
            raise RoutingError("latency mode requires dep_reqd")
        snr_w_max = invert_dep(detector_table, constraints.dep_reqd, constraints.m_bits)

    edges: dict[tuple[int, int], HopAllocation] = {}
    for tx in topology.node_ids():
        g_w = link_gain(topology, tx, WILLIE)
        for rx in topology.node_ids():
            if rx == tx:
                continue
            if (topology.max_link_distance_m is not None
                    and topology.distance(tx, rx) > topology.max_link_distance_m):
                continue
            g_rx = link_gain(topology, tx, rx)
            try:
                if mode == COVERT_MAX:
                    alloc = allocate_covert_max(g_rx, g_w, constraints)
                else:
                    alloc = allocate_latency_min(g_rx, g_w, constraints, snr_w_max)
            except InfeasibleLinkError:
                continue
            edges[(tx, rx)] = alloc

    if not any(u == topology.alice for (u, _) in edges):
        raise DisconnectedError("disconnected: no feasible edge out of Alice")
    if not any(v == topology.bob for (_, v) in edges):
        raise DisconnectedError("disconnected: no feasible edge into Bob")
    return HopGraph(
        mode=mode,
        alice=topology.alice,
        bob=topology.bob,
        nodes=tuple(topology.node_ids()),
        edges=edges,
        snr_w_max=snr_w_max,
    )


def _min_hop_lex_path(edges_ok: set, nodes, alice: int, bob: int) -> tuple | None:
    """Fewest-hop, then lexicographically smallest node sequence, over the
    given edge subset (uniform-cost search; keys compose monotonically)."""
    heap = [(0, (alice,))]
    done = set()
    adj: dict[int, list[int]] = {u: [] for u in nodes}
    for (u, v) in edges_ok:
        adj[u].append(v)
    for u in adj:
        adj[u].sort()
    while heap:
        hops, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        done.add(node)
        if node == bob:
            return path
        for nxt in adj[node]:
            if nxt not in path:
                heapq.heappush(heap, (hops + 1, path + (nxt,)))
    return None


def widest_node_sequence(edge_weights: dict, nodes, alice: int, bob: int) -> tuple[tuple, float]:
    """(node sequence, bottleneck) of the max-min path on arbitrary finite
    positive edge weights, with the deterministic tie-break."""
    # phase 1: the optimal bottleneck value
    best = {u: -np.inf for u in nodes}
    best[alice] = np.inf
    heap = [(-np.inf, alice)]  # (-bottleneck, node)
    done = set()
    adj: dict[int, list[tuple[int, float]]] = {u: [] for u in nodes}
    for (u, v), w in edge_weights.items():
        adj[u].append((v, w))
    while heap:
        neg_b, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == bob:
            break
        for nxt, w in adj[node]:
            cand = min(-neg_b, w)
            if cand > best[nxt]:
                best[nxt] = cand
                heapq.heappush(heap, (-cand, nxt))
    bottleneck = best[bob]
    if not np.isfinite(bottleneck):
        raise DisconnectedError("disconnected: no Alice -> Bob path")
    # phase 2: hop/lex-minimal path over edges meeting the bottleneck
    edges_ok = {e for e, w in edge_weights.items() if w >= bottleneck}
    path = _min_hop_lex_path(edges_ok, nodes, alice, bob)
    assert path is not None
    return path, float(bottleneck)


def shortest_node_sequence(edge_weights: dict, nodes, alice: int, bob: int) -> tuple[tuple, float]:
    """(node sequence, total weight) of the min-sum path with the
    deterministic tie-break; weights must be positive."""
    adj: dict[int, list[tuple[int, float]]] = {u: [] for u in nodes}
    for (u, v), w in edge_weights.items():
        if w <= 0:
            raise RoutingError(f"non-positive edge weight on {(u, v)}")
        adj[u].append((v, w))
    for u in adj:
        adj[u].sort()
    heap = [(0.0, 0, (alice,))]
    done = set()
    while heap:
        total, hops, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        done.add(node)
        if node == bob:
            return path, total
        for nxt, w in adj[node]:
            if nxt not in path:
                heapq.heappush(heap, (total + w, hops + 1, path + (nxt,)))
    raise DisconnectedError("disconnected: no Alice -> Bob path")


def _route_from_sequence(graph: HopGraph, seq: tuple) -> Route:
    hops = tuple((u, v, graph.edges[(u, v)]) for u, v in zip(seq, seq[1:]))
    return Route(
        mode=graph.mode,
        hops=hops,
        e2e_latency_s=sum(a.latency_s for _, _, a in hops),
        bottleneck_theta=min(a.theta for _, _, a in hops),
    )


def widest_path(graph: HopGraph) -> Route:
    """Covertness-maximizing route: maximize the minimum edge theta."""
    if graph.mode != COVERT_MAX:
        raise RoutingError("widest_path expects a covert_max graph")
    weights = {e: a.theta for e, a in graph.edges.items()}
    seq, _ = widest_node_sequence(weights, graph.nodes, graph.alice, graph.bob)
    return _route_from_sequence(graph, seq)


def shortest_path(graph: HopGraph) -> Route:
    """Latency-minimizing route: minimize the summed hop latency."""
    if graph.mode != LATENCY_MIN:
        raise RoutingError("shortest_path expects a latency_min graph")
    weights = {e: a.latency_s for e, a in graph.edges.items()}
    seq, _ = shortest_node_sequence(weights, graph.nodes, graph.alice, graph.bob)
    return _route_from_sequence(graph, seq)


def route_metrics(route: Route, detector_table, m_bits: float) -> Route:
    """Fill per-hop DEP estimates (observation window = the full message)
    and the end-to-end metrics; without a table, DEPs stay None and the
    theta bottleneck still stands."""
    if detector_table is None:
        return route
    deps = []
    extrapolated = False
    new_hops = []
    for tx, rx, alloc in route.hops:
        est = dep_lookup(detector_table, alloc.snr_willie, m_bits)
        deps.append(est.dep)
        extrapolated = extrapolated or est.extrapolated
        new_hops.append((tx, rx, HopAllocation(
            power_w=alloc.power_w, bandwidth_hz=alloc.bandwidth_hz, eta=alloc.eta,
            data_rate_bps=alloc.data_rate_bps, latency_s=alloc.latency_s,
            snr_rx=alloc.snr_rx, snr_willie=alloc.snr_willie, theta=alloc.theta,
            dep_estimate=est.dep, dep_extrapolated=est.extrapolated,
        )))
    return Route(
        mode=route.mode,
        hops=tuple(new_hops),
        e2e_latency_s=route.e2e_latency_s,
        bottleneck_theta=route.bottleneck_theta,
        e2e_dep=min(deps),
        dep_extrapolated=extrapolated,
        hop_deps=tuple(deps),
    )


def e2e_dep_of_hop_deps(hop_deps) -> float:
    """End-to-end covertness of a route: the weakest hop's DEP."""
    deps = list(hop_deps)
    if not deps:
        raise RoutingError("route has no hops")
    return min(deps)


def theorem1_check(topology: Topology, constraints: Constraints,
                   detector_table, m_bits: float | None = None) -> dict:
    """Compare widest-path-on-theta with widest-path-on-DEP on one topology.

    Reports whether the two objectives agree (DEP of the theta-widest
    route's weakest hop vs the DEP-widest bottleneck); disagreement beyond
    interpolation tolerance indicates a monotone-fit violation, not a
    routing bug.
    """
    m = constraints.m_bits if m_bits is None else m_bits
    graph = build_graph(topology, constraints, COVERT_MAX)
    theta_w = {e: a.theta for e, a in graph.edges.items()}
    dep_w = {e: dep_lookup(detector_table, a.snr_willie, m).dep
             for e, a in graph.edges.items()}
    seq_t, _ = widest_node_sequence(theta_w, graph.nodes, graph.alice, graph.bob)
    seq_d, dep_obj = widest_node_sequence(dep_w, graph.nodes, graph.alice, graph.bob)
    dep_of_theta_route = min(dep_w[(u, v)] for u, v in zip(seq_t, seq_t[1:]))
    return {
        "theta_route": list(seq_t),
        "dep_route": list(seq_d),
        "same_route": seq_t == seq_d,
        "theta_route_dep": dep_of_theta_route,
        "dep_route_dep": dep_obj,
        "objective_equal": abs(dep_of_theta_route - dep_obj) <= 1e-12,
    }


def verify_theorem1(topologies, constraints: Constraints, detector_table,
                    m_bits: float | None = None) -> dict:
    """Run theorem1_check over many topologies and aggregate the findings."""
    cases = [theorem1_check(t, constraints, detector_table, m_bits) for t in topologies]
    agree = sum(1 for c in cases if c["objective_equal"])
    return {
        "cases": cases,
        "total": len(cases),
        "objective_equal": agree,
        "findings": [c for c in cases if not c["objective_equal"]],
    }


def route_to_dict(route: Route, graph: HopGraph | None = None) -> dict:
    """The documented route JSON: per-hop records plus a summary block."""
    hops_json = []
    for tx, rx, a in route.hops:
        hops_json.append({
            "tx": int(tx),
            "rx": int(rx),
            "power_dbm": watt_to_dbm(a.power_w),
            "bandwidth_hz": a.bandwidth_hz,
            "eta": a.eta,
            "data_rate_bps": a.data_rate_bps,
            "latency_s": a.latency_s,
            "snr_rx_db": linear_to_db(a.snr_rx),
            "snr_willie_db": linear_to_db(a.snr_willie),
            "theta_db": linear_to_db(a.theta),
            "dep": a.dep_estimate,
            "dep_extrapolated": a.dep_extrapolated,
        })
    thetas = [a.theta for _, _, a in route.hops]
    latencies = [a.latency_s for _, _, a in route.hops]
    if route.mode == COVERT_MAX:
        bottleneck_hop = int(np.argmin(thetas))
    else:
        bottleneck_hop = int(np.argmax(latencies))
    return {
        "mode": route.mode,
        "hops": hops_json,
        "summary": {
            "hop_count": len(route.hops),
            "node_sequence": list(route.node_sequence()),
            "e2e_latency_s": route.e2e_latency_s,
            "e2e_dep": route.e2e_dep,
            "dep_extrapolated": route.dep_extrapolated,
            "bottleneck_theta_db": linear_to_db(route.bottleneck_theta),
            "bottleneck_hop_index": bottleneck_hop,
            "max_eta": max(a.eta for _, _, a in route.hops),
        },
    }
