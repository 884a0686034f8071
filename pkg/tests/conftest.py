"""Shared builders and reference oracles for the test suite.

Every oracle here recomputes its answer from first principles (exhaustive
enumeration, Floyd-Warshall) without touching the algorithms under test, so
agreement between the two is meaningful.
"""

from __future__ import annotations

import itertools
import math
import random

from databelt.topology import (
    ALWAYS,
    AvailabilitySchedule,
    Link,
    Node,
    NodeKind,
    PrunedGraph,
    Topology,
    prune,
)

# satellite appears twice per cycle so schedule-carrying nodes dominate
_KINDS = (NodeKind.SATELLITE, NodeKind.CLOUD, NodeKind.EDGE, NodeKind.SATELLITE)

BANDWIDTH_CHOICES = (1.25e6, 1.25e7, 1.25e8)  # 10, 100, 1000 Mbps


def random_topology(
    seed: int,
    max_nodes: int = 8,
    link_prob: float = 0.45,
    windows: bool = False,
) -> Topology:
    """Seeded random topology; not necessarily connected."""
    rng = random.Random(seed)
    n = rng.randint(2, max_nodes)
    nodes = []
    for i in range(n):
        kind = _KINDS[i % len(_KINDS)]
        schedule = ALWAYS
        if windows and kind is NodeKind.SATELLITE and rng.random() < 0.4:
            start = rng.randint(0, 3)
            schedule = AvailabilitySchedule.windows((start, start + rng.randint(1, 5)))
        nodes.append(Node(f"n{i}", kind, schedule=schedule))
    links = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < link_prob:
                links.append(
                    Link(
                        f"n{i}",
                        f"n{j}",
                        rng.uniform(0.001, 0.050),
                        rng.choice(BANDWIDTH_CHOICES),
                    )
                )
    return Topology(nodes, links)


def simple_paths(graph: PrunedGraph, src: str, dst: str) -> list[tuple[str, ...]]:
    """Every simple src->dst node sequence, found by DFS."""
    if src not in graph or dst not in graph:
        return []
    out: list[tuple[str, ...]] = []
    acc = [src]
    seen = {src}

    def walk(node: str) -> None:
        if node == dst:
            out.append(tuple(acc))
            return
        for nxt, _lat, _bw in graph.neighbors(node):
            if nxt not in seen:
                seen.add(nxt)
                acc.append(nxt)
                walk(nxt)
                acc.pop()
                seen.remove(nxt)

    walk(src)
    return out


def path_latency(graph: PrunedGraph, nodes: tuple[str, ...]) -> float:
    total = 0.0
    for a, b in zip(nodes, nodes[1:]):
        total += graph.edge_data(a, b)[0]
    return total


def best_simple_path(graph: PrunedGraph, src: str, dst: str) -> tuple[str, ...] | None:
    """Minimum-latency simple path, ties broken by smallest node sequence."""
    paths = simple_paths(graph, src, dst)
    if not paths:
        return None
    return min(paths, key=lambda p: (path_latency(graph, p), p))


def oracle_placement(
    graph: PrunedGraph, src: str, dst: str, size: float, budget: float
) -> tuple[str, bool]:
    """Farthest prefix of the best path whose migration fits the budget.

    Walks candidates from the destination end; prefix costs are recomputed
    here from the raw edge data. Returns (node, fallback_used).
    """
    best = best_simple_path(graph, src, dst)
    if best is None:
        return src, True
    if len(best) == 1:
        return src, False
    cum = 0.0
    narrowest = math.inf
    prefix: list[tuple[str, float]] = []
    for a, b in zip(best, best[1:]):
        lat, bw = graph.edge_data(a, b)
        cum += lat
        narrowest = min(narrowest, bw)
        prefix.append((b, 2.0 * cum + size / narrowest))
    for node, t_mig in reversed(prefix):
        if t_mig <= budget:
            return node, False
    return src, True


def floyd_warshall(graph: PrunedGraph):
    """All-pairs (latency, hop) distances; infinity when disconnected."""
    ids = sorted(graph.nodes)
    lat = {a: {b: (0.0 if a == b else math.inf) for b in ids} for a in ids}
    hop = {a: {b: (0.0 if a == b else math.inf) for b in ids} for a in ids}
    for e in graph.edges:
        lat[e.src][e.dst] = lat[e.dst][e.src] = e.latency
        hop[e.src][e.dst] = hop[e.dst][e.src] = 1.0
    for k in ids:
        for a in ids:
            lat_ak = lat[a][k]
            hop_ak = hop[a][k]
            for b in ids:
                if lat_ak + lat[k][b] < lat[a][b]:
                    lat[a][b] = lat_ak + lat[k][b]
                if hop_ak + hop[k][b] < hop[a][b]:
                    hop[a][b] = hop_ak + hop[k][b]
    return lat, hop


def product_optimal(topology, workflow, t: int = 0, kappa: float = 0.0):
    """Reference optimizer: itertools.product over sorted nodes per sorted
    function id, Floyd-Warshall distances, hand-rolled feasibility sums.
    Returns (mapping, value) or None."""
    graph = prune(topology, t)
    lat, hop = floyd_warshall(graph)
    fids = sorted(workflow.functions)
    node_ids = sorted(graph.nodes)
    best: tuple[dict[str, str], float] | None = None
    for combo in itertools.product(node_ids, repeat=len(fids)):
        mapping = dict(zip(fids, combo))
        if not _oracle_feasible(mapping, workflow, topology, lat):
            continue
        value = 0.0
        for e in workflow.edges:
            a, b = mapping[e.src], mapping[e.dst]
            value += lat[a][b]
            if a != b:
                value += kappa * hop[a][b]
        if best is None or value < best[1]:
            best = (mapping, value)
    return best


def tiny_instance(seed: int):
    """Small random placement problem: <= 3 functions over <= 5 nodes.

    Draws capacities, SLOs, and link structure so the mix spans trivially
    feasible, tightly constrained, and outright infeasible instances.
    Returns (topology, workflow, epoch).
    """
    from databelt.workflow import FunctionSpec, WorkflowDag, WorkflowEdge

    rng = random.Random(seed)
    n_nodes = rng.randint(2, 5)
    nodes = []
    for i in range(n_nodes):
        kind = _KINDS[i % len(_KINDS)]
        schedule = ALWAYS
        if kind is NodeKind.SATELLITE and rng.random() < 0.25:
            schedule = AvailabilitySchedule.windows((0, rng.randint(1, 2)))
        nodes.append(
            Node(
                f"n{i}",
                kind,
                capacity=rng.choice((1.0, 2.0, math.inf)),
                power_available=rng.choice((5.0, 10.0, math.inf)),
                temp_orbital=20.0,
                temp_max=rng.choice((40.0, 100.0, math.inf)),
                schedule=schedule,
            )
        )
    links = []
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < 0.55:
                links.append(
                    Link(f"n{i}", f"n{j}", rng.uniform(0.001, 0.050), 1.25e7)
                )
    topology = Topology(nodes, links)

    n_funcs = rng.randint(1, 3)
    fids = [f"f{i}" for i in range(n_funcs)]
    functions = [
        FunctionSpec(
            fid,
            demand=rng.choice((0.0, 1.0, 2.0)),
            power=rng.choice((0.0, 3.0, 6.0)),
            heat=rng.choice((0.0, 10.0, 30.0)),
        )
        for fid in fids
    ]
    edges = [
        WorkflowEdge(a, b, rng.choice((0.020, 0.060, 0.120)))
        for a, b in zip(fids, fids[1:])
    ]
    workflow = WorkflowDag(functions, edges, fids[0], fids[-1])
    epoch = rng.randint(0, 2)
    return topology, workflow, epoch


def _oracle_feasible(mapping, workflow, topology, lat) -> bool:
    per_node: dict[str, list] = {}
    for fid, nid in mapping.items():
        per_node.setdefault(nid, []).append(workflow.functions[fid])
    for nid, specs in per_node.items():
        node = topology.nodes[nid]
        if sum(s.demand for s in specs) > node.capacity:
            return False
        if sum(s.power for s in specs) > node.power_available:
            return False
        if node.temp_orbital + sum(s.heat for s in specs) > node.temp_max:
            return False
    for e in workflow.edges:
        d = lat[mapping[e.src]][mapping[e.dst]]
        if math.isinf(d) or d > e.slo:
            return False
    return True
