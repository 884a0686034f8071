"""Dynamic network topology model with epoch-based availability.

Nodes are ground (cloud, edge) or orbital (satellite) machines joined by
bidirectional links annotated with latency and bandwidth. Orbital nodes come
and go according to availability schedules expressed over discrete epochs;
pruning a topology at an epoch yields an immutable snapshot graph that the
routing and placement layers query.

Canonical units everywhere: seconds, bytes, bytes per second, degrees
Celsius, watts. Unit conversion belongs to scenario ingestion, not here.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum, unique
from typing import Iterable, Iterator


@unique
class NodeKind(Enum):
    CLOUD = "cloud"
    EDGE = "edge"
    SATELLITE = "satellite"
    DRONE = "drone"
    EO_SATELLITE = "eo_satellite"
    GROUND_STATION = "ground_station"

    @classmethod
    def parse(cls, text: str) -> "NodeKind":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown node kind {text!r}") from None


@dataclass(frozen=True)
class AvailabilitySchedule:
    """Half-open epoch intervals [start, end) during which a node is up.

    An interval end of None means the interval never closes. Intervals must
    be sorted, non-overlapping, and non-empty.
    """

    intervals: tuple[tuple[int, int | None], ...]

    def __post_init__(self) -> None:
        prev_end: int | None = 0
        for start, end in self.intervals:
            if start < 0:
                raise ValueError(f"interval start {start} is negative")
            if end is not None and end <= start:
                raise ValueError(f"empty interval [{start}, {end})")
            if prev_end is None or start < prev_end:
                raise ValueError("intervals must be sorted and non-overlapping")
            prev_end = end

    @classmethod
    def always(cls) -> "AvailabilitySchedule":
        return cls(((0, None),))

    @classmethod
    def windows(cls, *spans: tuple[int, int | None]) -> "AvailabilitySchedule":
        return cls(tuple(spans))

    @property
    def is_always(self) -> bool:
        return self.intervals == ((0, None),)

    def available(self, t: int) -> bool:
        if t < 0:
            raise ValueError(f"epoch {t} is negative")
        for start, end in self.intervals:
            if start > t:
                return False
            if end is None or t < end:
                return True
        return False


ALWAYS = AvailabilitySchedule.always()


@dataclass(frozen=True)
class Node:
    """A compute node. Resource fields are whole-run capacities.

    Ground nodes are modeled as permanently reachable, so any kind other
    than SATELLITE must carry the always-available schedule; orbital
    dynamics enter the model only through satellite schedules and through
    per-run link latency sampling.
    """

    id: str
    kind: NodeKind
    capacity: float = math.inf
    power_available: float = math.inf
    temp_orbital: float = 0.0
    temp_max: float = math.inf
    schedule: AvailabilitySchedule = ALWAYS

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("node id must be non-empty")
        if self.capacity < 0:
            raise ValueError(f"{self.id}: capacity must be >= 0")
        if self.power_available < 0:
            raise ValueError(f"{self.id}: power_available must be >= 0")
        if self.temp_orbital > self.temp_max:
            raise ValueError(f"{self.id}: temp_orbital exceeds temp_max")
        if self.kind is not NodeKind.SATELLITE and not self.schedule.is_always:
            raise ValueError(f"{self.id}: non-satellite nodes must be always available")


@dataclass(frozen=True)
class Link:
    """Bidirectional link with positive latency (s) and bandwidth (B/s)."""

    src: str
    dst: str
    latency: float
    bandwidth: float

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError(f"self-link on {self.src}")
        if not self.latency > 0:
            raise ValueError(f"link {self.src}-{self.dst}: latency must be > 0")
        if not self.bandwidth > 0:
            raise ValueError(f"link {self.src}-{self.dst}: bandwidth must be > 0")

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst) if self.src <= self.dst else (self.dst, self.src)


class Topology:
    """Validated node/link collection plus the reachability-target kinds."""

    def __init__(
        self,
        nodes: Iterable[Node],
        links: Iterable[Link] = (),
        required_types: Iterable[NodeKind] = (),
    ) -> None:
        self.nodes: dict[str, Node] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise ValueError(f"duplicate node id {node.id!r}")
            self.nodes[node.id] = node
        self.links: tuple[Link, ...] = tuple(links)
        self.required_types: frozenset[NodeKind] = frozenset(required_types)
        seen: set[tuple[str, str]] = set()
        for link in self.links:
            for end in (link.src, link.dst):
                if end not in self.nodes:
                    raise ValueError(f"link endpoint {end!r} is not a node")
            if link.key in seen:
                raise ValueError(f"duplicate link {link.key}")
            seen.add(link.key)

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise ValueError(f"unknown node {node_id!r}") from None

    def __iter__(self) -> Iterator[Node]:
        return iter(self.nodes.values())


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    latency: float
    bandwidth: float


class PrunedGraph:
    """Immutable snapshot of the topology at one epoch.

    Holds only the nodes available at that epoch and the links whose both
    endpoints survived. Adjacency is pre-sorted by neighbor id so that every
    traversal below is deterministic.
    """

    def __init__(self, epoch: int, nodes: Iterable[str], edges: Iterable[GraphEdge]):
        self.epoch = epoch
        self.nodes: frozenset[str] = frozenset(nodes)
        canonical = []
        for e in edges:
            if e.src > e.dst:
                e = GraphEdge(e.dst, e.src, e.latency, e.bandwidth)
            canonical.append(e)
        self.edges: tuple[GraphEdge, ...] = tuple(
            sorted(canonical, key=lambda e: (e.src, e.dst))
        )
        adj: dict[str, list[tuple[str, float, float]]] = {n: [] for n in self.nodes}
        self._edge_data: dict[tuple[str, str], tuple[float, float]] = {}
        for e in self.edges:
            adj[e.src].append((e.dst, e.latency, e.bandwidth))
            adj[e.dst].append((e.src, e.latency, e.bandwidth))
            self._edge_data[(e.src, e.dst)] = (e.latency, e.bandwidth)
            self._edge_data[(e.dst, e.src)] = (e.latency, e.bandwidth)
        self._adj: dict[str, tuple[tuple[str, float, float], ...]] = {
            n: tuple(sorted(lst)) for n, lst in adj.items()
        }

    def require(self, node_id: str) -> None:
        if node_id not in self.nodes:
            raise ValueError(f"node {node_id!r} is not in the graph at epoch {self.epoch}")

    def neighbors(self, node_id: str) -> tuple[tuple[str, float, float], ...]:
        self.require(node_id)
        return self._adj[node_id]

    def edge_data(self, a: str, b: str) -> tuple[float, float]:
        return self._edge_data[(a, b)]

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class Path:
    """A concrete route with per-prefix annotations.

    cum_latency[i] is the latency from the first node to nodes[i];
    bottleneck[i] is the minimum bandwidth over those hops (inf for the
    zero-hop prefix). Latencies are strictly positive, so cum_latency is
    strictly increasing.
    """

    nodes: tuple[str, ...]
    hop_latencies: tuple[float, ...]
    cum_latency: tuple[float, ...]
    bottleneck: tuple[float, ...]

    @property
    def total_latency(self) -> float:
        return self.cum_latency[-1]

    @property
    def hop_count(self) -> int:
        return len(self.nodes) - 1


def availability(node: Node, t: int) -> bool:
    """Schedule membership at epoch t (reachability is handled separately)."""
    return node.schedule.available(t)


def _up_adjacency(topology: Topology, t: int) -> tuple[set[str], dict[str, list[str]]]:
    up = {n.id for n in topology if availability(n, t)}
    adj: dict[str, list[str]] = {n: [] for n in up}
    for link in topology.links:
        if link.src in up and link.dst in up:
            adj[link.src].append(link.dst)
            adj[link.dst].append(link.src)
    return up, adj


def _multi_source_reach(sources: list[str], adj: dict[str, list[str]]) -> set[str]:
    reached = set(sources)
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in reached:
                reached.add(v)
                queue.append(v)
    return reached


def reachable_all_types(topology: Topology, node_id: str, t: int) -> bool:
    """True iff a path over up nodes/links connects node_id to at least one
    up node of every required kind. Vacuously true with no required kinds.
    A node of a required kind reaches itself via the zero-length path.
    """
    topology.node(node_id)
    if not topology.required_types:
        return True
    up, adj = _up_adjacency(topology, t)
    if node_id not in up:
        return False
    for kind in topology.required_types:
        sources = sorted(n for n in up if topology.nodes[n].kind is kind)
        if node_id not in _multi_source_reach(sources, adj):
            return False
    return True


def available_set(topology: Topology, t: int) -> frozenset[str]:
    """Nodes that are both schedule-up and type-reachable at epoch t."""
    up, adj = _up_adjacency(topology, t)
    result = up
    for kind in topology.required_types:
        sources = sorted(n for n in up if topology.nodes[n].kind is kind)
        result = result & _multi_source_reach(sources, adj)
    return frozenset(result)


def prune(topology: Topology, t: int) -> PrunedGraph:
    """Snapshot the topology at epoch t: available nodes, surviving links."""
    alive = available_set(topology, t)
    edges = [
        GraphEdge(link.src, link.dst, link.latency, link.bandwidth)
        for link in topology.links
        if link.src in alive and link.dst in alive
    ]
    return PrunedGraph(t, alive, edges)


def _pred_chain(pred: dict[str, str | None], node: str) -> tuple[str, ...]:
    chain: list[str] = []
    cur: str | None = node
    while cur is not None:
        chain.append(cur)
        cur = pred[cur]
    chain.reverse()
    return tuple(chain)


def shortest_path(graph: PrunedGraph, src: str, dst: str) -> Path | None:
    """Dijkstra by cumulative latency; None when dst is unreachable.

    Equal-cost routes are broken lexicographically by node id sequence, so
    identical inputs always yield the identical path.
    """
    graph.require(src)
    graph.require(dst)
    if src == dst:
        return Path((src,), (), (0.0,), (math.inf,))
    dist: dict[str, float] = {src: 0.0}
    pred: dict[str, str | None] = {src: None}
    settled: set[str] = set()
    heap: list[tuple[float, str]] = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        if u == dst:
            break
        for v, lat, _bw in graph.neighbors(u):
            if v in settled:
                continue
            alt = d + lat
            if v not in dist or alt < dist[v]:
                dist[v] = alt
                pred[v] = u
                heapq.heappush(heap, (alt, v))
            elif alt == dist[v] and _pred_chain(pred, u) + (v,) < _pred_chain(pred, v):
                pred[v] = u
    if dst not in settled:
        return None
    nodes = _pred_chain(pred, dst)
    hop_latencies: list[float] = []
    cum: list[float] = [0.0]
    bottleneck: list[float] = [math.inf]
    total = 0.0
    narrowest = math.inf
    for a, b in zip(nodes, nodes[1:]):
        lat, bw = graph.edge_data(a, b)
        hop_latencies.append(lat)
        total += lat
        narrowest = min(narrowest, bw)
        cum.append(total)
        bottleneck.append(narrowest)
    return Path(nodes, tuple(hop_latencies), tuple(cum), tuple(bottleneck))


def hops(graph: PrunedGraph, a: str, b: str) -> int | None:
    """Unit-weight BFS distance between two nodes; None when disconnected."""
    graph.require(a)
    graph.require(b)
    if a == b:
        return 0
    depth = {a: 0}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        for v, _lat, _bw in graph.neighbors(u):
            if v not in depth:
                depth[v] = depth[u] + 1
                if v == b:
                    return depth[v]
                queue.append(v)
    return None
