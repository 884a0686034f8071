"""Two-tier key-value state store with a charged-latency operation log.

Every node hosts a Local tier; one designated node hosts the Global tier.
Writes land in the owner node's Local tier and, when replication is on,
are copied into the Global tier silently (no logged op, no charged
latency), modeling asynchronous redundancy. Reads are served from the
key's home node when it is up and reachable, falling back to the Global
replica otherwise.

Keys carry three fields joined with "|": the separator is chosen over ":"
so that IPv6 storage addresses such as 2001:db8::1 survive round-trips.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass, replace
from typing import Iterable

from .propagation import migration_time
from .topology import PrunedGraph, hops as graph_hops, shortest_path

KEY_SEPARATOR = "|"

DEFAULT_OP_OVERHEAD = 0.005


class StateLostError(RuntimeError):
    """No reachable replica holds the requested key."""


@dataclass(frozen=True)
class StateKey:
    workflow_id: str
    storage_address: str
    function_id: str

    def __post_init__(self) -> None:
        for name in ("workflow_id", "storage_address", "function_id"):
            value = getattr(self, name)
            if not value:
                raise ValueError(f"{name} must be non-empty")
            if KEY_SEPARATOR in value:
                raise ValueError(f"{name} must not contain {KEY_SEPARATOR!r}: {value!r}")

    def at(self, storage_address: str) -> "StateKey":
        return replace(self, storage_address=storage_address)


def encode_key(key: StateKey) -> str:
    return KEY_SEPARATOR.join((key.workflow_id, key.storage_address, key.function_id))


def parse_key(text: str) -> StateKey:
    parts = text.split(KEY_SEPARATOR)
    if len(parts) != 3:
        raise ValueError(f"malformed state key {text!r}: expected 3 fields, got {len(parts)}")
    return StateKey(*parts)


@dataclass(frozen=True)
class StateObject:
    """An immutable state value. payload may be None for size-only
    simulation; when present its length must equal size. segments records
    (offset, length) slices per producing function for merged objects.
    """

    key: StateKey
    size: int
    payload: bytes | None = None
    segments: tuple[tuple[str, int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.size < 0:
            raise ValueError("size must be >= 0")
        if self.payload is not None and len(self.payload) != self.size:
            raise ValueError(f"payload length {len(self.payload)} != size {self.size}")

    def segment_of(self, function_id: str) -> "StateObject":
        """The slice contributed by one function, as a standalone object."""
        for fid, offset, length in self.segments:
            if fid == function_id:
                payload = None
                if self.payload is not None:
                    payload = self.payload[offset : offset + length]
                sliced_key = replace(self.key, function_id=fid)
                return StateObject(sliced_key, length, payload)
        raise KeyError(f"{function_id!r} has no segment in {encode_key(self.key)}")

    @property
    def segment_functions(self) -> tuple[str, ...]:
        return tuple(fid for fid, _o, _l in self.segments)


@dataclass(frozen=True)
class OpRecord:
    """One logged storage operation. bytes_moved counts network bytes only,
    so locally served operations record 0."""

    kind: str
    node: str
    key_count: int
    bytes_moved: int
    latency: float


class StorageOpLog:
    CSV_HEADER = ("op", "node", "key_count", "bytes", "latency_s")

    def __init__(self) -> None:
        self.records: list[OpRecord] = []

    def append(self, record: OpRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def total_bytes_moved(self) -> int:
        return sum(r.bytes_moved for r in self.records)

    @property
    def total_latency(self) -> float:
        return sum(r.latency for r in self.records)

    def counts_by_kind(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.records:
            out[r.kind] = out.get(r.kind, 0) + 1
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_HEADER)
        for r in self.records:
            writer.writerow(
                (r.kind, r.node, r.key_count, r.bytes_moved, f"{r.latency:.9g}")
            )
        return buf.getvalue()


def _network_cost(
    graph: PrunedGraph, origin: str, node: str, size: float
) -> tuple[float, float]:
    """(transfer seconds, network bytes) for moving size bytes origin->node."""
    if origin == node:
        return 0.0, 0.0
    path = shortest_path(graph, origin, node)
    if path is None:
        raise StateLostError(f"no route between {origin!r} and {node!r}")
    return migration_time(path.total_latency, size, path.bottleneck[-1]), size


class StateStore:
    """Per-node Local tiers plus the Global tier on global_node."""

    def __init__(
        self,
        node_ids: Iterable[str],
        global_node: str,
        op_overhead: float = DEFAULT_OP_OVERHEAD,
        replicate_to_global: bool = True,
    ) -> None:
        self.local: dict[str, dict[StateKey, StateObject]] = {
            node_id: {} for node_id in node_ids
        }
        if global_node not in self.local:
            raise ValueError(f"global node {global_node!r} is not a member node")
        if op_overhead < 0:
            raise ValueError("op_overhead must be >= 0")
        self.global_node = global_node
        self.global_tier: dict[StateKey, StateObject] = {}
        self.op_overhead = op_overhead
        self.replicate_to_global = replicate_to_global
        self.oplog = StorageOpLog()

    def _admit(self, state: StateObject, node: str) -> StateObject:
        stored = replace(state, key=state.key.at(node))
        self.local[node][stored.key] = stored
        if self.replicate_to_global:
            self.global_tier[stored.key] = stored
        return stored

    def preload(self, state: StateObject, node: str) -> StateKey:
        """Seed externally produced state (workflow input) at a node without
        logging an op or charging latency."""
        if node not in self.local:
            raise ValueError(f"unknown store node {node!r}")
        return self._admit(state, node).key

    def put(
        self, state: StateObject, node: str, origin: str, graph: PrunedGraph
    ) -> float:
        """Write one object to node's Local tier from origin. Returns the
        charged latency: fixed op overhead plus network transfer."""
        if node not in self.local:
            raise ValueError(f"unknown store node {node!r}")
        transfer, moved = _network_cost(graph, origin, node, state.size)
        self._admit(state, node)
        latency = self.op_overhead + transfer
        self.oplog.append(OpRecord("write", node, 1, int(moved), latency))
        return latency

    def _resolve(self, key: StateKey, graph: PrunedGraph, reader: str) -> StateObject:
        home = key.storage_address
        if home in graph and reader in graph:
            held = self.local.get(home, {}).get(key)
            if held is not None and graph_hops(graph, reader, home) is not None:
                return held
        replica = self.global_tier.get(key)
        if (
            replica is not None
            and self.global_node in graph
            and graph_hops(graph, reader, self.global_node) is not None
        ):
            # the Global tier serves this copy, so transfers originate there
            return replace(replica, key=replica.key.at(self.global_node))
        raise StateLostError(f"no reachable replica for {encode_key(key)}")

    def serving_node(self, key: StateKey, graph: PrunedGraph, reader: str) -> str:
        return self._resolve(key, graph, reader).key.storage_address

    def get(
        self, key: StateKey, reader: str, graph: PrunedGraph
    ) -> tuple[StateObject, float, int]:
        """Read one object. Returns (object, charged latency, hop count)."""
        graph.require(reader)
        state = self._resolve(key, graph, reader)
        serving = state.key.storage_address
        transfer, moved = _network_cost(graph, serving, reader, state.size)
        distance = graph_hops(graph, reader, serving)
        latency = self.op_overhead + transfer
        self.oplog.append(OpRecord("read", serving, 1, int(moved), latency))
        return state, latency, int(distance if distance is not None else 0)


@dataclass(frozen=True)
class BundleFetch:
    """One key's resolution inside a bundle: where it was served from, how
    far that was, and the network seconds/bytes an individual fetch of it
    would have cost (used for per-edge accounting)."""

    key: StateKey
    serving_node: str
    hops: int
    solo_transfer: float
    bytes_moved: int


@dataclass(frozen=True)
class BundleResult:
    states: tuple[StateObject, ...]
    latency: float
    op_count: int
    fetches: tuple[BundleFetch, ...]


def bundle_get(
    store: StateStore, keys: list[StateKey], reader: str, graph: PrunedGraph
) -> BundleResult:
    """Fetch several keys with one logged op per serving node.

    Keys resolving to the same serving node share a single op whose charged
    latency is one overhead plus the combined transfer of the group's bytes.
    Groups are processed in serving-node order for determinism; returned
    states keep the input key order.
    """
    graph.require(reader)
    if not keys:
        return BundleResult((), 0.0, 0, ())
    resolved: dict[StateKey, StateObject] = {}
    groups: dict[str, list[StateObject]] = {}
    for key in dict.fromkeys(keys):
        state = store._resolve(key, graph, reader)
        resolved[key] = state
        groups.setdefault(state.key.storage_address, []).append(state)
    total_latency = 0.0
    fetches: list[BundleFetch] = []
    for serving in sorted(groups):
        members = groups[serving]
        combined = sum(s.size for s in members)
        transfer, moved = _network_cost(graph, serving, reader, combined)
        distance = graph_hops(graph, reader, serving) or 0
        latency = store.op_overhead + transfer
        total_latency += latency
        store.oplog.append(
            OpRecord("bundle_read", serving, len(members), int(moved), latency)
        )
        for s in members:
            solo, solo_moved = _network_cost(graph, serving, reader, s.size)
            fetches.append(
                BundleFetch(s.key, serving, int(distance), solo, int(solo_moved))
            )
    ordered = tuple(resolved[key] for key in keys)
    by_key = {f.key: f for f in fetches}
    return BundleResult(
        ordered, total_latency, len(groups), tuple(by_key[s.key] for s in ordered)
    )


def merged_put(
    store: StateStore,
    states: list[StateObject],
    node: str,
    origin: str,
    graph: PrunedGraph,
    workflow_id: str | None = None,
) -> tuple[StateKey, float]:
    """Write several function outputs as one merged object under a fresh key.

    The payload is the concatenation of member payloads in function-id
    lexicographic order (sizes add; a segment table records each member's
    slice). One op is logged. Returns (new key, charged latency).
    """
    if not states:
        raise ValueError("merged_put requires at least one state")
    if node not in store.local:
        raise ValueError(f"unknown store node {node!r}")
    ordered = sorted(states, key=lambda s: s.key.function_id)
    wf = workflow_id if workflow_id is not None else ordered[0].key.workflow_id
    total_size = sum(s.size for s in ordered)
    materialize = all(s.payload is not None for s in ordered)
    payload = b"".join(s.payload for s in ordered) if materialize else None  # type: ignore[misc]
    segments = []
    offset = 0
    for s in ordered:
        segments.append((s.key.function_id, offset, s.size))
        offset += s.size
    merged_function_id = "+".join(s.key.function_id for s in ordered)
    key = StateKey(wf, node, merged_function_id)
    merged = StateObject(key, total_size, payload, tuple(segments))
    transfer, moved = _network_cost(graph, origin, node, total_size)
    store._admit(merged, node)
    latency = store.op_overhead + transfer
    store.oplog.append(OpRecord("merged_write", node, 1, int(moved), latency))
    return key, latency
