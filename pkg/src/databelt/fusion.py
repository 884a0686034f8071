"""Function fusion: co-located consecutive functions execute as one unit.

A fused group performs one bundled read for its external inputs, runs its
members in order passing state through in-process memory (zero storage
ops), and writes one merged object for all member outputs. Depth-1 groups
degenerate to ordinary read/execute/write, so the engine can route every
function through this module.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .statestore import (
    BundleResult,
    StateKey,
    StateObject,
    StateStore,
    bundle_get,
    encode_key,
    merged_put,
)
from .topology import PrunedGraph
from .workflow import FunctionSpec, WorkflowDag, topo_order

WORKFLOW_INPUT_ID = "workflow-input"


@dataclass(frozen=True)
class FusionGroup:
    """Members are consecutive in topological order and share a host node."""

    members: tuple[str, ...]
    host: str

    @property
    def depth(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class FusionPlan:
    groups: tuple[FusionGroup, ...]

    @property
    def max_depth(self) -> int:
        return max(g.depth for g in self.groups) if self.groups else 0


def plan_fusion(workflow: WorkflowDag, assignment: dict[str, str], max_depth: int) -> FusionPlan:
    """Greedy segmentation of the topological order: a function joins the
    open group while it shares the group's node, is fusible, and the group
    is below max_depth; anything else starts a new group."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    order = topo_order(workflow)
    groups: list[FusionGroup] = []
    current: list[str] = []
    current_host: str | None = None
    for function_id in order:
        host = assignment[function_id]
        fusible = workflow.function(function_id).fusible
        if (
            current
            and host == current_host
            and fusible
            and workflow.function(current[-1]).fusible
            and len(current) < max_depth
        ):
            current.append(function_id)
            continue
        if current:
            groups.append(FusionGroup(tuple(current), current_host))  # type: ignore[arg-type]
        current = [function_id]
        current_host = host
    if current:
        groups.append(FusionGroup(tuple(current), current_host))  # type: ignore[arg-type]
    return FusionPlan(tuple(groups))


def synthesize_output(
    spec: FunctionSpec, inputs: list[StateObject], materialize: bool
) -> bytes | None:
    """Deterministic function body stand-in: the output bytes depend only on
    the function id and the input payload bytes (not on where inputs were
    stored), so fused and unfused executions agree byte for byte."""
    if not materialize:
        return None
    digest = hashlib.sha256()
    digest.update(spec.id.encode())
    for obj in sorted(inputs, key=lambda s: s.key.function_id):
        digest.update(b"\x1f")
        digest.update(obj.key.function_id.encode())
        digest.update(b"\x1f")
        digest.update(obj.payload or b"")
    seed = digest.digest()
    size = int(spec.output_state_size)
    out = bytearray()
    counter = 0
    while len(out) < size:
        out += hashlib.sha256(seed + counter.to_bytes(8, "big")).digest()
        counter += 1
    return bytes(out[:size])


@dataclass(frozen=True)
class GroupExecution:
    output_key: StateKey
    bundle: BundleResult
    compute_seconds: float
    write_latency: float
    outputs: dict[str, StateObject]
    access_log: tuple[tuple[str, str], ...]

    @property
    def storage_ops(self) -> int:
        return self.bundle.op_count + 1

    @property
    def storage_latency(self) -> float:
        return self.bundle.latency + self.write_latency


class IsolationError(RuntimeError):
    """A member tried to read state that was not passed to it."""


class _Middleware:
    """In-process state broker for one group execution. Hands a member only
    the states reachable from its declared inputs and logs every access."""

    def __init__(self, external: dict[str, StateObject]) -> None:
        self._external = external
        self._produced: dict[str, StateObject] = {}
        self.access_log: list[tuple[str, str]] = []

    def provide(self, member: str, wanted: str) -> StateObject:
        if wanted in self._produced:
            obj = self._produced[wanted]
        elif wanted in self._external:
            obj = self._external[wanted]
        else:
            raise IsolationError(f"{member!r} may not read state of {wanted!r}")
        self.access_log.append((member, encode_key(obj.key)))
        return obj

    def deposit(self, member: str, obj: StateObject) -> None:
        self._produced[member] = obj


def execute_group(
    group: FusionGroup,
    input_keys: dict[str, StateKey],
    store: StateStore,
    graph: PrunedGraph,
    workflow: WorkflowDag,
    workflow_id: str,
    target_node: str | None = None,
    write_origin: str | None = None,
    write_graph: PrunedGraph | None = None,
) -> tuple[StateKey, GroupExecution]:
    """Run one group on its host: one bundled read of the external inputs,
    in-process execution of every member, one merged write of all outputs.

    input_keys maps each external producer (a predecessor function outside
    the group, or WORKFLOW_INPUT_ID for the workflow input) to the stored
    key holding its bytes. The merged object goes to target_node (default:
    the host, a purely local write). Reads use `graph`; the write uses
    `write_graph` when the group's completion falls in a later epoch.
    """
    target = target_node if target_node is not None else group.host
    origin = write_origin if write_origin is not None else group.host
    in_group = set(group.members)
    needed: dict[str, StateKey] = {}
    for member in group.members:
        for pred in workflow.predecessors(member):
            if pred in in_group:
                continue
            if pred not in input_keys:
                raise KeyError(f"missing input key for predecessor {pred!r}")
            needed[pred] = input_keys[pred]
        if member == workflow.entry and WORKFLOW_INPUT_ID in input_keys:
            needed[WORKFLOW_INPUT_ID] = input_keys[WORKFLOW_INPUT_ID]

    fetch_order = sorted(needed)
    bundle = bundle_get(store, [needed[p] for p in fetch_order], group.host, graph)
    external: dict[str, StateObject] = {}
    for producer, fetched in zip(fetch_order, bundle.states):
        if producer != WORKFLOW_INPUT_ID and fetched.segments:
            external[producer] = fetched.segment_of(producer)
        else:
            external[producer] = fetched

    middleware = _Middleware(external)
    materialize = all(s.payload is not None for s in external.values())
    compute_seconds = 0.0
    outputs: dict[str, StateObject] = {}
    for member in group.members:
        spec = workflow.function(member)
        sources = list(workflow.predecessors(member))
        if member == workflow.entry and WORKFLOW_INPUT_ID in needed:
            sources.append(WORKFLOW_INPUT_ID)
        inputs = [middleware.provide(member, src) for src in sources]
        payload = synthesize_output(spec, inputs, materialize)
        size = int(spec.output_state_size)
        obj = StateObject(StateKey(workflow_id, group.host, member), size, payload)
        middleware.deposit(member, obj)
        outputs[member] = obj
        compute_seconds += spec.compute_time

    key, write_latency = merged_put(
        store,
        [outputs[m] for m in group.members],
        node=target,
        origin=origin,
        graph=write_graph if write_graph is not None else graph,
        workflow_id=workflow_id,
    )
    execution = GroupExecution(
        output_key=key,
        bundle=bundle,
        compute_seconds=compute_seconds,
        write_latency=write_latency,
        outputs=outputs,
        access_log=tuple(middleware.access_log),
    )
    return key, execution
