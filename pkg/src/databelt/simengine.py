"""Deterministic workflow execution over a dynamic topology.

A run walks the workflow in topological order. Each function is placed on
the cheapest feasible node relative to its input state, executes (fused
with co-located neighbors up to the configured depth), and its output is
stored where the active policy decides: propagated toward the destination
under a handoff budget (databelt), on a random up node (random), or always
at the Global node (stateless). Every latency charge, storage op, and
per-edge handoff is recorded; identical scenario + policy + seed yields an
identical result.
"""

from __future__ import annotations

import hashlib
import logging
import math
import random
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum, unique

from .constraints import PenaltyConfig
from .fusion import WORKFLOW_INPUT_ID, FusionGroup, GroupExecution, execute_group
from .propagation import (
    MigrationEstimate,
    PlacementDecision,
    compute_placement,
    resolve_target,
)
from .statestore import StateKey, StateObject, StateStore
from .topology import Link, Node, NodeKind, PrunedGraph, Topology, prune, shortest_path
from .workflow import WorkflowDag, topo_order

log = logging.getLogger("databelt.simengine")


class PlacementInfeasibleError(RuntimeError):
    """No node can host a function under the current constraints."""


@unique
class Policy(Enum):
    DATABELT = "databelt"
    RANDOM = "random"
    STATELESS = "stateless"

    @classmethod
    def parse(cls, text: str) -> "Policy":
        try:
            return cls(text.strip().lower())
        except ValueError:
            valid = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown policy {text!r} (valid: {valid})") from None


@dataclass(frozen=True)
class LinkSpec:
    """A link whose latency is drawn per run from [lat_lo, lat_hi] seconds."""

    src: str
    dst: str
    lat_lo: float
    lat_hi: float
    bandwidth: float

    def __post_init__(self) -> None:
        if not self.lat_lo > 0:
            raise ValueError(f"link {self.src}-{self.dst}: latency must be > 0")
        if self.lat_hi < self.lat_lo:
            raise ValueError(f"link {self.src}-{self.dst}: latency range inverted")
        if not self.bandwidth > 0:
            raise ValueError(f"link {self.src}-{self.dst}: bandwidth must be > 0")


@dataclass(frozen=True)
class Scenario:
    """Everything a run needs. Link latencies are ranges; one concrete
    topology is sampled per run from the run's seed and then frozen."""

    name: str
    nodes: tuple[Node, ...]
    links: tuple[LinkSpec, ...]
    workflow: WorkflowDag
    destination: str
    ingress: str
    global_node: str
    input_size: int
    required_types: frozenset[NodeKind] = frozenset()
    auto_sized: frozenset[str] = frozenset()
    fusion_max_depth: int = 1
    epochs_per_stage: int = 1
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    op_overhead: float = 0.005
    replicate_to_global: bool = True
    materialize_payloads: bool = False
    seed: int = 0
    repetitions: int = 1

    def __post_init__(self) -> None:
        ids = {n.id for n in self.nodes}
        for label, node_id in (
            ("destination", self.destination),
            ("ingress", self.ingress),
            ("global_node", self.global_node),
        ):
            if node_id not in ids:
                raise ValueError(f"{label} {node_id!r} is not a node")
        if self.input_size < 0:
            raise ValueError("input_size must be >= 0")
        if self.fusion_max_depth < 1:
            raise ValueError("fusion_max_depth must be >= 1")
        if self.epochs_per_stage < 1:
            raise ValueError("epochs_per_stage must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        topo_order(self.workflow)  # raises on malformed DAGs

    def sample_topology(self, rng: random.Random) -> Topology:
        links = [
            Link(ls.src, ls.dst, rng.uniform(ls.lat_lo, ls.lat_hi), ls.bandwidth)
            for ls in self.links
        ]
        return Topology(self.nodes, links, self.required_types)

    def with_input_size(self, input_size: int) -> "Scenario":
        """Same scenario at a different input size; functions whose output
        size tracks the input are rescaled with it."""
        functions = [
            replace(spec, output_state_size=float(input_size))
            if spec.id in self.auto_sized
            else spec
            for spec in self.workflow.functions.values()
        ]
        dag = WorkflowDag(
            functions, self.workflow.edges, self.workflow.entry, self.workflow.terminal
        )
        return replace(self, input_size=input_size, workflow=dag)


@dataclass(frozen=True)
class EdgeRecord:
    """Handoff accounting for one workflow edge. Network seconds only; the
    fixed per-op overheads are charged to the latency ledgers instead."""

    src: str
    dst: str
    slo: float
    write_transfer: float
    read_transfer: float
    fallback_used: bool
    state_node: str
    read_hops: int
    in_process: bool

    @property
    def handoff(self) -> float:
        return self.write_transfer + self.read_transfer

    @property
    def violated(self) -> bool:
        return self.handoff > self.slo

    @property
    def served_local(self) -> bool:
        return self.read_hops == 0


@dataclass(frozen=True)
class RunResult:
    scenario: str
    policy: str
    seed: int
    index: int
    total_latency: float
    read_latency: float
    write_latency: float
    compute_latency: float
    throughput: float
    slo_violations: int
    slo_violation_pct: float
    mean_hops: float
    local_availability: float
    storage_ops: int
    bytes_moved: int
    edges: tuple[EdgeRecord, ...]
    assignment: dict[str, str]
    output_keys: dict[str, StateKey]
    groups: tuple[FusionGroup, ...]
    # (read, compute, write) charged seconds per executed group, in order
    group_charges: tuple[tuple[float, float, float], ...]
    store: StateStore

    def metrics_row(self) -> dict[str, object]:
        return {
            "scenario": self.scenario,
            "policy": self.policy,
            "seed": self.seed,
            "run": self.index,
            "total_s": self.total_latency,
            "read_s": self.read_latency,
            "write_s": self.write_latency,
            "rps": self.throughput,
            "slo_violations": self.slo_violations,
            "slo_violation_pct": self.slo_violation_pct,
            "mean_hops": self.mean_hops,
            "local_availability": self.local_availability,
            "storage_ops": self.storage_ops,
            "bytes_moved": self.bytes_moved,
        }


SUMMARY_FIELDS = (
    "total_s",
    "read_s",
    "write_s",
    "rps",
    "slo_violations",
    "slo_violation_pct",
    "mean_hops",
    "local_availability",
    "storage_ops",
    "bytes_moved",
)


@dataclass(frozen=True)
class BatchResult:
    scenario: str
    policy: str
    base_seed: int
    runs: tuple[RunResult, ...]
    mean: dict[str, float]
    stddev: dict[str, float]


def _input_payload(workflow_id: str, size: int) -> bytes:
    seed = hashlib.sha256(workflow_id.encode()).digest()
    out = bytearray()
    counter = 0
    while len(out) < size:
        out += hashlib.sha256(seed + counter.to_bytes(8, "big")).digest()
        counter += 1
    return bytes(out[:size])


class ResourceLedger:
    """Cumulative per-node resource use across the whole run. Functions
    stay resident once placed, mirroring the whole-workflow capacity sums
    of the constraint model."""

    def __init__(self, topology: Topology) -> None:
        self.topology = topology
        self.demand: dict[str, float] = {}
        self.power: dict[str, float] = {}
        self.heat: dict[str, float] = {}

    def fits(self, node_id: str, spec) -> bool:
        node = self.topology.node(node_id)
        if self.demand.get(node_id, 0.0) + spec.demand > node.capacity:
            return False
        if self.power.get(node_id, 0.0) + spec.power > node.power_available:
            return False
        heat = node.temp_orbital + self.heat.get(node_id, 0.0) + spec.heat
        return heat <= node.temp_max

    def commit(self, node_id: str, spec) -> None:
        self.demand[node_id] = self.demand.get(node_id, 0.0) + spec.demand
        self.power[node_id] = self.power.get(node_id, 0.0) + spec.power
        self.heat[node_id] = self.heat.get(node_id, 0.0) + spec.heat


def place_function(
    graph: PrunedGraph,
    function_id: str,
    workflow: WorkflowDag,
    loads: ResourceLedger,
    input_nodes: tuple[str, ...],
    destination: str,
) -> str:
    """Pick the execution node: the terminal is pinned to the destination;
    every other function goes to the feasible node with the smallest summed
    shortest-path latency to its input state nodes (ties break by node id).
    Input nodes that are down this epoch impose no pull; a node that cannot
    reach some input is not eligible.
    """
    spec = workflow.function(function_id)
    if function_id == workflow.terminal:
        if destination not in graph:
            raise PlacementInfeasibleError(
                f"destination {destination!r} unavailable at epoch {graph.epoch}"
            )
        if not loads.fits(destination, spec):
            raise PlacementInfeasibleError(
                f"destination {destination!r} cannot host terminal {function_id!r}"
            )
        return destination
    refs = [ref for ref in input_nodes if ref in graph]
    best: tuple[float, str] | None = None
    for node_id in sorted(graph.nodes):
        if not loads.fits(node_id, spec):
            continue
        cost = 0.0
        reachable = True
        for ref in refs:
            path = shortest_path(graph, node_id, ref)
            if path is None:
                reachable = False
                break
            cost += path.total_latency
        if not reachable:
            continue
        if best is None or cost < best[0]:
            best = (cost, node_id)
    if best is None:
        raise PlacementInfeasibleError(
            f"no feasible node for {function_id!r} at epoch {graph.epoch}"
        )
    return best[1]


def _local_decision(node: str) -> PlacementDecision:
    return PlacementDecision(
        state_node=node,
        estimate=MigrationEstimate(node, 0.0, 0.0),
        fallback_used=False,
    )


def _write_decision(
    policy: Policy,
    scenario: Scenario,
    graph: PrunedGraph,
    host: str,
    merged_size: float,
    outgoing_slos: list[float],
    rng: random.Random,
    all_node_ids: tuple[str, ...],
) -> PlacementDecision:
    if policy is Policy.STATELESS:
        if scenario.global_node in graph:
            return _local_decision(scenario.global_node)
        return replace(_local_decision(host), fallback_used=True)
    if policy is Policy.RANDOM:
        for _ in range(len(all_node_ids)):
            candidate = rng.choice(all_node_ids)
            if candidate in graph:
                return _local_decision(candidate)
        return replace(_local_decision(host), fallback_used=True)
    # databelt: no outgoing edge means nothing to propagate for
    if not outgoing_slos:
        return _local_decision(host)
    return compute_placement(
        graph, host, scenario.destination, merged_size, min(outgoing_slos)
    )


def run_workflow(
    scenario: Scenario,
    policy: Policy,
    seed: int,
    index: int = 0,
    fusion_max_depth: int | None = None,
) -> RunResult:
    """Execute one seeded run of the scenario under a policy."""
    rng = random.Random(seed)
    topology = scenario.sample_topology(rng)
    workflow = scenario.workflow
    order = topo_order(workflow)
    max_depth = (
        fusion_max_depth if fusion_max_depth is not None else scenario.fusion_max_depth
    )
    if max_depth < 1:
        raise ValueError("fusion depth must be >= 1")
    all_node_ids = tuple(sorted(n.id for n in scenario.nodes))
    store = StateStore(
        all_node_ids,
        scenario.global_node,
        op_overhead=scenario.op_overhead,
        replicate_to_global=scenario.replicate_to_global,
    )
    workflow_id = f"{scenario.name}-{seed}"

    payload = (
        _input_payload(workflow_id, scenario.input_size)
        if scenario.materialize_payloads
        else None
    )
    input_key = store.preload(
        StateObject(
            StateKey(workflow_id, scenario.ingress, WORKFLOW_INPUT_ID),
            scenario.input_size,
            payload,
        ),
        scenario.ingress,
    )

    graphs: dict[int, PrunedGraph] = {}

    def graph_at(t: int) -> PrunedGraph:
        if t not in graphs:
            graphs[t] = prune(topology, t)
        return graphs[t]

    loads = ResourceLedger(topology)
    assignment: dict[str, str] = {}
    stage_of: dict[str, int] = {}
    key_of: dict[str, StateKey] = {WORKFLOW_INPUT_ID: input_key}
    # per producer: (write transfer seconds, decision) of the group write
    # that stored its output
    write_info: dict[str, tuple[float, PlacementDecision]] = {}
    executions: list[GroupExecution] = []
    groups: list[FusionGroup] = []
    edge_records: list[EdgeRecord] = []
    open_members: list[str] = []
    open_host: str | None = None

    def serving_node_for(producer: str, graph: PrunedGraph) -> str:
        if open_host is not None and producer in open_members:
            return open_host
        home = key_of[producer].storage_address
        if home in graph:
            return home
        # the store would serve this read from the global replica
        return scenario.global_node

    def flush_group() -> None:
        nonlocal open_members, open_host
        if not open_members:
            return
        host = open_host
        assert host is not None
        group = FusionGroup(tuple(open_members), host)
        first_epoch = stage_of[group.members[0]] * scenario.epochs_per_stage
        last_epoch = stage_of[group.members[-1]] * scenario.epochs_per_stage
        read_graph = graph_at(first_epoch)
        write_graph = graph_at(last_epoch)
        merged_size = sum(
            workflow.function(m).output_state_size for m in group.members
        )
        outgoing = [
            e.slo
            for m in group.members
            for e in workflow.out_edges(m)
            if e.dst not in group.members
        ]
        decision = _write_decision(
            policy, scenario, write_graph, host, merged_size, outgoing, rng, all_node_ids
        )
        target = resolve_target(write_graph, host, decision)
        input_keys = {
            producer: key_of[producer]
            for producer in _external_producers(workflow, group)
            if producer in key_of
        }
        key, execution = execute_group(
            group,
            input_keys,
            store,
            read_graph,
            workflow,
            workflow_id,
            target_node=target,
            write_origin=host,
            write_graph=write_graph,
        )
        log.debug(
            "group %s on %s -> state at %s (fallback=%s)",
            "+".join(group.members),
            host,
            target,
            decision.fallback_used,
        )
        groups.append(group)
        executions.append(execution)
        write_transfer = max(execution.write_latency - store.op_overhead, 0.0)
        for member in group.members:
            key_of[member] = key
            write_info[member] = (write_transfer, decision)
        fetch_by_key = {f.key: f for f in execution.bundle.fetches}
        for member in group.members:
            for edge in workflow.in_edges(member):
                if edge.src in group.members:
                    edge_records.append(
                        EdgeRecord(
                            src=edge.src,
                            dst=member,
                            slo=edge.slo,
                            write_transfer=0.0,
                            read_transfer=0.0,
                            fallback_used=False,
                            state_node=host,
                            read_hops=0,
                            in_process=True,
                        )
                    )
                    continue
                produced_transfer, produced_decision = write_info[edge.src]
                fetch = fetch_by_key[key_of[edge.src]]
                edge_records.append(
                    EdgeRecord(
                        src=edge.src,
                        dst=member,
                        slo=edge.slo,
                        write_transfer=produced_transfer,
                        read_transfer=fetch.solo_transfer,
                        fallback_used=produced_decision.fallback_used,
                        state_node=produced_decision.state_node,
                        read_hops=fetch.hops,
                        in_process=False,
                    )
                )
        open_members = []
        open_host = None

    for stage, function_id in enumerate(order):
        stage_of[function_id] = stage
        t = stage * scenario.epochs_per_stage
        graph = graph_at(t)
        spec = workflow.function(function_id)
        preds = workflow.predecessors(function_id)
        producers = preds if preds else (WORKFLOW_INPUT_ID,)
        input_nodes = tuple(serving_node_for(p, graph) for p in producers)
        node = place_function(
            graph, function_id, workflow, loads, input_nodes, scenario.destination
        )
        joins = (
            bool(open_members)
            and node == open_host
            and spec.fusible
            and workflow.function(open_members[-1]).fusible
            and len(open_members) < max_depth
        )
        if not joins:
            flush_group()
            # the flush may have moved this function's inputs; place again
            # against the stored locations before committing
            input_nodes = tuple(serving_node_for(p, graph) for p in producers)
            node = place_function(
                graph, function_id, workflow, loads, input_nodes, scenario.destination
            )
            open_host = node
        open_members.append(function_id)
        loads.commit(node, spec)
        assignment[function_id] = node
        log.debug("placed %s on %s at epoch %d", function_id, node, t)
    flush_group()

    read_latency = sum(e.bundle.latency for e in executions)
    write_latency = sum(e.write_latency for e in executions)
    compute_latency = sum(e.compute_seconds for e in executions)
    total = read_latency + compute_latency + write_latency
    throughput = 1.0 / total if total > 0 else math.inf
    violated = [e for e in edge_records if e.violated]
    read_edges = [e for e in edge_records if not e.in_process]
    mean_hops = (
        sum(e.read_hops for e in read_edges) / len(read_edges) if read_edges else 0.0
    )
    local_availability = (
        sum(1 for e in read_edges if e.served_local) / len(read_edges)
        if read_edges
        else 1.0
    )
    return RunResult(
        scenario=scenario.name,
        policy=policy.value,
        seed=seed,
        index=index,
        total_latency=total,
        read_latency=read_latency,
        write_latency=write_latency,
        compute_latency=compute_latency,
        throughput=throughput,
        slo_violations=len(violated),
        slo_violation_pct=(
            100.0 * len(violated) / len(workflow.edges) if workflow.edges else 0.0
        ),
        mean_hops=mean_hops,
        local_availability=local_availability,
        storage_ops=len(store.oplog),
        bytes_moved=store.oplog.total_bytes_moved,
        edges=tuple(edge_records),
        assignment=assignment,
        output_keys={f: key_of[f] for f in workflow.functions},
        groups=tuple(groups),
        group_charges=tuple(
            (e.bundle.latency, e.compute_seconds, e.write_latency) for e in executions
        ),
        store=store,
    )


def _external_producers(workflow: WorkflowDag, group: FusionGroup) -> list[str]:
    members = set(group.members)
    out: set[str] = set()
    for member in group.members:
        for pred in workflow.predecessors(member):
            if pred not in members:
                out.add(pred)
        if member == workflow.entry:
            out.add(WORKFLOW_INPUT_ID)
    return sorted(out)


def run_batch(
    scenario: Scenario,
    policy: Policy,
    repetitions: int | None = None,
    base_seed: int | None = None,
    fusion_max_depth: int | None = None,
    jobs: int = 1,
) -> BatchResult:
    """Run `repetitions` seeded pipelines (seeds base, base+1, ...) and
    summarize. Results are ordered by run index, so the output is identical
    whatever the worker count."""
    reps = repetitions if repetitions is not None else scenario.repetitions
    base = base_seed if base_seed is not None else scenario.seed
    if reps < 1:
        raise ValueError("repetitions must be >= 1")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")

    def one(i: int) -> RunResult:
        return run_workflow(
            scenario, policy, seed=base + i, index=i, fusion_max_depth=fusion_max_depth
        )

    if jobs == 1:
        runs = [one(i) for i in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(one, range(reps)))
    mean: dict[str, float] = {}
    stddev: dict[str, float] = {}
    for field_name in SUMMARY_FIELDS:
        values = [float(r.metrics_row()[field_name]) for r in runs]
        mean[field_name] = statistics.fmean(values)
        stddev[field_name] = statistics.pstdev(values)
    return BatchResult(
        scenario=scenario.name,
        policy=policy.value,
        base_seed=base,
        runs=tuple(runs),
        mean=mean,
        stddev=stddev,
    )


@dataclass(frozen=True)
class ParallelResult:
    """Per-node serial-queue proxy for N concurrent pipelines."""

    pipelines: int
    makespan: float
    completions: tuple[float, ...]
    throughput: float


def run_parallel(
    scenario: Scenario,
    policy: Policy,
    pipelines: int,
    base_seed: int | None = None,
) -> ParallelResult:
    """Model N identical pipelines contending for nodes: each node serves
    one function at a time, pipelines keep their internal order, and queue
    admission is deterministic (stage, then pipeline index)."""
    if pipelines < 1:
        raise ValueError("pipelines must be >= 1")
    base = base_seed if base_seed is not None else scenario.seed
    runs = [
        run_workflow(scenario, policy, seed=base + i, index=i)
        for i in range(pipelines)
    ]
    order = topo_order(scenario.workflow)
    service: list[dict[str, float]] = []
    for r in runs:
        per_fn: dict[str, float] = {}
        for group, (read_s, _compute_s, write_s) in zip(r.groups, r.group_charges):
            share = (read_s + write_s) / group.depth
            for m in group.members:
                per_fn[m] = scenario.workflow.function(m).compute_time + share
        service.append(per_fn)
    node_free: dict[str, float] = {}
    ready = [0.0] * pipelines
    for function_id in order:
        for i in range(pipelines):
            node = runs[i].assignment[function_id]
            start = max(ready[i], node_free.get(node, 0.0))
            end = start + service[i][function_id]
            ready[i] = end
            node_free[node] = end
    makespan = max(ready)
    return ParallelResult(
        pipelines=pipelines,
        makespan=makespan,
        completions=tuple(ready),
        throughput=pipelines / makespan if makespan > 0 else math.inf,
    )
