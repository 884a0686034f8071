"""Feasibility checks and the penalized objective for whole-workflow placements.

An Assignment maps every workflow function to a node at one epoch. The
check_* functions each police one resource or structural rule and report
violations with both sides of the comparison; the objective sums per-edge
path latency plus a locality penalty; brute_force_optimal enumerates every
assignment over the available node set and returns the feasible minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .topology import PrunedGraph, Topology, available_set, hops, prune, shortest_path
from .workflow import WorkflowDag


@dataclass(frozen=True)
class Assignment:
    """function id -> node id, evaluated against the topology at `epoch`."""

    mapping: dict[str, str]
    epoch: int = 0

    def node_of(self, function_id: str) -> str | None:
        return self.mapping.get(function_id)


@dataclass(frozen=True)
class PenaltyConfig:
    """kappa is the per-hop locality penalty in seconds.

    enforce_locality is off by default: the locality budget is reported as
    an indicator, and only filters assignments when explicitly enabled.
    """

    kappa: float = 0.0
    enforce_locality: bool = False

    def __post_init__(self) -> None:
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")


@dataclass(frozen=True)
class Violation:
    constraint: str
    subject: str
    limit: float
    actual: float

    @property
    def excess(self) -> float:
        return self.actual - self.limit

    def __str__(self) -> str:
        return (
            f"{self.constraint}[{self.subject}]: "
            f"actual {self.actual:g} exceeds limit {self.limit:g}"
        )


@dataclass(frozen=True)
class ConstraintReport:
    violations: tuple[Violation, ...]
    locality_lhs: float | None = None
    locality_rhs: float | None = None

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def locality_satisfied(self) -> bool | None:
        if self.locality_lhs is None or self.locality_rhs is None:
            return None
        return self.locality_lhs <= self.locality_rhs


def _per_node_sums(
    assignment: Assignment, workflow: WorkflowDag, attr: str
) -> dict[str, float]:
    sums: dict[str, float] = {}
    for function_id, node_id in assignment.mapping.items():
        spec = workflow.function(function_id)
        sums[node_id] = sums.get(node_id, 0.0) + getattr(spec, attr)
    return sums


def check_resource(
    assignment: Assignment, topology: Topology, workflow: WorkflowDag
) -> list[Violation]:
    """Sum of hosted demands must fit each node's capacity."""
    out = []
    for node_id, total in sorted(_per_node_sums(assignment, workflow, "demand").items()):
        limit = topology.node(node_id).capacity
        if total > limit:
            out.append(Violation("resource", node_id, limit, total))
    return out


def check_temperature(
    assignment: Assignment, topology: Topology, workflow: WorkflowDag
) -> list[Violation]:
    """Orbital baseline plus hosted excess heat must stay under temp_max."""
    out = []
    for node_id, excess in sorted(_per_node_sums(assignment, workflow, "heat").items()):
        node = topology.node(node_id)
        actual = node.temp_orbital + excess
        if actual > node.temp_max:
            out.append(Violation("temperature", node_id, node.temp_max, actual))
    return out


def check_power(
    assignment: Assignment, topology: Topology, workflow: WorkflowDag
) -> list[Violation]:
    """Sum of hosted power draws must fit each node's available power."""
    out = []
    for node_id, total in sorted(_per_node_sums(assignment, workflow, "power").items()):
        limit = topology.node(node_id).power_available
        if total > limit:
            out.append(Violation("power", node_id, limit, total))
    return out


def check_slo(
    assignment: Assignment,
    topology: Topology,
    workflow: WorkflowDag,
    graph: PrunedGraph | None = None,
) -> list[Violation]:
    """Per-edge shortest-path latency between assigned nodes must meet the
    edge SLO; an unreachable pair counts as a violation. Edges with an
    unassigned endpoint are the placement check's problem, not this one's.
    """
    graph = graph if graph is not None else prune(topology, assignment.epoch)
    out = []
    for edge in workflow.edges:
        src_node = assignment.node_of(edge.src)
        dst_node = assignment.node_of(edge.dst)
        if src_node is None or dst_node is None:
            continue
        if src_node not in graph or dst_node not in graph:
            out.append(Violation("slo", f"{edge.src}->{edge.dst}", edge.slo, math.inf))
            continue
        path = shortest_path(graph, src_node, dst_node)
        if path is None:
            out.append(Violation("slo", f"{edge.src}->{edge.dst}", edge.slo, math.inf))
        elif path.total_latency > edge.slo:
            out.append(
                Violation("slo", f"{edge.src}->{edge.dst}", edge.slo, path.total_latency)
            )
    return out


def check_placement(
    assignment: Assignment, topology: Topology, workflow: WorkflowDag
) -> list[Violation]:
    """Every function sits on exactly one node drawn from the available set."""
    alive = available_set(topology, assignment.epoch)
    out = []
    for function_id in sorted(workflow.functions):
        node_id = assignment.node_of(function_id)
        if node_id is None:
            out.append(Violation("placement", function_id, 1.0, 0.0))
        elif node_id not in alive:
            out.append(Violation("placement", f"{function_id}@{node_id}", 1.0, 0.0))
    for function_id in sorted(set(assignment.mapping) - set(workflow.functions)):
        out.append(Violation("placement", f"{function_id} (undeclared)", 0.0, 1.0))
    return out


def locality_penalty(
    graph: PrunedGraph, src_node: str, dst_node: str, config: PenaltyConfig
) -> float:
    """kappa times the hop distance; zero when both ends are the same node."""
    if src_node == dst_node:
        graph.require(src_node)
        return 0.0
    distance = hops(graph, src_node, dst_node)
    if distance is None:
        raise ValueError(f"no route between {src_node!r} and {dst_node!r}")
    return config.kappa * distance


def locality_indicator(
    assignment: Assignment,
    topology: Topology,
    workflow: WorkflowDag,
    config: PenaltyConfig,
    graph: PrunedGraph | None = None,
) -> tuple[float, float]:
    """Both sides of the locality budget: summed per-edge penalties on the
    left, the count of co-located edges on the right."""
    graph = graph if graph is not None else prune(topology, assignment.epoch)
    lhs = 0.0
    rhs = 0.0
    for edge in workflow.edges:
        src_node = assignment.mapping[edge.src]
        dst_node = assignment.mapping[edge.dst]
        lhs += locality_penalty(graph, src_node, dst_node, config)
        if src_node == dst_node:
            rhs += 1.0
    return lhs, rhs


def full_report(
    assignment: Assignment,
    topology: Topology,
    workflow: WorkflowDag,
    config: PenaltyConfig | None = None,
    graph: PrunedGraph | None = None,
) -> ConstraintReport:
    config = config or PenaltyConfig()
    graph = graph if graph is not None else prune(topology, assignment.epoch)
    violations: list[Violation] = []
    violations += check_placement(assignment, topology, workflow)
    violations += check_resource(assignment, topology, workflow)
    violations += check_temperature(assignment, topology, workflow)
    violations += check_power(assignment, topology, workflow)
    violations += check_slo(assignment, topology, workflow, graph)
    lhs = rhs = None
    if not violations:
        try:
            lhs, rhs = locality_indicator(assignment, topology, workflow, config, graph)
        except ValueError:
            lhs = rhs = None
        if config.enforce_locality and lhs is not None and lhs > rhs:
            violations.append(Violation("locality", "workflow", rhs, lhs))
    return ConstraintReport(tuple(violations), lhs, rhs)


def objective(
    assignment: Assignment,
    topology: Topology,
    workflow: WorkflowDag,
    config: PenaltyConfig | None = None,
    graph: PrunedGraph | None = None,
) -> float:
    """Summed per-edge cost: shortest-path latency plus locality penalty."""
    config = config or PenaltyConfig()
    graph = graph if graph is not None else prune(topology, assignment.epoch)
    total = 0.0
    for edge in workflow.edges:
        src_node = assignment.mapping[edge.src]
        dst_node = assignment.mapping[edge.dst]
        path = shortest_path(graph, src_node, dst_node)
        if path is None:
            raise ValueError(
                f"edge {edge.src}->{edge.dst}: no route between "
                f"{src_node!r} and {dst_node!r}"
            )
        total += path.total_latency + locality_penalty(graph, src_node, dst_node, config)
    return total


ENUMERATION_GUARD = 10**6


def brute_force_optimal(
    topology: Topology,
    workflow: WorkflowDag,
    t: int = 0,
    config: PenaltyConfig | None = None,
) -> tuple[Assignment, float] | None:
    """Exhaustive reference optimizer over the available node set.

    Enumerates assignments in lexicographic (function id, node id) order and
    keeps the first feasible minimum, so ties resolve deterministically to
    the lexicographically smallest assignment. Returns None when nothing is
    feasible. Refuses search spaces beyond ENUMERATION_GUARD assignments.
    """
    config = config or PenaltyConfig()
    graph = prune(topology, t)
    function_ids = sorted(workflow.functions)
    node_ids = sorted(graph.nodes)
    if not function_ids:
        raise ValueError("workflow has no functions")
    space = len(node_ids) ** len(function_ids)
    if space > ENUMERATION_GUARD:
        raise ValueError(
            f"search space {len(node_ids)}^{len(function_ids)} = {space} "
            f"exceeds the enumeration guard ({ENUMERATION_GUARD})"
        )
    best: tuple[Assignment, float] | None = None
    counters = [0] * len(function_ids)
    while True:
        mapping = {f: node_ids[counters[i]] for i, f in enumerate(function_ids)}
        assignment = Assignment(mapping, epoch=t)
        report = full_report(assignment, topology, workflow, config, graph)
        if report.feasible:
            try:
                value = objective(assignment, topology, workflow, config, graph)
            except ValueError:
                value = None
            if value is not None and (best is None or value < best[1]):
                best = (assignment, value)
        # odometer increment over node choices, most significant digit first
        i = len(counters) - 1
        while i >= 0:
            counters[i] += 1
            if counters[i] < len(node_ids):
                break
            counters[i] = 0
            i -= 1
        if i < 0:
            return best
