"""Workflow DAGs: function resource profiles, dependency edges, edge SLOs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable
import heapq


@dataclass(frozen=True)
class FunctionSpec:
    """One serverless function and what it costs to host and run.

    demand is in abstract capacity units, power in watts, heat in degrees
    Celsius of excess, compute_time in seconds, output_state_size in bytes.
    fusible=False keeps the function out of every fusion group.
    """

    id: str
    demand: float = 0.0
    power: float = 0.0
    heat: float = 0.0
    compute_time: float = 0.0
    output_state_size: float = 0.0
    fusible: bool = True

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("function id must be non-empty")
        for name in ("demand", "power", "heat", "compute_time", "output_state_size"):
            if getattr(self, name) < 0:
                raise ValueError(f"{self.id}: {name} must be >= 0")


@dataclass(frozen=True)
class WorkflowEdge:
    """Dependency from one function to its successor with a handoff SLO (s)."""

    src: str
    dst: str
    slo: float

    def __post_init__(self) -> None:
        if not self.slo > 0:
            raise ValueError(f"edge {self.src}->{self.dst}: slo must be > 0")


class WorkflowDag:
    def __init__(
        self,
        functions: Iterable[FunctionSpec],
        edges: Iterable[WorkflowEdge],
        entry: str,
        terminal: str,
    ) -> None:
        self.functions: dict[str, FunctionSpec] = {}
        for spec in functions:
            if spec.id in self.functions:
                raise ValueError(f"duplicate function id {spec.id!r}")
            self.functions[spec.id] = spec
        self.edges: tuple[WorkflowEdge, ...] = tuple(edges)
        self.entry = entry
        self.terminal = terminal

    def function(self, function_id: str) -> FunctionSpec:
        try:
            return self.functions[function_id]
        except KeyError:
            raise ValueError(f"unknown function {function_id!r}") from None

    def predecessors(self, function_id: str) -> tuple[str, ...]:
        return tuple(sorted(e.src for e in self.edges if e.dst == function_id))

    def successors(self, function_id: str) -> tuple[str, ...]:
        return tuple(sorted(e.dst for e in self.edges if e.src == function_id))

    def out_edges(self, function_id: str) -> tuple[WorkflowEdge, ...]:
        return tuple(e for e in self.edges if e.src == function_id)

    def in_edges(self, function_id: str) -> tuple[WorkflowEdge, ...]:
        return tuple(e for e in self.edges if e.dst == function_id)


def validate(dag: WorkflowDag) -> list[str]:
    """All structural problems found, empty when the DAG is well formed."""
    errors: list[str] = []
    ids = set(dag.functions)
    for e in dag.edges:
        for end in (e.src, e.dst):
            if end not in ids:
                errors.append(f"edge endpoint {end!r} is not a declared function")
        if e.src == e.dst:
            errors.append(f"self-edge on {e.src!r}")
    if dag.entry not in ids:
        errors.append(f"entry {dag.entry!r} is not a declared function")
    if dag.terminal not in ids:
        errors.append(f"terminal {dag.terminal!r} is not a declared function")
    if errors:
        return errors

    indegree = {f: 0 for f in ids}
    for e in dag.edges:
        indegree[e.dst] += 1
    roots = sorted(f for f, d in indegree.items() if d == 0)
    if len(roots) > 1:
        errors.append(f"multiple entry candidates: {', '.join(roots)}")
    if indegree[dag.entry] > 0:
        errors.append(f"entry {dag.entry!r} has predecessors")
    if dag.successors(dag.terminal):
        errors.append(f"terminal {dag.terminal!r} has successors")

    # Kahn sweep doubles as the cycle check.
    remaining = dict(indegree)
    ready = [f for f, d in remaining.items() if d == 0]
    visited = 0
    while ready:
        f = ready.pop()
        visited += 1
        for succ in dag.successors(f):
            remaining[succ] -= 1
            if remaining[succ] == 0:
                ready.append(succ)
    if visited != len(ids):
        stuck = sorted(f for f, d in remaining.items() if d > 0)
        errors.append(f"cycle involving: {', '.join(stuck)}")
        return errors

    reached = {dag.entry}
    stack = [dag.entry]
    while stack:
        for succ in dag.successors(stack.pop()):
            if succ not in reached:
                reached.add(succ)
                stack.append(succ)
    for f in sorted(ids - reached):
        errors.append(f"function {f!r} is unreachable from the entry")
    return errors


def topo_order(dag: WorkflowDag) -> tuple[str, ...]:
    """Deterministic topological order (lexicographic among ready functions)."""
    problems = validate(dag)
    if problems:
        raise ValueError("; ".join(problems))
    indegree = {f: 0 for f in dag.functions}
    for e in dag.edges:
        indegree[e.dst] += 1
    ready = [f for f, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        f = heapq.heappop(ready)
        order.append(f)
        for succ in dag.successors(f):
            indegree[succ] -= 1
            if indegree[succ] == 0:
                heapq.heappush(ready, succ)
    return tuple(order)
