"""State placement along shortest paths under a handoff time budget.

A completed function's output state should sit as close to the workflow's
destination as the budget allows. Candidates are walked from the destination
end of the shortest path back toward the source; the first one whose
migration time fits the budget wins, and exhausting all candidates falls
back to keeping the state where it was produced.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

from .topology import Path, PrunedGraph, shortest_path

if TYPE_CHECKING:
    from .statestore import StateObject, StateStore


def migration_time(cumulative_latency: float, state_size: float, bandwidth: float) -> float:
    """Round-trip-plus-transfer cost of moving state along a path prefix.

    cumulative_latency is the one-way path latency (s), charged twice to
    model the request/acknowledge round trip; state_size (bytes) crosses the
    path's bottleneck bandwidth (B/s) once.
    """
    if cumulative_latency < 0:
        raise ValueError("cumulative_latency must be >= 0")
    if state_size < 0:
        raise ValueError("state_size must be >= 0")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be > 0")
    return cumulative_latency + state_size / bandwidth + cumulative_latency


@dataclass(frozen=True)
class MigrationEstimate:
    candidate: str
    cumulative_latency: float
    transfer_time: float

    @property
    def total(self) -> float:
        return 2.0 * self.cumulative_latency + self.transfer_time


_LOCAL = MigrationEstimate("", 0.0, 0.0)


@dataclass(frozen=True)
class PlacementDecision:
    state_node: str
    estimate: MigrationEstimate
    fallback_used: bool
    function: str | None = None

    def for_function(self, function_id: str) -> "PlacementDecision":
        return replace(self, function=function_id)


def _local_decision(node: str, fallback: bool) -> PlacementDecision:
    return PlacementDecision(
        state_node=node,
        estimate=replace(_LOCAL, candidate=node),
        fallback_used=fallback,
    )


def compute_placement(
    graph: PrunedGraph,
    source: str,
    destination: str,
    state_size: float,
    t_max: float,
) -> PlacementDecision:
    """Pick the state node for output produced at source and bound for
    destination, spending at most t_max seconds on the migration.

    Walks the shortest path's prefixes from the destination end; the first
    candidate with migration time within budget is chosen, which makes the
    result the qualifying candidate closest to the destination. The source
    itself is only a candidate on the degenerate single-node path; when no
    candidate qualifies (or the destination is unreachable) the state stays
    at the source with fallback_used set.
    """
    if state_size < 0:
        raise ValueError("state_size must be >= 0")
    path = shortest_path(graph, source, destination)
    if path is None:
        return _local_decision(source, fallback=True)
    if path.hop_count == 0:
        return _local_decision(source, fallback=False)
    for i in range(path.hop_count, 0, -1):
        estimate = MigrationEstimate(
            candidate=path.nodes[i],
            cumulative_latency=path.cum_latency[i],
            transfer_time=state_size / path.bottleneck[i],
        )
        if estimate.total <= t_max:
            return PlacementDecision(
                state_node=estimate.candidate,
                estimate=estimate,
                fallback_used=False,
            )
    return _local_decision(source, fallback=True)


def candidate_schedule(path: Path, state_size: float) -> list[MigrationEstimate]:
    """Every candidate prefix of a path with its migration estimate, in the
    order compute_placement tries them. Exposed for inspection and tests.
    """
    if path.hop_count == 0:
        return [MigrationEstimate(path.nodes[0], 0.0, 0.0)]
    return [
        MigrationEstimate(
            candidate=path.nodes[i],
            cumulative_latency=path.cum_latency[i],
            transfer_time=state_size / path.bottleneck[i],
        )
        for i in range(path.hop_count, 0, -1)
    ]


def resolve_target(graph: PrunedGraph, executor: str, decision: PlacementDecision) -> str:
    """Where the state actually lands right now: the decided node when it is
    still up at this epoch, otherwise the executor."""
    graph.require(executor)
    if decision.fallback_used:
        return executor
    return decision.state_node if decision.state_node in graph else executor


def offload(
    store: "StateStore",
    graph: PrunedGraph,
    executor: str,
    decision: PlacementDecision,
    state: "StateObject",
) -> str:
    """Record the state at the decided node (or the executor when the
    decision's node dropped out), charging the transfer to the store's
    latency ledger. Returns the node that received the state.
    """
    target = resolve_target(graph, executor, decision)
    store.put(state, node=target, origin=executor, graph=graph)
    return target
