"""Deterministic placement and storage simulator for function workflows
running across mixed cloud, edge, and orbital infrastructure.

The package is organized around a small pipeline: build a
:class:`~databelt.topology.Topology`, prune it to the nodes and links alive
at a given epoch, walk candidate state placements along shortest paths, and
replay a workflow against a two-tier state store while recording every
storage operation. The :mod:`databelt.simengine` module ties the pieces
together; the ``databelt`` console script drives it from scenario files.
"""

from .constraints import (
    Assignment,
    ConstraintReport,
    PenaltyConfig,
    Violation,
    brute_force_optimal,
    check_placement,
    check_power,
    check_resource,
    check_slo,
    check_temperature,
    full_report,
    locality_penalty,
    objective,
)
from .fusion import (
    WORKFLOW_INPUT_ID,
    FusionGroup,
    FusionPlan,
    IsolationError,
    execute_group,
    plan_fusion,
    synthesize_output,
)
from .propagation import (
    MigrationEstimate,
    PlacementDecision,
    candidate_schedule,
    compute_placement,
    migration_time,
    offload,
    resolve_target,
)
from .simengine import (
    BatchResult,
    EdgeRecord,
    LinkSpec,
    ParallelResult,
    PlacementInfeasibleError,
    Policy,
    ResourceLedger,
    RunResult,
    Scenario,
    place_function,
    run_batch,
    run_parallel,
    run_workflow,
)
from .statestore import (
    StateKey,
    StateLostError,
    StateObject,
    StateStore,
    StorageOpLog,
    bundle_get,
    encode_key,
    merged_put,
    parse_key,
)
from .topology import (
    ALWAYS,
    AvailabilitySchedule,
    Link,
    Node,
    NodeKind,
    Path,
    PrunedGraph,
    Topology,
    available_set,
    hops,
    prune,
    shortest_path,
)
from .workflow import FunctionSpec, WorkflowDag, WorkflowEdge, topo_order, validate

__all__ = [
    "ALWAYS",
    "Assignment",
    "AvailabilitySchedule",
    "BatchResult",
    "ConstraintReport",
    "EdgeRecord",
    "FunctionSpec",
    "FusionGroup",
    "FusionPlan",
    "IsolationError",
    "Link",
    "LinkSpec",
    "MigrationEstimate",
    "Node",
    "NodeKind",
    "ParallelResult",
    "Path",
    "PenaltyConfig",
    "PlacementDecision",
    "PlacementInfeasibleError",
    "Policy",
    "PrunedGraph",
    "ResourceLedger",
    "RunResult",
    "Scenario",
    "StateKey",
    "StateLostError",
    "StateObject",
    "StateStore",
    "StorageOpLog",
    "Topology",
    "Violation",
    "WORKFLOW_INPUT_ID",
    "WorkflowDag",
    "WorkflowEdge",
    "available_set",
    "brute_force_optimal",
    "bundle_get",
    "candidate_schedule",
    "check_placement",
    "check_power",
    "check_resource",
    "check_slo",
    "check_temperature",
    "compute_placement",
    "encode_key",
    "execute_group",
    "full_report",
    "hops",
    "locality_penalty",
    "merged_put",
    "migration_time",
    "objective",
    "offload",
    "parse_key",
    "place_function",
    "plan_fusion",
    "prune",
    "resolve_target",
    "run_batch",
    "run_parallel",
    "run_workflow",
    "shortest_path",
    "synthesize_output",
    "topo_order",
    "validate",
]

__version__ = "0.1.0"
