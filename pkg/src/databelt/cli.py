"""Console entry point: load a scenario file, run policies, emit metrics.

Scenario files use operator-facing units (ms, MB, Mbps); everything is
converted to seconds, bytes, and bytes/second on ingestion. Output is CSV
(or JSON) with one row per run plus a "mean" summary row per policy, and is
byte-identical for identical inputs regardless of worker count.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import random
import statistics
import sys
import time
from pathlib import Path

from .propagation import compute_placement
from .simengine import (
    BatchResult,
    LinkSpec,
    PlacementInfeasibleError,
    Policy,
    Scenario,
    run_batch,
)
from .statestore import StateLostError
from .topology import (
    ALWAYS,
    AvailabilitySchedule,
    Link,
    Node,
    NodeKind,
    Topology,
    prune,
)
from .workflow import FunctionSpec, WorkflowDag, WorkflowEdge
from .constraints import PenaltyConfig

log = logging.getLogger("databelt.cli")

MS = 1e-3
MB = 1_000_000  # bytes
MBPS = 1.25e5  # bytes/second

CSV_COLUMNS = (
    "scenario",
    "policy",
    "seed",
    "run",
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

# argparse itself exits 2 on malformed flags, which matches EXIT_USAGE.
EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

SCALE_NODE_LIMIT = 250_000


class ScenarioError(ValueError):
    """A scenario file that cannot be turned into a runnable Scenario."""


# ---------------------------------------------------------------- loading


def _obj(value: object, where: str) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(f"{where}: expected an object")
    return value


def _check_keys(obj: dict, where: str, allowed: set[str]) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown field(s) {', '.join(unknown)}")


def _string(obj: dict, key: str, where: str) -> str:
    try:
        value = obj[key]
    except KeyError:
        raise ScenarioError(f"{where}: missing required field {key!r}") from None
    if not isinstance(value, str) or not value:
        raise ScenarioError(f"{where}.{key}: expected a non-empty string")
    return value


def _number(value: object, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number")
    return float(value)


def _num_field(
    obj: dict,
    key: str,
    where: str,
    default: float | None = None,
    minimum: float | None = None,
    positive: bool = False,
) -> float:
    if key not in obj:
        if default is None:
            raise ScenarioError(f"{where}: missing required field {key!r}")
        return default
    value = _number(obj[key], f"{where}.{key}")
    if positive and not value > 0:
        raise ScenarioError(f"{where}.{key}: must be > 0")
    if minimum is not None and value < minimum:
        raise ScenarioError(f"{where}.{key}: must be >= {minimum}")
    return value


def _int_field(obj: dict, key: str, where: str, default: int, minimum: int) -> int:
    if key not in obj:
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}.{key}: expected an integer")
    if value < minimum:
        raise ScenarioError(f"{where}.{key}: must be >= {minimum}")
    return value


def _bool_field(obj: dict, key: str, where: str, default: bool) -> bool:
    if key not in obj:
        return default
    value = obj[key]
    if not isinstance(value, bool):
        raise ScenarioError(f"{where}.{key}: expected true or false")
    return value


def _parse_availability(value: object, where: str) -> AvailabilitySchedule:
    if value is None or value == "always":
        return ALWAYS
    if not isinstance(value, list):
        raise ScenarioError(f"{where}: expected \"always\" or a list of [start, end]")
    spans: list[tuple[int, int | None]] = []
    for i, span in enumerate(value):
        if not isinstance(span, list) or len(span) != 2:
            raise ScenarioError(f"{where}[{i}]: expected [start, end]")
        start, end = span
        if isinstance(start, bool) or not isinstance(start, int):
            raise ScenarioError(f"{where}[{i}]: start must be an integer epoch")
        if end is not None and (isinstance(end, bool) or not isinstance(end, int)):
            raise ScenarioError(f"{where}[{i}]: end must be an integer epoch or null")
        spans.append((start, end))
    try:
        return AvailabilitySchedule(tuple(spans))
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _parse_node(obj: object, where: str) -> Node:
    obj = _obj(obj, where)
    _check_keys(
        obj,
        where,
        {"id", "kind", "capacity", "power_w", "temp_orbital_c", "temp_max_c", "availability"},
    )
    node_id = _string(obj, "id", where)
    try:
        kind = NodeKind.parse(_string(obj, "kind", where))
    except ValueError as exc:
        raise ScenarioError(f"{where}.kind: {exc}") from None
    try:
        return Node(
            node_id,
            kind,
            capacity=_num_field(obj, "capacity", where, default=math.inf, minimum=0.0),
            power_available=_num_field(obj, "power_w", where, default=math.inf, minimum=0.0),
            temp_orbital=_num_field(obj, "temp_orbital_c", where, default=0.0),
            temp_max=_num_field(obj, "temp_max_c", where, default=math.inf),
            schedule=_parse_availability(obj.get("availability"), f"{where}.availability"),
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _parse_link(obj: object, where: str) -> LinkSpec:
    obj = _obj(obj, where)
    _check_keys(obj, where, {"src", "dst", "latency_ms", "bandwidth_mbps"})
    src = _string(obj, "src", where)
    dst = _string(obj, "dst", where)
    if "latency_ms" not in obj:
        raise ScenarioError(f"{where}: missing required field 'latency_ms'")
    raw = obj["latency_ms"]
    if isinstance(raw, list):
        if len(raw) != 2:
            raise ScenarioError(f"{where}.latency_ms: expected [lo, hi]")
        lo = _number(raw[0], f"{where}.latency_ms[0]")
        hi = _number(raw[1], f"{where}.latency_ms[1]")
    else:
        lo = hi = _number(raw, f"{where}.latency_ms")
    bandwidth = _num_field(obj, "bandwidth_mbps", where, positive=True)
    try:
        return LinkSpec(src, dst, lo * MS, hi * MS, bandwidth * MBPS)
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _parse_function(obj: object, where: str, input_size: int) -> tuple[FunctionSpec, bool]:
    obj = _obj(obj, where)
    _check_keys(
        obj,
        where,
        {"id", "demand", "power_w", "heat_c", "compute_s", "output_mb", "fusible"},
    )
    fn_id = _string(obj, "id", where)
    raw_out = obj.get("output_mb", 0)
    auto_sized = raw_out == "input"
    if auto_sized:
        output = float(input_size)
    else:
        output = _number(raw_out, f"{where}.output_mb") * MB
        if output < 0:
            raise ScenarioError(f"{where}.output_mb: must be >= 0")
    try:
        spec = FunctionSpec(
            fn_id,
            demand=_num_field(obj, "demand", where, default=0.0, minimum=0.0),
            power=_num_field(obj, "power_w", where, default=0.0, minimum=0.0),
            heat=_num_field(obj, "heat_c", where, default=0.0, minimum=0.0),
            compute_time=_num_field(obj, "compute_s", where, default=0.0, minimum=0.0),
            output_state_size=output,
            fusible=_bool_field(obj, "fusible", where, default=True),
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None
    return spec, auto_sized


def _parse_workflow(
    obj: object, where: str, input_size: int
) -> tuple[WorkflowDag, frozenset[str]]:
    obj = _obj(obj, where)
    _check_keys(obj, where, {"functions", "edges", "entry", "terminal"})
    raw_functions = obj.get("functions")
    if not isinstance(raw_functions, list) or not raw_functions:
        raise ScenarioError(f"{where}.functions: expected a non-empty list")
    functions: list[FunctionSpec] = []
    auto_sized: set[str] = set()
    for i, raw in enumerate(raw_functions):
        spec, auto = _parse_function(raw, f"{where}.functions[{i}]", input_size)
        functions.append(spec)
        if auto:
            auto_sized.add(spec.id)
    raw_edges = obj.get("edges", [])
    if not isinstance(raw_edges, list):
        raise ScenarioError(f"{where}.edges: expected a list")
    edges: list[WorkflowEdge] = []
    for i, raw in enumerate(raw_edges):
        e = _obj(raw, f"{where}.edges[{i}]")
        _check_keys(e, f"{where}.edges[{i}]", {"src", "dst", "slo_ms"})
        slo = _num_field(e, "slo_ms", f"{where}.edges[{i}]", positive=True)
        try:
            edges.append(
                WorkflowEdge(
                    _string(e, "src", f"{where}.edges[{i}]"),
                    _string(e, "dst", f"{where}.edges[{i}]"),
                    slo * MS,
                )
            )
        except ValueError as exc:
            raise ScenarioError(f"{where}.edges[{i}]: {exc}") from None

    ids = {f.id for f in functions}
    with_preds = {e.dst for e in edges}
    with_succs = {e.src for e in edges}
    entry = obj.get("entry")
    if entry is None:
        roots = sorted(ids - with_preds)
        if len(roots) != 1:
            raise ScenarioError(
                f"{where}: cannot infer entry (candidates: {', '.join(roots) or 'none'});"
                " set 'entry' explicitly"
            )
        entry = roots[0]
    terminal = obj.get("terminal")
    if terminal is None:
        leaves = sorted(ids - with_succs)
        if len(leaves) != 1:
            raise ScenarioError(
                f"{where}: cannot infer terminal (candidates: {', '.join(leaves) or 'none'});"
                " set 'terminal' explicitly"
            )
        terminal = leaves[0]
    try:
        dag = WorkflowDag(functions, edges, entry, terminal)
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None
    return dag, frozenset(auto_sized)


TOP_LEVEL_KEYS = {
    "name",
    "seed",
    "repetitions",
    "input_size_mb",
    "ingress",
    "destination",
    "global_node",
    "required_types",
    "fusion_max_depth",
    "epochs_per_stage",
    "op_overhead_ms",
    "penalty_kappa_ms_per_hop",
    "replicate_to_global",
    "materialize_payloads",
    "nodes",
    "links",
    "workflow",
}


def load_scenario(path: str | Path) -> Scenario:
    """Parse a scenario JSON file, converting ms/MB/Mbps to s/bytes/B/s."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {p}: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: invalid JSON: {exc}") from None
    obj = _obj(raw, str(p))
    where = p.name
    _check_keys(obj, where, TOP_LEVEL_KEYS)

    input_mb = _num_field(obj, "input_size_mb", where, minimum=0.0)
    input_size = int(round(input_mb * MB))

    raw_nodes = obj.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise ScenarioError(f"{where}.nodes: expected a non-empty list")
    nodes = tuple(_parse_node(n, f"{where}.nodes[{i}]") for i, n in enumerate(raw_nodes))

    raw_links = obj.get("links", [])
    if not isinstance(raw_links, list):
        raise ScenarioError(f"{where}.links: expected a list")
    links = tuple(_parse_link(l, f"{where}.links[{i}]") for i, l in enumerate(raw_links))

    if "workflow" not in obj:
        raise ScenarioError(f"{where}: missing required field 'workflow'")
    workflow, auto_sized = _parse_workflow(obj["workflow"], f"{where}.workflow", input_size)

    raw_types = obj.get("required_types", [])
    if not isinstance(raw_types, list):
        raise ScenarioError(f"{where}.required_types: expected a list of kinds")
    required: list[NodeKind] = []
    for i, kind in enumerate(raw_types):
        if not isinstance(kind, str):
            raise ScenarioError(f"{where}.required_types[{i}]: expected a string")
        try:
            required.append(NodeKind.parse(kind))
        except ValueError as exc:
            raise ScenarioError(f"{where}.required_types[{i}]: {exc}") from None

    kappa_ms = _num_field(obj, "penalty_kappa_ms_per_hop", where, default=0.0, minimum=0.0)
    try:
        return Scenario(
            name=obj.get("name") or p.stem,
            nodes=nodes,
            links=links,
            workflow=workflow,
            destination=_string(obj, "destination", where),
            ingress=_string(obj, "ingress", where),
            global_node=_string(obj, "global_node", where),
            input_size=input_size,
            required_types=frozenset(required),
            auto_sized=auto_sized,
            fusion_max_depth=_int_field(obj, "fusion_max_depth", where, default=1, minimum=1),
            epochs_per_stage=_int_field(obj, "epochs_per_stage", where, default=1, minimum=1),
            penalty=PenaltyConfig(kappa=kappa_ms * MS),
            op_overhead=_num_field(obj, "op_overhead_ms", where, default=5.0, minimum=0.0) * MS,
            replicate_to_global=_bool_field(obj, "replicate_to_global", where, default=True),
            materialize_payloads=_bool_field(obj, "materialize_payloads", where, default=False),
            seed=_int_field(obj, "seed", where, default=0, minimum=0),
            repetitions=_int_field(obj, "repetitions", where, default=1, minimum=1),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _unit(value: float) -> int | float:
    """Operator-unit number rounded to 9 significant digits, int when whole."""
    rounded = float(f"{value:.9g}")
    if rounded.is_integer() and abs(rounded) < 1e15:
        return int(rounded)
    return rounded


def _dump_node(node: Node) -> dict[str, object]:
    doc: dict[str, object] = {"id": node.id, "kind": node.kind.value}
    if math.isfinite(node.capacity):
        doc["capacity"] = _unit(node.capacity)
    if math.isfinite(node.power_available):
        doc["power_w"] = _unit(node.power_available)
    if node.temp_orbital != 0.0:
        doc["temp_orbital_c"] = _unit(node.temp_orbital)
    if math.isfinite(node.temp_max):
        doc["temp_max_c"] = _unit(node.temp_max)
    if not node.schedule.is_always:
        doc["availability"] = [list(span) for span in node.schedule.intervals]
    return doc


def _dump_link(link: LinkSpec) -> dict[str, object]:
    latency: object
    if link.lat_lo == link.lat_hi:
        latency = _unit(link.lat_lo / MS)
    else:
        latency = [_unit(link.lat_lo / MS), _unit(link.lat_hi / MS)]
    return {
        "src": link.src,
        "dst": link.dst,
        "latency_ms": latency,
        "bandwidth_mbps": _unit(link.bandwidth / MBPS),
    }


def _dump_function(spec: FunctionSpec, auto_sized: bool) -> dict[str, object]:
    doc: dict[str, object] = {"id": spec.id}
    if spec.demand:
        doc["demand"] = _unit(spec.demand)
    if spec.power:
        doc["power_w"] = _unit(spec.power)
    if spec.heat:
        doc["heat_c"] = _unit(spec.heat)
    if spec.compute_time:
        doc["compute_s"] = _unit(spec.compute_time)
    if auto_sized:
        doc["output_mb"] = "input"
    elif spec.output_state_size:
        doc["output_mb"] = _unit(spec.output_state_size / MB)
    if not spec.fusible:
        doc["fusible"] = False
    return doc


def dump_scenario(scenario: Scenario) -> str:
    """Canonical JSON text for a scenario, the inverse of load_scenario.

    Fields at their defaults are omitted and numbers are rounded to 9
    significant digits in operator units, so dumping a reloaded dump
    reproduces the text byte for byte. Declaration order of nodes, links,
    functions, and edges is preserved; only object keys are sorted.
    """
    doc: dict[str, object] = {
        "name": scenario.name,
        "seed": scenario.seed,
        "repetitions": scenario.repetitions,
        "input_size_mb": _unit(scenario.input_size / MB),
        "ingress": scenario.ingress,
        "destination": scenario.destination,
        "global_node": scenario.global_node,
        "nodes": [_dump_node(n) for n in scenario.nodes],
        "links": [_dump_link(l) for l in scenario.links],
    }
    if scenario.required_types:
        doc["required_types"] = sorted(k.value for k in scenario.required_types)
    if scenario.fusion_max_depth != 1:
        doc["fusion_max_depth"] = scenario.fusion_max_depth
    if scenario.epochs_per_stage != 1:
        doc["epochs_per_stage"] = scenario.epochs_per_stage
    if scenario.op_overhead != 5.0 * MS:
        doc["op_overhead_ms"] = _unit(scenario.op_overhead / MS)
    if scenario.penalty.kappa:
        doc["penalty_kappa_ms_per_hop"] = _unit(scenario.penalty.kappa / MS)
    if not scenario.replicate_to_global:
        doc["replicate_to_global"] = False
    if scenario.materialize_payloads:
        doc["materialize_payloads"] = True
    workflow = scenario.workflow
    doc["workflow"] = {
        "entry": workflow.entry,
        "terminal": workflow.terminal,
        "functions": [
            _dump_function(spec, spec.id in scenario.auto_sized)
            for spec in workflow.functions.values()
        ],
        "edges": [
            {"src": e.src, "dst": e.dst, "slo_ms": _unit(e.slo / MS)}
            for e in workflow.edges
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- output


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _summary_row(batch: BatchResult) -> dict[str, object]:
    row: dict[str, object] = {
        "scenario": batch.scenario,
        "policy": batch.policy,
        "seed": batch.base_seed,
        "run": "mean",
    }
    row.update(batch.mean)
    return row


def render_csv(batches: list[BatchResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for batch in batches:
        for run in batch.runs:
            writer.writerow({k: _fmt(v) for k, v in run.metrics_row().items()})
        writer.writerow({k: _fmt(v) for k, v in _summary_row(batch).items()})
    return buf.getvalue()


def render_json(batches: list[BatchResult]) -> str:
    def clean(mapping: dict[str, object]) -> dict[str, object]:
        return {
            k: float(f"{v:.9g}") if isinstance(v, float) else v
            for k, v in mapping.items()
        }

    payload = {
        "results": [
            {
                "scenario": b.scenario,
                "policy": b.policy,
                "base_seed": b.base_seed,
                "runs": [clean(r.metrics_row()) for r in b.runs],
                "mean": clean(dict(b.mean)),
                "stddev": clean(dict(b.stddev)),
            }
            for b in batches
        ]
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8", newline="")


# ---------------------------------------------------------------- commands


def _parse_policies(text: str) -> list[Policy]:
    names = [part for part in (p.strip() for p in text.split(",")) if part]
    if not names:
        raise ValueError("no policy given")
    policies = [Policy.parse(name) for name in names]
    if len(set(policies)) != len(policies):
        raise ValueError("duplicate policy in --policy")
    return policies


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
        policies = _parse_policies(args.policy)
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    log.debug(
        "scenario %s: %d nodes, %d links, %d functions",
        scenario.name,
        len(scenario.nodes),
        len(scenario.links),
        len(scenario.workflow.functions),
    )
    try:
        batches = [
            run_batch(
                scenario,
                policy,
                repetitions=args.reps,
                base_seed=args.seed,
                fusion_max_depth=args.fusion_depth,
                jobs=args.jobs,
            )
            for policy in policies
        ]
    except (PlacementInfeasibleError, StateLostError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:  # bad --reps / --jobs / --fusion-depth values
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render_json(batches) if args.format == "json" else render_csv(batches)
    _write_output(text, args.out)
    return EXIT_OK


def build_scale_topology(n: int, seed: int) -> Topology:
    """Torus of satellites: rows x columns with wraparound, degree <= 4.
    Row count is the largest divisor of n not above sqrt(n), so the graph
    degenerates to a plain ring when n is prime."""
    rows = 1
    for d in range(int(math.isqrt(n)), 0, -1):
        if n % d == 0:
            rows = d
            break
    cols = n // rows
    rng = random.Random(seed)
    nodes = [Node(f"n-{i:06d}", NodeKind.SATELLITE) for i in range(n)]
    seen: set[tuple[str, str]] = set()
    links: list[Link] = []

    def add(a: int, b: int) -> None:
        if a == b:
            return
        key = (f"n-{a:06d}", f"n-{b:06d}") if a < b else (f"n-{b:06d}", f"n-{a:06d}")
        if key in seen:
            return
        seen.add(key)
        links.append(Link(key[0], key[1], rng.uniform(0.001, 0.020), 10_000 * MBPS))

    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            add(i, r * cols + (c + 1) % cols)
            add(i, ((r + 1) % rows) * cols + c)
    return Topology(nodes, links)


def _parse_counts(text: str) -> list[int]:
    counts: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            counts.append(int(part))
        except ValueError:
            raise ValueError(f"bad node count {part!r}") from None
    if not counts:
        raise ValueError("no node counts given")
    return counts


def scale_row(count: int, trials: int, seed: int, state_size: int, budget: float) -> str:
    """Synthesize one torus, time `trials` placement walks, format one row."""
    t0 = time.perf_counter()
    topology = build_scale_topology(count, seed)
    t1 = time.perf_counter()
    graph = prune(topology, 0)
    t2 = time.perf_counter()
    rng = random.Random(seed + 1)
    ids = sorted(graph.nodes)
    durations: list[float] = []
    for _ in range(trials):
        src = ids[rng.randrange(len(ids))]
        dst = ids[rng.randrange(len(ids))]
        start = time.perf_counter()
        compute_placement(graph, src, dst, state_size, budget)
        durations.append(time.perf_counter() - start)
    durations.sort()
    mean_s = statistics.fmean(durations)
    p99_s = durations[max(0, math.ceil(0.99 * len(durations)) - 1)]
    return (
        f"nodes={len(graph)} links={len(topology.links)}"
        f" build_s={t1 - t0:.3f} prune_s={t2 - t1:.3f}"
        f" placements={trials}"
        f" mean_ms={mean_s * 1e3:.3f} p99_ms={p99_s * 1e3:.3f}"
    )


def cmd_scale(args: argparse.Namespace) -> int:
    try:
        counts = _parse_counts(args.nodes)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for count in counts:
        if count < 2:
            print("error: node counts must be >= 2", file=sys.stderr)
            return EXIT_USAGE
        if count > SCALE_NODE_LIMIT:
            print(
                f"error: {count} nodes exceeds the {SCALE_NODE_LIMIT} node limit",
                file=sys.stderr,
            )
            return EXIT_USAGE
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    size = int(args.state_mb * MB)
    budget = args.budget_ms * MS
    for count in counts:
        print(scale_row(count, args.trials, args.seed, size, budget))
    return EXIT_OK


# ---------------------------------------------------------------- entry


def _configure_logging(verbose: bool) -> None:
    level = logging.WARNING
    env = os.environ.get("DATABELT_LOG", "")
    if env:
        candidate = logging.getLevelName(env.upper())
        if isinstance(candidate, int):
            level = candidate
        else:
            print(f"warning: ignoring invalid DATABELT_LOG={env!r}", file=sys.stderr)
    if verbose:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="databelt",
        description="Placement and storage simulator for workflows on dynamic topologies.",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="debug logging to stderr"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and emit per-run metrics")
    run_p.add_argument("--scenario", required=True, help="scenario JSON file")
    run_p.add_argument(
        "--policy",
        default="databelt,random,stateless",
        help="comma-separated policies to run (default: all three)",
    )
    run_p.add_argument("--reps", type=int, default=None, help="override repetitions")
    run_p.add_argument("--seed", type=int, default=None, help="override base seed")
    run_p.add_argument(
        "--fusion-depth", type=int, default=None, help="override max fusion depth"
    )
    run_p.add_argument(
        "--jobs", type=int, default=1, help="worker threads (output is identical)"
    )
    run_p.add_argument("--out", default=None, help="output file (default: stdout)")
    run_p.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="output format"
    )
    run_p.set_defaults(func=cmd_run)

    scale_p = sub.add_parser(
        "scale", help="time the placement walk on synthetic torus topologies"
    )
    scale_p.add_argument(
        "--nodes",
        default="10,100,1000,10000",
        help="comma-separated node counts, one timing row each",
    )
    scale_p.add_argument("--trials", type=int, default=100, help="placements to time")
    scale_p.add_argument("--seed", type=int, default=0, help="synthesis seed")
    scale_p.add_argument(
        "--state-mb", type=float, default=10.0, help="state size to migrate (MB)"
    )
    scale_p.add_argument(
        "--budget-ms", type=float, default=120.0, help="handoff budget (ms)"
    )
    scale_p.set_defaults(func=cmd_scale)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
