"""
Scenario document parsing and validation.

Validation collects every problem instead of stopping at the first one. Each
diagnostic names the offending path (``sensors[2].target``) and, when the
document text is available, its line and column.
"""

import copy
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import yaml
from pydantic import ValidationError

from src.core.errors import ScenarioInvalid, SimulationError
from src.network.catalog import DEFAULTS, DefaultsTable
from src.network.connections import in_range
from src.scenario.datasets import check_waypoints, load_dataset, load_trajectory, Waypoint
from src.scenario.models import ScenarioSpec
from src.scenario.topology import ForwardingGraph

logger = logging.getLogger(__name__)

PathItem = Union[str, int]

TOPOLOGY_KEYS = ("sensors", "links", "gateways", "edges", "fogs", "datacenters")


@dataclass(frozen=True)
class Diagnostic:
    path: str
    message: str
    line: Optional[int] = None
    column: Optional[int] = None

    def __str__(self) -> str:
        where = f":{self.line}:{self.column}" if self.line is not None else ""
        return f"{self.path}{where}: {self.message}"


def format_path(path: Sequence[PathItem]) -> str:
    out = "$"
    for item in path:
        out += f"[{item}]" if isinstance(item, int) else f".{item}"
    return out


def _clean_loc(loc: Sequence[Any]) -> List[PathItem]:
    # Drop pydantic's union-branch and validator tags
    return [item for item in loc if isinstance(item, int) or not (item[:1].isupper() or "[" in item or "-" in item)]


def _locate(root: Optional[yaml.Node], path: Sequence[PathItem]) -> Tuple[Optional[int], Optional[int]]:
    if root is None:
        return None, None
    node = root
    for key in path:
        if isinstance(node, yaml.MappingNode):
            match = next((v for k, v in node.value if k.value == str(key)), None)
            if match is None:
                break
            node = match
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            break
    return node.start_mark.line + 1, node.start_mark.column + 1


class _Collector:
    def __init__(self, root: Optional[yaml.Node]):
        self.root = root
        self.diagnostics: List[Diagnostic] = []

    def add(self, path: Sequence[PathItem], message: str) -> None:
        line, column = _locate(self.root, path)
        self.diagnostics.append(Diagnostic(format_path(path), message, line, column))


# Semantic checks


def _resolve(path_text: str, base_dir: Optional[Path]) -> str:
    path = Path(path_text).expanduser()
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    return str(path.resolve())


def effective_defaults(spec: ScenarioSpec) -> DefaultsTable:
    d = spec.defaults
    connections = {kind.value: o.model_dump(exclude_none=True) for kind, o in d.connections.items()}
    scalars = d.model_dump(exclude={"connections"}, exclude_none=True)
    return DEFAULTS.with_overrides(connections=connections, **scalars)


def _check_ids(spec: ScenarioSpec, out: _Collector) -> Dict[str, Tuple[str, ...]]:
    """Map of every entity id to the path of its declaration, reporting duplicates."""
    seen: Dict[str, Tuple] = {}

    def claim(entity_id: str, path: Tuple) -> None:
        if entity_id in seen:
            out.add(path + ("id",), f"duplicate id {entity_id!r} (first declared at {format_path(seen[entity_id])})")
        else:
            seen[entity_id] = path

    for i, sensor in enumerate(spec.sensors):
        for node_id in sensor.expanded_ids():
            claim(node_id, ("sensors", i))
    for group in ("links", "gateways", "edges", "fogs", "datacenters", "actuators"):
        for i, decl in enumerate(getattr(spec, group)):
            claim(decl.id, (group, i))
    for i, dc in enumerate(spec.datacenters):
        claim(f"{dc.id}.broker", ("datacenters", i))
        for sub in ("hosts", "vms"):
            ids = Counter(x for decl in getattr(dc, sub) for x in decl.expanded_ids())
            for j, decl in enumerate(getattr(dc, sub)):
                if any(ids[x] > 1 for x in decl.expanded_ids()):
                    out.add(("datacenters", i, sub, j, "id"), f"duplicate {sub[:-1]} id {decl.id!r} in {dc.id}")
    return seen


def _check_targets(spec: ScenarioSpec, ids: Dict[str, Tuple], out: _Collector) -> None:
    datacenters = {dc.id for dc in spec.datacenters}
    iot = {node_id for node_id, _ in spec.iot_nodes()}
    known = iot | datacenters
    required = (("sensors", "target"), ("links", "target"), ("gateways", "target"), ("fogs", "next_hop"))
    for group, attr in required:
        for i, decl in enumerate(getattr(spec, group)):
            target = getattr(decl, attr)
            if target is None:
                out.add((group, i, attr), f"{decl.id} has no forward target")
            elif target not in known:
                out.add((group, i, attr), f"{decl.id} forwards to undeclared node {target!r}")
    for i, edge in enumerate(spec.edges):
        if edge.cloud is None and edge.iot is None:
            out.add(("edges", i), f"edge {edge.id} needs a 'cloud' or 'iot' target")
        for attr in ("cloud", "iot"):
            target = getattr(edge, attr)
            if target is not None and target not in known:
                out.add(("edges", i, attr), f"{edge.id} forwards to undeclared node {target!r}")

    for i, failure in enumerate(spec.failures):
        if failure.node not in iot:
            out.add(("failures", i, "node"), f"failure targets undeclared node {failure.node!r}")
    for i, act in enumerate(spec.actuators):
        if act.watch not in iot:
            out.add(("actuators", i, "watch"), f"actuator watches undeclared node {act.watch!r}")
        if act.to not in known:
            out.add(("actuators", i, "to"), f"actuator rewires to undeclared node {act.to!r}")
        for j, node_id in enumerate(act.rewire or ()):
            if node_id not in iot:
                out.add(("actuators", i, "rewire", j), f"actuator rewires undeclared node {node_id!r}")

    graph = ForwardingGraph.from_spec(spec)
    for cycle in graph.cycles():
        first = cycle[0]
        out.add(ids.get(first, ()), f"forwarding cycle: {' -> '.join(cycle + [first])}")


def _check_services(spec: ScenarioSpec, out: _Collector) -> None:
    type_ids = Counter(t.id for t in spec.services.types)
    for i, t in enumerate(spec.services.types):
        if type_ids[t.id] > 1:
            out.add(("services", "types", i, "id"), f"duplicate service type {t.id!r}")
    datacenters = {dc.id for dc in spec.datacenters}

    def need_type(path: Tuple, type_id: str) -> None:
        if type_id not in type_ids:
            out.add(path, f"unknown service type {type_id!r}")

    for i, w in enumerate(spec.services.workloads):
        if w.datacenter not in datacenters:
            out.add(("services", "workloads", i, "datacenter"), f"workload targets undeclared datacenter {w.datacenter!r}")
        for type_id, count in w.requests.items():
            need_type(("services", "workloads", i, "requests", type_id), type_id)
            if count < 0:
                out.add(("services", "workloads", i, "requests", type_id), "request count must be >= 0")
    for i, dc in enumerate(spec.datacenters):
        for j, hook in enumerate(dc.on_store):
            need_type(("datacenters", i, "on_store", j, "service"), hook.service)
            if hook.datacenter is not None and hook.datacenter not in datacenters:
                out.add(("datacenters", i, "on_store", j, "datacenter"), f"undeclared datacenter {hook.datacenter!r}")
        for j, vm in enumerate(dc.vms):
            for type_id in vm.services or ():
                need_type(("datacenters", i, "vms", j, "services"), type_id)


def _check_datasets(spec: ScenarioSpec, base_dir: Optional[Path], out: _Collector) -> None:
    cache = spec._datasets
    for i, sensor in enumerate(spec.sensors):
        mode = sensor.selection_model.mode
        ds = sensor.dataset
        if ds.path is not None:
            ds.path = _resolve(ds.path, base_dir)
            if ds.path not in cache:
                try:
                    cache[ds.path] = load_dataset(ds.path)
                except SimulationError as e:
                    out.add(("sensors", i, "dataset", "path"), f"{type(e).__name__}: {e}")
                    continue
            rows = cache[ds.path].row_count
        else:
            rows = len(ds.values)
        if rows == 0 and mode != "random_in_range":
            out.add(("sensors", i, "dataset"), f"dataset of {sensor.id} is empty")

        traj = sensor.trajectory
        if traj is None:
            continue
        try:
            if traj.path is not None:
                traj.path = _resolve(traj.path, base_dir)
                load_trajectory(traj.path)
            elif traj.waypoints is not None:
                check_waypoints([Waypoint(*wp) for wp in traj.waypoints], sensor.id)
        except (SimulationError, ValueError) as e:
            out.add(("sensors", i, "trajectory"), f"{type(e).__name__}: {e}")


def _check_ranges(spec: ScenarioSpec, ids: Dict[str, Tuple], out: _Collector) -> None:
    """Static hops between located IoT nodes must be within the sender's range."""
    defaults = effective_defaults(spec)
    nodes = dict(spec.iot_nodes())
    for node_id, decl in nodes.items():
        if getattr(decl, "trajectory", None) is not None:
            continue
        for attr in ("target", "next_hop", "cloud", "iot"):
            target = getattr(decl, attr, None)
            receiver = nodes.get(target) if target else None
            if receiver is None:
                continue
            conn_type = defaults.connection(decl.connection.kind)
            if not in_range(decl.location, receiver.location, conn_type):
                out.add(
                    ids.get(node_id, ()) + (attr,),
                    f"{node_id} -> {target} is out of {conn_type.kind.value} range ({conn_type.range_m:g} m)",
                )


def check_scenario(
    spec: ScenarioSpec, base_dir: Optional[Union[str, Path]] = None, root: Optional[yaml.Node] = None
) -> List[Diagnostic]:
    out = _Collector(root)
    base = Path(base_dir) if base_dir is not None else None
    if not any(getattr(spec, key) for key in TOPOLOGY_KEYS):
        out.add((), "missing topology")
        return out.diagnostics
    ids = _check_ids(spec, out)
    _check_targets(spec, ids, out)
    _check_services(spec, out)
    _check_datasets(spec, base, out)
    _check_ranges(spec, ids, out)
    return out.diagnostics


# Entry points


def validate_scenario(
    document: str, base_dir: Optional[Union[str, Path]] = None
) -> Tuple[Optional[ScenarioSpec], List[Diagnostic]]:
    try:
        root = yaml.compose(document, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(document)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        line, column = (mark.line + 1, mark.column + 1) if mark else (None, None)
        return None, [Diagnostic("$", f"syntax error: {e.problem or e}", line, column)]
    except yaml.YAMLError as e:
        return None, [Diagnostic("$", f"syntax error: {e}")]

    out = _Collector(root)
    if raw is None or raw == {}:
        out.add((), "missing topology")
        return None, out.diagnostics
    if not isinstance(raw, dict):
        out.add((), f"document must be a mapping, got {type(raw).__name__}")
        return None, out.diagnostics

    try:
        spec = ScenarioSpec.model_validate(raw)
    except ValidationError as e:
        if not any(raw.get(key) for key in TOPOLOGY_KEYS):
            out.add((), "missing topology")
        for err in e.errors():
            out.add(_clean_loc(err["loc"]), err["msg"])
        return None, out.diagnostics

    diagnostics = check_scenario(spec, base_dir, root)
    return (spec if not diagnostics else None), diagnostics


def parse_scenario(
    document: str, base_dir: Optional[Union[str, Path]] = None, source: Optional[str] = None
) -> ScenarioSpec:
    spec, diagnostics = validate_scenario(document, base_dir)
    if diagnostics:
        raise ScenarioInvalid(diagnostics, source)
    logger.debug(f"Parsed scenario {spec.name!r}: {spec.node_count()} nodes")
    return spec


def load_scenario(path: Union[str, Path]) -> ScenarioSpec:
    path = Path(path)
    try:
        document = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioInvalid([Diagnostic("$", f"scenario file {path} does not exist")], str(path)) from None
    return parse_scenario(document, base_dir=path.parent, source=str(path))


def serialize_scenario(spec: ScenarioSpec) -> str:
    data = spec.model_dump(mode="json", exclude_defaults=True)
    data = {"format_version": spec.format_version, **data}
    return yaml.safe_dump(data, sort_keys=False, allow_unicode=True)


# Replication


def _prefix_ids(data: Dict[str, Any], prefix: str) -> Dict[str, Any]:
    p = lambda value: None if value is None else f"{prefix}{value}"  # noqa: E731
    for group in ("sensors", "links", "gateways", "edges", "fogs"):
        for decl in data[group]:
            decl["id"] = p(decl["id"])
            for attr in ("target", "next_hop", "cloud", "iot"):
                if attr in decl:
                    decl[attr] = p(decl[attr])
    for dc in data["datacenters"]:
        dc["id"] = p(dc["id"])
        for hook in dc["on_store"]:
            hook["datacenter"] = p(hook["datacenter"])
    for w in data["services"]["workloads"]:
        w["datacenter"] = p(w["datacenter"])
    for failure in data["failures"]:
        failure["node"] = p(failure["node"])
    for act in data["actuators"]:
        act["id"], act["watch"], act["to"] = p(act["id"]), p(act["watch"]), p(act["to"])
        if act["rewire"] is not None:
            act["rewire"] = [p(n) for n in act["rewire"]]
    return data


def replicate(spec: ScenarioSpec, k: int) -> ScenarioSpec:
    """Clone the whole topology k times, ids prefixed ``L<n>-``. Service types and alerts are shared."""
    if k < 1:
        raise ValueError(f"replication factor must be >= 1, got {k}")
    base = spec.model_dump()
    merged = copy.deepcopy(base)
    for group in ("sensors", "links", "gateways", "edges", "fogs", "datacenters", "failures", "actuators"):
        merged[group] = []
    merged["services"]["workloads"] = []
    for n in range(1, k + 1):
        clone = _prefix_ids(copy.deepcopy(base), f"L{n}-")
        for group in ("sensors", "links", "gateways", "edges", "fogs", "datacenters", "failures", "actuators"):
            merged[group].extend(clone[group])
        merged["services"]["workloads"].extend(clone["services"]["workloads"])
    result = ScenarioSpec.model_validate(merged)
    result._datasets.update(spec._datasets)
    return result
