"""
Scenario document models.

The document is YAML; these pydantic models fix its shape. Durations accept
plain seconds or a number with an ``s``/``m``/``h``/``d`` suffix. Sensor,
host and VM declarations may carry ``count``, expanded at build into
``<id>-<n>`` replicas.
"""

import re
from decimal import Decimal
from typing import Annotated, Dict, Iterator, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, PrivateAttr, model_validator

from src.network.catalog import ConnectionKind

FORMAT_VERSION = 1

_UNITS = {"s": 1, "m": 60, "h": 3600, "d": 86400}
_DURATION_RE = re.compile(r"^\s*(\d+)\s*([smhd]?)\s*$")


def parse_duration(value) -> int:
    if isinstance(value, bool):
        raise ValueError("duration must be a number of seconds or a string like '6h'")
    if isinstance(value, int):
        if value < 0:
            raise ValueError("duration must be >= 0")
        return value
    if isinstance(value, float) and value.is_integer() and value >= 0:
        return int(value)
    if isinstance(value, str):
        match = _DURATION_RE.match(value)
        if match:
            return int(match.group(1)) * _UNITS[match.group(2) or "s"]
    raise ValueError(f"invalid duration {value!r} (expected seconds or <n>[s|m|h|d])")


def _decimal_out(value: Decimal):
    as_float = float(value)
    return as_float if Decimal(repr(as_float)) == value else str(value)


Duration = Annotated[int, BeforeValidator(parse_duration)]
ExactValue = Annotated[Decimal, PlainSerializer(_decimal_out, when_used="json")]
Location = Tuple[float, float, float]


def _connection_shorthand(value):
    return {"kind": value} if isinstance(value, str) else value


def _power_shorthand(value):
    return {"kind": value} if isinstance(value, str) else value


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# Nodes


class ConnectionModel(StrictModel):
    kind: ConnectionKind
    strength: float = Field(1.0, ge=0.0, le=1.0)
    base_loss: float = Field(0.0, ge=0.0, le=1.0)
    protocol: Optional[str] = None


class PowerModel(StrictModel):
    kind: Literal["battery", "usb", "continuous"] = "continuous"
    capacity_J: Optional[float] = Field(None, gt=0)
    level_J: Optional[float] = Field(None, ge=0)

    @model_validator(mode="after")
    def _battery_needs_capacity(self):
        if self.kind == "battery" and self.capacity_J is None:
            raise ValueError("battery power needs capacity_J")
        if self.capacity_J is not None and self.level_J is not None and self.level_J > self.capacity_J:
            raise ValueError("level_J exceeds capacity_J")
        return self


class DatasetModel(StrictModel):
    path: Optional[str] = None
    values: Optional[List[ExactValue]] = None

    @model_validator(mode="after")
    def _exactly_one_source(self):
        if (self.path is None) == (self.values is None):
            raise ValueError("dataset needs exactly one of 'path' or 'values'")
        return self


class SelectionModel(StrictModel):
    mode: Literal["sequential", "random", "random_in_range"] = "sequential"
    min: Optional[float] = None
    max: Optional[float] = None

    @model_validator(mode="after")
    def _range_bounds(self):
        if self.mode == "random_in_range":
            if self.min is None or self.max is None:
                raise ValueError("random_in_range needs min and max")
            if self.min > self.max:
                raise ValueError(f"random_in_range min {self.min} > max {self.max}")
        return self


class RandomWalkModel(StrictModel):
    step: Duration = Field(gt=0)
    max_step_m: float = Field(gt=0)
    x: Tuple[float, float]
    y: Tuple[float, float]

    @model_validator(mode="after")
    def _ordered_bounds(self):
        for axis, (low, high) in (("x", self.x), ("y", self.y)):
            if low > high:
                raise ValueError(f"random_walk {axis} bounds must be [min, max]")
        return self


class TrajectoryModel(StrictModel):
    path: Optional[str] = None
    waypoints: Optional[List[Tuple[Duration, float, float, float]]] = None
    random_walk: Optional[RandomWalkModel] = None

    @model_validator(mode="after")
    def _exactly_one_source(self):
        sources = [s for s in (self.path, self.waypoints, self.random_walk) if s is not None]
        if len(sources) != 1:
            raise ValueError("trajectory needs exactly one of 'path', 'waypoints' or 'random_walk'")
        return self


class NodeModel(StrictModel):
    id: str = Field(min_length=1)
    name: Optional[str] = None
    location: Location = (0.0, 0.0, 0.0)
    coverage_m: Optional[float] = Field(None, gt=0)
    connection: Annotated[ConnectionModel, BeforeValidator(_connection_shorthand)] = ConnectionModel(
        kind=ConnectionKind.WIFI
    )
    power: Annotated[PowerModel, BeforeValidator(_power_shorthand)] = PowerModel()


class SensorModel(NodeModel):
    metric: str
    interval: Duration = Field(gt=0)
    dataset: DatasetModel
    selection: Union[SelectionModel, Literal["sequential", "random"]] = SelectionModel()
    target: Optional[str] = None
    trajectory: Optional[TrajectoryModel] = None
    count: int = Field(1, ge=1)

    @property
    def selection_model(self) -> SelectionModel:
        if isinstance(self.selection, str):
            return SelectionModel(mode=self.selection)
        return self.selection

    def expanded_ids(self) -> List[str]:
        return expand_ids(self.id, self.count)


class LinkModel(NodeModel):
    target: Optional[str] = None


class GatewayModel(NodeModel):
    target: Optional[str] = None
    round_timeout: Optional[Duration] = None


class ProcessingModel(StrictModel):
    kind: Literal["passthrough", "downsample", "threshold"] = "passthrough"
    k: int = Field(1, ge=1)
    min: Optional[ExactValue] = None
    max: Optional[ExactValue] = None

    @model_validator(mode="after")
    def _threshold_bounds(self):
        if self.kind == "threshold":
            if self.min is None or self.max is None:
                raise ValueError("threshold processing needs min and max")
            if self.min > self.max:
                raise ValueError(f"threshold min {self.min} > max {self.max}")
        return self


class EdgeModel(NodeModel):
    mips: float = Field(gt=0)
    storage_bytes: int = Field(0, ge=0)
    processing: ProcessingModel = ProcessingModel()
    cloud: Optional[str] = None
    iot: Optional[str] = None


class FogModel(NodeModel):
    mips: float = Field(gt=0)
    next_hop: Optional[str] = None


# Cloud


class HostModel(StrictModel):
    id: str = Field(min_length=1)
    pes: int = Field(12, ge=1)
    mips_per_pe: float = Field(3000.0, gt=0)
    ram_bytes: int = Field(256 * 2**30, ge=0)
    storage_bytes: int = Field(2**40, ge=0)
    idle_W: float = Field(100.0, ge=0)
    full_W: float = Field(250.0, ge=0)
    vm_slots: Optional[int] = Field(None, ge=0)
    count: int = Field(1, ge=1)

    def expanded_ids(self) -> List[str]:
        return expand_ids(self.id, self.count)


class VMModel(StrictModel):
    id: str = Field(min_length=1)
    pes: int = Field(2, ge=1)
    mips_per_pe: float = Field(2400.0, gt=0)
    ram_bytes: int = Field(8 * 2**30, ge=0)
    storage_bytes: int = Field(0, ge=0)
    services: Optional[List[str]] = None
    count: int = Field(1, ge=1)

    def expanded_ids(self) -> List[str]:
        return expand_ids(self.id, self.count)


class HookModel(StrictModel):
    service: str
    datacenter: Optional[str] = None


class DatacenterModel(StrictModel):
    id: str = Field(min_length=1)
    location: Optional[Location] = None
    hosts: List[HostModel] = Field(default_factory=list)
    vms: List[VMModel] = Field(default_factory=list)
    on_store: List[HookModel] = Field(default_factory=list)


# Services


class ServiceTypeModel(StrictModel):
    id: str = Field(min_length=1)
    name: Optional[str] = None
    demand_mi: float = Field(ge=0)


class AlertModel(StrictModel):
    metric: str
    red_threshold: ExactValue
    rise_epsilon: ExactValue = Field(Decimal(0), ge=0)


class WorkloadModel(StrictModel):
    datacenter: str
    intervals: int = Field(ge=0)
    interval: Duration = Field(gt=0)
    requests: Dict[str, int] = Field(default_factory=dict)


class ServicesModel(StrictModel):
    types: List[ServiceTypeModel] = Field(default_factory=list)
    alerts: List[AlertModel] = Field(default_factory=list)
    workloads: List[WorkloadModel] = Field(default_factory=list)


# Failures, actuators, defaults


class FailureModel(StrictModel):
    kind: Literal["node_failure", "outage", "signal"]
    node: str
    at: Optional[Duration] = None
    start: Optional[Duration] = None
    end: Optional[Duration] = None
    strength: Optional[float] = Field(None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _fields_for_kind(self):
        if self.kind in ("node_failure", "signal") and self.at is None:
            raise ValueError(f"{self.kind} needs 'at'")
        if self.kind == "signal" and self.strength is None:
            raise ValueError("signal needs 'strength'")
        if self.kind == "outage":
            if self.start is None or self.end is None:
                raise ValueError("outage needs 'start' and 'end'")
            if self.end <= self.start:
                raise ValueError(f"outage window [{self.start}, {self.end}) is empty")
        return self


class ActuatorModel(StrictModel):
    id: str = Field(min_length=1)
    watch: str
    on: Literal["failure", "signal_lost"] = "failure"
    to: str
    rewire: Optional[List[str]] = None


class ConnectionOverride(StrictModel):
    signal_kind: Optional[str] = None
    range_m: Optional[float] = Field(None, gt=0)
    bandwidth_Bps: Optional[int] = Field(None, gt=0)
    propagation_s: Optional[int] = Field(None, ge=0)
    tx_energy_J_per_byte: Optional[float] = Field(None, ge=0)
    rx_energy_J_per_byte: Optional[float] = Field(None, ge=0)


class DefaultsModel(StrictModel):
    connections: Dict[ConnectionKind, ConnectionOverride] = Field(default_factory=dict)
    sense_J: Optional[float] = Field(None, ge=0)
    edge_instructions_per_reading: Optional[int] = Field(None, ge=0)
    header_bytes: Optional[int] = Field(None, ge=0)
    reading_bytes: Optional[int] = Field(None, ge=0)
    metric_bytes: Optional[int] = Field(None, ge=0)
    service_request_bytes: Optional[int] = Field(None, ge=0)
    control_bytes: Optional[int] = Field(None, ge=0)


class ScenarioSpec(StrictModel):
    format_version: int = FORMAT_VERSION
    name: str = "scenario"
    seed: int = Field(0, ge=0, le=2**64 - 1)
    horizon: Duration = Field(gt=0)
    settle: Optional[Duration] = None
    defaults: DefaultsModel = DefaultsModel()
    sensors: List[SensorModel] = Field(default_factory=list)
    links: List[LinkModel] = Field(default_factory=list)
    gateways: List[GatewayModel] = Field(default_factory=list)
    edges: List[EdgeModel] = Field(default_factory=list)
    fogs: List[FogModel] = Field(default_factory=list)
    datacenters: List[DatacenterModel] = Field(default_factory=list)
    services: ServicesModel = ServicesModel()
    failures: List[FailureModel] = Field(default_factory=list)
    actuators: List[ActuatorModel] = Field(default_factory=list)

    # Datasets already read during validation, by absolute path
    _datasets: Dict[str, object] = PrivateAttr(default_factory=dict)

    def iot_nodes(self) -> Iterator[Tuple[str, NodeModel]]:
        """(expanded id, declaration) for every IoT-side node."""
        for sensor in self.sensors:
            for node_id in sensor.expanded_ids():
                yield node_id, sensor
        for group in (self.links, self.gateways, self.edges, self.fogs):
            for node in group:
                yield node.id, node

    def node_count(self) -> int:
        """IoT-side nodes plus physical hosts."""
        hosts = sum(h.count for dc in self.datacenters for h in dc.hosts)
        return sum(1 for _ in self.iot_nodes()) + hosts

    def sensor_count(self) -> int:
        return sum(s.count for s in self.sensors)


def expand_ids(base: str, count: int) -> List[str]:
    return [base] if count == 1 else [f"{base}-{n}" for n in range(1, count + 1)]
