"""
Data packets and their payload variants.

Packet size = header_bytes + payload size, where the payload size is
    Readings          reading_bytes per reading
    AggregatedRecord  reading_bytes per value + metric_bytes per metric
    ServiceRequest    service_request_bytes
    ControlMessage    control_bytes
(all constants from the defaults table; 64/16/16/128/32 out of the box).
"""

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any, Dict, Optional, Tuple, Union

from src.network.catalog import DefaultsTable, DEFAULTS

Location = Tuple[float, float, float]


@dataclass(frozen=True, slots=True)
class Reading:
    sensor: str
    metric: str
    value: Decimal
    timestamp: int
    location: Location = (0.0, 0.0, 0.0)
    battery_pct: Optional[float] = None


@dataclass(frozen=True, slots=True)
class Readings:
    readings: Tuple[Reading, ...]


@dataclass(frozen=True)
class AggregatedRecord:
    gateway: str
    round_time: int
    day: int
    round_index: int
    # metric -> values received in the round, in arrival order
    values: Dict[str, Tuple[Decimal, ...]]
    # node -> (last heard, last reported battery %)
    sources: Dict[str, Tuple[int, Optional[float]]] = field(default_factory=dict)

    @property
    def reading_count(self) -> int:
        return sum(len(v) for v in self.values.values())

    @property
    def key(self) -> Tuple[str, int, int]:
        return (self.gateway, self.day, self.round_index)


@dataclass(frozen=True, slots=True)
class ServiceRequest:
    request_id: str
    service_type: str
    origin: str
    submitted_at: int


@dataclass(frozen=True, slots=True)
class ControlMessage:
    command: str
    args: Tuple[Any, ...] = ()


Payload = Union[Readings, AggregatedRecord, ServiceRequest, ControlMessage]


def payload_size(payload: Payload, defaults: DefaultsTable = DEFAULTS) -> int:
    if isinstance(payload, Readings):
        return defaults.reading_bytes * len(payload.readings)
    if isinstance(payload, AggregatedRecord):
        return defaults.reading_bytes * payload.reading_count + defaults.metric_bytes * len(payload.values)
    if isinstance(payload, ServiceRequest):
        return defaults.service_request_bytes
    if isinstance(payload, ControlMessage):
        return defaults.control_bytes
    raise TypeError(f"unknown payload {type(payload).__name__}")


def payload_kind(payload: Payload) -> str:
    return {
        Readings: "readings",
        AggregatedRecord: "aggregate",
        ServiceRequest: "request",
        ControlMessage: "control",
    }[type(payload)]


@dataclass(frozen=True, slots=True)
class DataPacket:
    packet_id: int
    source: str
    destination: str
    created_at: int
    size_bytes: int
    payload: Payload
    parent: Optional[int] = None


def make_packet(
    packet_id: int,
    source: str,
    destination: str,
    created_at: int,
    payload: Payload,
    defaults: DefaultsTable = DEFAULTS,
    parent: Optional[int] = None,
) -> DataPacket:
    size = defaults.header_bytes + payload_size(payload, defaults)
    return DataPacket(packet_id, source, destination, created_at, size, payload, parent)
