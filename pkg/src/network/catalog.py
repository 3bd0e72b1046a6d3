"""
Built-in defaults table: connection-type parameters, energy and cost
constants, packet-size constants. Every entry can be overridden from the
scenario document's ``defaults`` section.

The connection numbers are representative figures for each radio family,
not measurements; scenario authors are expected to override them when they
model specific hardware.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Mapping, Optional


class ConnectionKind(str, Enum):
    WIFI = "wifi"
    CELLULAR_3G = "cellular_3g"
    BLUETOOTH = "bluetooth"
    LORA = "lora"
    ZIGBEE = "zigbee"
    SHORT_RANGE_RADIO = "short_range_radio"
    LONG_RANGE_RADIO = "long_range_radio"


@dataclass(frozen=True)
class ConnectionType:
    kind: ConnectionKind
    signal_kind: str
    range_m: float
    bandwidth_Bps: int
    propagation_s: int
    tx_energy_J_per_byte: float
    rx_energy_J_per_byte: float

    def __post_init__(self):
        if self.range_m <= 0:
            raise ValueError(f"{self.kind.value}: range_m must be > 0")
        if self.bandwidth_Bps <= 0:
            raise ValueError(f"{self.kind.value}: bandwidth_Bps must be > 0")
        if self.propagation_s < 0:
            raise ValueError(f"{self.kind.value}: propagation_s must be >= 0")
        if self.tx_energy_J_per_byte < 0 or self.rx_energy_J_per_byte < 0:
            raise ValueError(f"{self.kind.value}: energies must be >= 0")


def _ct(kind, signal, range_m, bandwidth, tx, rx, propagation=1) -> ConnectionType:
    return ConnectionType(kind, signal, range_m, bandwidth, propagation, tx, rx)


DEFAULT_CONNECTIONS: Dict[ConnectionKind, ConnectionType] = {
    ConnectionKind.WIFI: _ct(ConnectionKind.WIFI, "2.4GHz OFDM", 100.0, 1_250_000, 2e-6, 1e-6),
    ConnectionKind.CELLULAR_3G: _ct(ConnectionKind.CELLULAR_3G, "UMTS", 5000.0, 48_000, 8e-6, 4e-6),
    ConnectionKind.BLUETOOTH: _ct(ConnectionKind.BLUETOOTH, "2.4GHz FHSS", 10.0, 125_000, 5e-7, 5e-7),
    ConnectionKind.LORA: _ct(ConnectionKind.LORA, "sub-GHz CSS", 5000.0, 1_000, 1e-5, 5e-6),
    ConnectionKind.ZIGBEE: _ct(ConnectionKind.ZIGBEE, "2.4GHz DSSS", 100.0, 31_250, 1e-6, 1e-6),
    ConnectionKind.SHORT_RANGE_RADIO: _ct(
        ConnectionKind.SHORT_RANGE_RADIO, "sub-GHz narrowband", 500.0, 31_250, 2e-6, 1e-6
    ),
    ConnectionKind.LONG_RANGE_RADIO: _ct(
        ConnectionKind.LONG_RANGE_RADIO, "sub-GHz narrowband", 2000.0, 1_250, 1e-5, 5e-6
    ),
}


@dataclass(frozen=True)
class DefaultsTable:
    connections: Mapping[ConnectionKind, ConnectionType] = field(
        default_factory=lambda: dict(DEFAULT_CONNECTIONS)
    )
    # Energy
    sense_J: float = 0.5
    # Edge processing cost
    edge_instructions_per_reading: int = 1000
    # Packet sizes (bytes)
    header_bytes: int = 64
    reading_bytes: int = 16
    metric_bytes: int = 16
    service_request_bytes: int = 128
    control_bytes: int = 32

    def connection(self, kind: ConnectionKind) -> ConnectionType:
        return self.connections[ConnectionKind(kind)]

    def with_overrides(
        self,
        connections: Optional[Mapping[str, Mapping[str, Any]]] = None,
        **scalars: Any,
    ) -> "DefaultsTable":
        table = dict(self.connections)
        for kind, fields in (connections or {}).items():
            kind = ConnectionKind(kind)
            changes = {k: v for k, v in fields.items() if v is not None}
            table[kind] = replace(table[kind], **changes)
        scalars = {k: v for k, v in scalars.items() if v is not None}
        return replace(self, connections=table, **scalars)


DEFAULTS = DefaultsTable()
