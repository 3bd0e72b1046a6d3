"""
Edge devices: process aggregated records near the source, then forward the
result to a cloud-side target, an IoT-side target, or both.
"""

import logging
import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Optional, Union

from src.network.packets import AggregatedRecord, DataPacket
from src.nodes.base import Node

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Passthrough:
    pass


@dataclass(frozen=True)
class Downsample:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"downsample k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class ThresholdFilter:
    min: Decimal
    max: Decimal

    def __post_init__(self):
        if self.min > self.max:
            raise ValueError(f"threshold filter min {self.min} > max {self.max}")


Processing = Union[Passthrough, Downsample, ThresholdFilter]


class EdgeDevice(Node):
    kind = "edge"

    def __init__(
        self,
        node_id,
        connection,
        mips: float,
        storage_bytes: int = 0,
        processing: Optional[Processing] = None,
        cloud: Optional[str] = None,
        iot: Optional[str] = None,
        **common,
    ):
        super().__init__(node_id, connection, forward_target=cloud or iot, **common)
        if cloud is None and iot is None:
            raise ValueError(f"edge {node_id} needs a cloud or an IoT target")
        if mips <= 0:
            raise ValueError(f"edge {node_id}: mips must be > 0")
        self.mips = mips
        self.storage_bytes = storage_bytes
        self.processing = processing or Passthrough()
        self.cloud = cloud
        self.iot = iot
        self.rounds_seen = 0

    def processing_delay(self, record: AggregatedRecord) -> int:
        instructions = self.defaults.edge_instructions_per_reading * record.reading_count
        return math.ceil(instructions / (self.mips * 1_000_000))

    def edge_process(self, record: AggregatedRecord, now: int) -> Optional[AggregatedRecord]:
        processing = self.processing
        if isinstance(processing, Downsample):
            self.rounds_seen += 1
            return record if self.rounds_seen % processing.k == 0 else None
        if isinstance(processing, ThresholdFilter):
            kept = {
                metric: tuple(v for v in values if processing.min <= v <= processing.max)
                for metric, values in record.values.items()
            }
            kept = {metric: values for metric, values in kept.items() if values}
            if not kept:
                return None
            return AggregatedRecord(
                record.gateway, record.round_time, record.day, record.round_index, kept, record.sources
            )
        return record

    def receive(self, packet: DataPacket) -> None:
        now = self.sim.now
        if not isinstance(packet.payload, AggregatedRecord):
            self._fan_out(packet, packet.payload, now)
            return
        result = self.edge_process(packet.payload, now)
        if result is None:
            logger.debug(f"{self.entity_id}: record {packet.payload.key} filtered out")
            return
        self._fan_out(packet, result, now + self.processing_delay(packet.payload))

    def _fan_out(self, packet: DataPacket, payload, departs: int) -> None:
        for target in (self.cloud, self.iot):
            if target is not None:
                self.relay(payload, target, parent=packet.packet_id, at=departs)
