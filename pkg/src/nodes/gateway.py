"""
Gateway nodes: buffer one round of readings from upstream sensors, aggregate
it, and send the aggregate toward the cloud.

A round is identified by the reading timestamp. It is complete when every
live upstream sensor whose interval divides that timestamp has reported;
otherwise the round timeout flushes whatever arrived. Readings for a round
that was already flushed are recorded as late and dropped. Flushed rounds
are remembered for one round interval plus the timeout; anything older is
late by definition. Rounds still open when the run ends are flushed as
partial.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Dict, List, Optional, Set, Tuple

from src.core.errors import NoForwardTarget
from src.kernel.events import EventHandle, FlushAggregate
from src.network.packets import AggregatedRecord, DataPacket, Reading, Readings
from src.nodes.base import Node
from src.nodes.sensors import SensorNode
from src.services.aggregation import round_mean

logger = logging.getLogger(__name__)

DAY_S = 86_400


def day_of(t: int) -> int:
    return (t - 1) // DAY_S + 1


def round_in_day(t: int, round_interval: int) -> int:
    return ((t - 1) % DAY_S) // round_interval + 1


@dataclass
class GatewayBuffer:
    round_time: int
    expected: int
    values: Dict[str, List[Decimal]] = field(default_factory=lambda: defaultdict(list))
    sources: Dict[str, Tuple[int, Optional[float]]] = field(default_factory=dict)
    received: int = 0
    timeout: Optional[EventHandle] = None

    def add(self, reading: Reading, now: int) -> None:
        self.values[reading.metric].append(reading.value)
        self.sources[reading.sensor] = (now, reading.battery_pct)
        self.received += 1

    @property
    def complete(self) -> bool:
        return self.received >= self.expected


class GatewayNode(Node):
    kind = "gateway"
    handlers = {**Node.handlers, FlushAggregate: "on_flush"}

    def __init__(self, node_id, connection, round_timeout: Optional[int] = None, **common):
        super().__init__(node_id, connection, **common)
        self._round_timeout = round_timeout
        self.buffers: Dict[int, GatewayBuffer] = {}
        self.closed: Set[int] = set()
        # Round times at or below this are no longer remembered in `closed`
        self.closed_floor: Optional[int] = None
        self.rounds_flushed = 0
        self._upstream: List[SensorNode] = []
        self._upstream_version = -1

    # Topology

    def upstream_sensors(self) -> List[SensorNode]:
        if self._upstream_version != self.sim.topology_version:
            self._upstream = self._walk_upstream()
            self._upstream_version = self.sim.topology_version
        return self._upstream

    def _walk_upstream(self) -> List[SensorNode]:
        entities = self.sim.entities
        found = []
        for entity in entities.values():
            if not isinstance(entity, SensorNode):
                continue
            node, hops = entity, 0
            while node is not None and hops <= len(entities):
                target = node.forward_target
                if target == self.entity_id:
                    found.append(entity)
                    break
                nxt = entities.get(target) if target else None
                if not isinstance(nxt, Node) or isinstance(nxt, GatewayNode):
                    break
                node, hops = nxt, hops + 1
        return found

    @property
    def round_interval(self) -> int:
        intervals = [s.reading_interval_s for s in self.upstream_sensors()]
        return math.gcd(*intervals) if intervals else 1

    @property
    def round_timeout(self) -> int:
        if self._round_timeout is not None:
            return self._round_timeout
        intervals = [s.reading_interval_s for s in self.upstream_sensors()]
        return min(intervals) if intervals else 1

    def expected_readings(self, round_time: int) -> int:
        return sum(1 for s in self.upstream_sensors() if s.alive and round_time % s.reading_interval_s == 0)

    def pending_flush(self, day: int) -> Optional[int]:
        """Latest scheduled flush among this gateway's open rounds of ``day``."""
        if not self.alive:
            return None
        times = [
            b.timeout.fire_at
            for rt, b in self.buffers.items()
            if day_of(rt) == day and b.timeout is not None and b.timeout.pending
        ]
        return max(times, default=None)

    # Collection

    def receive(self, packet: DataPacket) -> None:
        if isinstance(packet.payload, Readings):
            self.gateway_collect(packet, self.sim.now)
        else:
            self.forward(packet)

    def is_late(self, round_time: int) -> bool:
        if round_time in self.buffers:
            return False
        if round_time in self.closed:
            return True
        return self.closed_floor is not None and round_time <= self.closed_floor

    def gateway_collect(self, packet: DataPacket, now: int) -> None:
        for reading in packet.payload.readings:
            rt = reading.timestamp
            if self.is_late(rt):
                logger.debug(f"{self.entity_id}: late reading from {reading.sensor} for round t={rt}")
                self.sim.emit("late", self.entity_id, sensor=reading.sensor, round_time=rt, packet=packet.packet_id)
                continue
            buffer = self.buffers.get(rt)
            if buffer is None:
                buffer = self._open_round(rt, now)
            buffer.add(reading, now)
            if buffer.complete:
                self.flush(rt)

    def _open_round(self, round_time: int, now: int) -> GatewayBuffer:
        buffer = GatewayBuffer(round_time, max(1, self.expected_readings(round_time)))
        buffer.timeout = self.sim.schedule(now + self.round_timeout, self.entity_id, FlushAggregate(round_time))
        self.buffers[round_time] = buffer
        return buffer

    def on_flush(self, event) -> None:
        if not self.alive:
            return
        try:
            self.flush(event.payload.round_time, partial=True)
        except NoForwardTarget as e:
            self.report_error(e)

    def on_run_end(self) -> None:
        if not self.alive:
            return
        for round_time in sorted(self.buffers):
            try:
                self.flush(round_time, partial=True)
            except NoForwardTarget as e:
                self.report_error(e)

    def flush(self, round_time: int, partial: bool = False) -> Optional[AggregatedRecord]:
        buffer = self.buffers.pop(round_time, None)
        if buffer is None:
            return None
        if buffer.timeout is not None:
            self.sim.cancel(buffer.timeout)
        self.closed.add(round_time)
        self._forget_old_rounds(self.sim.now)
        if not buffer.received:
            return None

        record = AggregatedRecord(
            gateway=self.entity_id,
            round_time=round_time,
            day=day_of(round_time),
            round_index=round_in_day(round_time, self.round_interval),
            values={metric: tuple(vals) for metric, vals in buffer.values.items()},
            sources=dict(buffer.sources),
        )
        self.rounds_flushed += 1
        means = {metric: round_mean(vals)[1] for metric, vals in record.values.items()}
        self.sim.emit(
            "aggregate",
            self.entity_id,
            day=record.day,
            round=record.round_index,
            readings=record.reading_count,
            partial=partial and buffer.received < buffer.expected,
            **means,
        )
        self.relay(record)
        return record

    def _forget_old_rounds(self, now: int) -> None:
        floor = now - (self.round_interval + self.round_timeout)
        if self.closed_floor is not None and floor <= self.closed_floor:
            return
        self.closed_floor = floor
        self.closed = {rt for rt in self.closed if rt > floor}

    def go_silent(self) -> None:
        for buffer in self.buffers.values():
            if buffer.timeout is not None:
                self.sim.cancel(buffer.timeout)
        super().go_silent()
