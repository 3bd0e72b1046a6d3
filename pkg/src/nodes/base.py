"""
Common behavior of every IoT-side node: location, power, connection,
forwarding target, liveness, packet emission and arrival accounting.
"""

import logging
from typing import Callable, Dict, Optional

from src.core.errors import DeadTarget, NoForwardTarget, SimulationError
from src.kernel.engine import Entity, Simulation
from src.kernel.events import (
    BatteryDepleted,
    EventHandle,
    NodeFailure,
    OutageEnd,
    OutageStart,
    PacketArrival,
    SignalChange,
)
from src.network.catalog import DEFAULTS, DefaultsTable
from src.network.connections import (
    LossReason,
    Lost,
    NetworkConnection,
    Outcome,
    in_range,
    set_signal,
    transmit,
)
from src.network.packets import DataPacket, Location, Payload, make_packet, payload_kind, payload_size
from src.nodes.power import Battery, ContinuousSupply, Depleted, PowerSource, drain

logger = logging.getLogger(__name__)

PayloadTransform = Callable[[Payload], Payload]


def identity(payload: Payload) -> Payload:
    return payload


def record_arrival(sim: Simulation, receiver: str, packet: DataPacket, alive: bool) -> bool:
    """Settle an in-flight packet at its receiver. False when the packet is lost."""
    sim.packets.in_flight -= 1
    if not alive:
        record_loss(sim, receiver, packet, LossReason.DEAD_NODE)
        return False
    sim.packets.delivered += 1
    sim.emit("packet_delivered", receiver, packet=packet.packet_id, src=packet.source)
    return True


def record_loss(sim: Simulation, subject: str, packet: DataPacket, reason: LossReason) -> None:
    sim.packets.lost_by_reason[reason.value] += 1
    sim.emit("packet_lost", subject, packet=packet.packet_id, reason=reason.value)


class Node(Entity):
    kind = "node"

    handlers = {
        PacketArrival: "on_packet",
        NodeFailure: "on_failure",
        BatteryDepleted: "on_depleted",
        SignalChange: "on_signal",
        OutageStart: "on_outage_start",
        OutageEnd: "on_outage_end",
    }

    def __init__(
        self,
        node_id: str,
        connection: NetworkConnection,
        location: Location = (0.0, 0.0, 0.0),
        power: Optional[PowerSource] = None,
        forward_target: Optional[str] = None,
        name: Optional[str] = None,
        coverage_m: Optional[float] = None,
        transform: PayloadTransform = identity,
    ):
        super().__init__(node_id)
        self.name = name or node_id
        self.connection = connection
        self.location = tuple(location)
        self.power = power if power is not None else ContinuousSupply()
        self.coverage_m = coverage_m if coverage_m is not None else connection.conn_type.range_m
        self.forward_target = forward_target
        self.transform = transform
        self.alive = True
        # Handles of self-scheduled events, cancelled when the node falls silent
        self.pending: Dict[str, EventHandle] = {}

    @property
    def defaults(self) -> DefaultsTable:
        return self.sim.defaults or DEFAULTS

    @property
    def battery_pct(self) -> Optional[float]:
        return self.power.percent

    # Emission

    def send(
        self,
        payload: Payload,
        destination: Optional[str] = None,
        parent: Optional[int] = None,
        at: Optional[int] = None,
    ) -> Optional[Outcome]:
        destination = destination or self.forward_target
        if destination is None:
            raise NoForwardTarget(self.entity_id)
        sim = self.sim
        departs = sim.now if at is None else at
        packet = make_packet(
            sim.next_packet_id(),
            self.entity_id,
            destination,
            sim.now,
            self.transform(payload),
            self.defaults,
            parent,
        )
        sim.packets.sent += 1
        sim.emit(
            "packet_sent",
            self.entity_id,
            packet=packet.packet_id,
            parent=parent if parent is not None else "-",
            dst=destination,
            size=packet.size_bytes,
            payload=payload_kind(packet.payload),
        )

        receiver = sim.entities.get(destination)
        if isinstance(receiver, Node) and not in_range(
            self.location, receiver.location, self.connection.conn_type
        ):
            record_loss(sim, self.entity_id, packet, LossReason.OUT_OF_RANGE)
            return Lost(LossReason.OUT_OF_RANGE)

        outcome = transmit(self.connection, packet, departs, self.rng)
        if isinstance(outcome, Lost):
            record_loss(sim, self.entity_id, packet, outcome.reason)
        else:
            sim.packets.in_flight += 1
            sim.schedule(outcome.time, destination, PacketArrival(packet))
        return outcome

    def transmit_cost(self, payload: Payload) -> float:
        defaults = self.defaults
        size = defaults.header_bytes + payload_size(self.transform(payload), defaults)
        return size * self.connection.conn_type.tx_energy_J_per_byte

    def relay(
        self,
        payload: Payload,
        destination: Optional[str] = None,
        parent: Optional[int] = None,
        at: Optional[int] = None,
    ) -> Optional[Outcome]:
        """Pay the transmit energy, then send. None when the node ran out first."""
        if isinstance(self.power, Battery) and not self.charge(self.transmit_cost(payload)):
            return None
        return self.send(payload, destination, parent, at)

    # Energy

    def charge(self, cost_J: float) -> bool:
        """Drain the power source. False when the node just ran out."""
        if not self.alive:
            return False
        if isinstance(drain(self.power, cost_J, self.sim.now), Depleted):
            self.go_silent()
            self.sim.schedule(self.sim.now, self.entity_id, BatteryDepleted())
            return False
        return True

    def go_silent(self) -> None:
        self.alive = False
        for handle in self.pending.values():
            self.sim.cancel(handle)
        self.pending.clear()

    # Handlers

    def on_packet(self, event) -> None:
        packet: DataPacket = event.payload.packet
        # A node that runs out while receiving takes the packet down with it
        alive = self.alive and self.absorb(packet)
        if not record_arrival(self.sim, self.entity_id, packet, alive):
            return
        try:
            self.receive(packet)
        except (NoForwardTarget, DeadTarget) as e:
            self.report_error(e)

    def reception_cost(self, packet: DataPacket) -> float:
        return packet.size_bytes * self.connection.conn_type.rx_energy_J_per_byte

    def absorb(self, packet: DataPacket) -> bool:
        if not isinstance(self.power, Battery):
            return True
        return self.charge(self.reception_cost(packet))

    def receive(self, packet: DataPacket) -> None:
        logger.debug(f"{self.entity_id} dropped packet {packet.packet_id}: no receive behavior")

    def forward(self, packet: DataPacket, destination: Optional[str] = None, at: Optional[int] = None):
        """Re-address a received payload to the next hop."""
        target = destination or self.forward_target
        if target is None:
            raise NoForwardTarget(self.entity_id)
        return self.relay(packet.payload, target, parent=packet.packet_id, at=at)

    def on_failure(self, event) -> None:
        if not self.alive:
            return
        self.go_silent()
        self.sim.emit("failure", self.entity_id, cause="injected")
        logger.info(f"Node {self.entity_id} failed at t={self.sim.now}")
        self.sim.notify("failure", self.entity_id)

    def on_depleted(self, event) -> None:
        self.sim.emit("battery", self.entity_id, state="depleted", level_J=0.0)
        logger.info(f"Node {self.entity_id} depleted its battery at t={self.sim.now}")
        self.sim.notify("failure", self.entity_id)

    def on_signal(self, event) -> None:
        strength = event.payload.strength
        set_signal(self.connection, strength)
        self.sim.emit("signal", self.entity_id, strength=strength, loss=self.connection.loss_probability)
        if strength == 0:
            self.sim.notify("signal_lost", self.entity_id)

    def on_outage_start(self, event) -> None:
        self.sim.emit("outage", self.entity_id, state="start", until=event.payload.end)

    def on_outage_end(self, event) -> None:
        self.sim.emit("outage", self.entity_id, state="end")

    def report_error(self, error: SimulationError) -> None:
        logger.warning(f"{self.entity_id}: {error}")
        self.sim.emit("error", self.entity_id, error=type(error).__name__, message=str(error))
