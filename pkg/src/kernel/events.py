"""Simulation events, their payload variants and cancellation handles."""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

SimTime = int
EntityId = str


# Payload variants. Each one selects exactly one handler on the target entity.


@dataclass(frozen=True, slots=True)
class SenseTick:
    pass


@dataclass(frozen=True, slots=True)
class PacketArrival:
    packet: Any


@dataclass(frozen=True, slots=True)
class CloudletCompletion:
    cloudlet_id: str
    vm_id: str


@dataclass(frozen=True, slots=True)
class BatteryDepleted:
    pass


@dataclass(frozen=True, slots=True)
class NodeFailure:
    pass


@dataclass(frozen=True, slots=True)
class OutageStart:
    end: SimTime


@dataclass(frozen=True, slots=True)
class OutageEnd:
    pass


@dataclass(frozen=True, slots=True)
class SignalChange:
    strength: float


@dataclass(frozen=True, slots=True)
class WorkloadTick:
    interval: int


@dataclass(frozen=True, slots=True)
class MoveWaypoint:
    index: int


@dataclass(frozen=True, slots=True)
class FlushAggregate:
    round_time: SimTime


@dataclass(frozen=True, slots=True)
class DayBoundary:
    day: int


class EventState(Enum):
    PENDING = "pending"
    FIRED = "fired"
    CANCELLED = "cancelled"


class Event:
    __slots__ = ("fire_at", "seq", "target", "payload", "state")

    def __init__(self, fire_at: SimTime, seq: int, target: EntityId, payload: Any):
        self.fire_at = fire_at
        self.seq = seq
        self.target = target
        self.payload = payload
        self.state = EventState.PENDING

    @property
    def key(self) -> tuple:
        return (self.fire_at, self.seq)

    def __repr__(self) -> str:
        return (
            f"Event(t={self.fire_at}, seq={self.seq}, target={self.target}, "
            f"{type(self.payload).__name__}, {self.state.value})"
        )


@dataclass(frozen=True)
class EventHandle:
    event: Event

    @property
    def pending(self) -> bool:
        return self.event.state is EventState.PENDING

    @property
    def fire_at(self) -> Optional[SimTime]:
        return self.event.fire_at
