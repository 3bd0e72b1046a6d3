import bisect
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple, Union

from src.core.errors import OutOfRange
from src.kernel.events import SimTime
from src.kernel.rng import RandomStream
from src.network.catalog import ConnectionType
from src.network.packets import DataPacket, Location

logger = logging.getLogger(__name__)


class LossReason(str, Enum):
    OUTAGE = "outage"
    DROP = "drop"
    DEAD_NODE = "dead_node"
    OUT_OF_RANGE = "out_of_range"


@dataclass(frozen=True, slots=True)
class DeliveredAt:
    time: SimTime


@dataclass(frozen=True, slots=True)
class Lost:
    reason: LossReason


Outcome = Union[DeliveredAt, Lost]


def in_range(src: Location, dst: Location, conn_type: ConnectionType) -> bool:
    return math.dist(src, dst) <= conn_type.range_m


def latency(conn_type: ConnectionType, size_bytes: int) -> int:
    """Propagation plus transmission time, rounded up to whole seconds."""
    return conn_type.propagation_s + -(-size_bytes // conn_type.bandwidth_Bps)


def signal_loss(strength: float, base_loss: float) -> float:
    return max(base_loss, 1.0 - strength)


@dataclass
class NetworkConnection:
    conn_type: ConnectionType
    strength: float = 1.0
    base_loss: float = 0.0
    loss_probability: float = field(init=False)
    # Disjoint, sorted [start, end) windows
    outage_windows: List[Tuple[SimTime, SimTime]] = field(default_factory=list)
    # Informational label for the traffic-management protocol
    protocol: Optional[str] = None
    sent: int = 0
    delivered: int = 0
    lost: int = 0

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise OutOfRange(f"signal strength {self.strength} outside [0, 1]")
        if not 0.0 <= self.base_loss <= 1.0:
            raise OutOfRange(f"base loss {self.base_loss} outside [0, 1]")
        self.loss_probability = signal_loss(self.strength, self.base_loss)

    def add_outage(self, start: SimTime, end: SimTime) -> None:
        if end <= start:
            raise ValueError(f"empty outage window [{start}, {end})")
        i = bisect.bisect_left(self.outage_windows, (start, end))
        before = self.outage_windows[i - 1] if i > 0 else None
        after = self.outage_windows[i] if i < len(self.outage_windows) else None
        if (before and before[1] > start) or (after and after[0] < end):
            raise ValueError(f"outage window [{start}, {end}) overlaps an existing one")
        self.outage_windows.insert(i, (start, end))

    def in_outage(self, now: SimTime) -> bool:
        i = bisect.bisect_right(self.outage_windows, (now, math.inf)) - 1
        return i >= 0 and self.outage_windows[i][0] <= now < self.outage_windows[i][1]


def set_signal(conn: NetworkConnection, strength: float) -> None:
    if not 0.0 <= strength <= 1.0:
        raise OutOfRange(f"signal strength {strength} outside [0, 1]")
    conn.strength = strength
    conn.loss_probability = signal_loss(strength, conn.base_loss)


def transmit(
    conn: NetworkConnection, packet: DataPacket, now: SimTime, rng: RandomStream
) -> Outcome:
    conn.sent += 1
    if conn.in_outage(now):
        conn.lost += 1
        return Lost(LossReason.OUTAGE)
    p = conn.loss_probability
    if p >= 1.0 or (p > 0.0 and rng.random() < p):
        conn.lost += 1
        return Lost(LossReason.DROP)
    conn.delivered += 1
    return DeliveredAt(now + latency(conn.conn_type, packet.size_bytes))
