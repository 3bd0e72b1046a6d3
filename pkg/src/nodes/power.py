"""
Power sources and battery accounting.

Only ``Battery`` ever depletes. USB charging points and continuous supplies
report an infinite remaining level.
"""

import math
from dataclasses import dataclass
from typing import Optional, Union

from src.core.errors import OutOfRange

# Slack for float accumulation when a battery is sized for an exact number of cycles
EPSILON_J = 1e-9


@dataclass(frozen=True, slots=True)
class Remaining:
    level_J: float


@dataclass(frozen=True, slots=True)
class Depleted:
    pass


DrainOutcome = Union[Remaining, Depleted]


@dataclass
class Battery:
    capacity_J: float
    level_J: Optional[float] = None
    depleted: bool = False

    def __post_init__(self):
        if self.capacity_J <= 0:
            raise OutOfRange(f"battery capacity {self.capacity_J} must be > 0")
        if self.level_J is None:
            self.level_J = self.capacity_J
        if not 0 <= self.level_J <= self.capacity_J:
            raise OutOfRange(f"battery level {self.level_J} outside [0, {self.capacity_J}]")

    @property
    def percent(self) -> float:
        return round(100.0 * self.level_J / self.capacity_J, 2)


@dataclass
class UsbCharging:
    @property
    def percent(self) -> None:
        return None


@dataclass
class ContinuousSupply:
    @property
    def percent(self) -> None:
        return None


PowerSource = Union[Battery, UsbCharging, ContinuousSupply]


def drain(power: PowerSource, cost_J: float, now: int = 0) -> DrainOutcome:
    if cost_J < 0:
        raise OutOfRange(f"negative energy cost {cost_J}")
    if not isinstance(power, Battery):
        return Remaining(math.inf)
    if power.depleted:
        return Depleted()
    if power.level_J < cost_J - EPSILON_J:
        power.level_J = 0.0
        power.depleted = True
        return Depleted()
    power.level_J = max(0.0, power.level_J - cost_J)
    return Remaining(power.level_J)
