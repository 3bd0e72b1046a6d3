"""
Green/yellow/red monitoring of a metric.

A reading at or above the red threshold is Red regardless of trend. Below
it, a strict rise beyond ``rise_epsilon`` counts as one more consecutive
rise: one rise is Green, two or more Yellow. Anything else resets the count
and the level to Normal.
"""

from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Optional, Tuple

from src.services.aggregation import Number, to_fraction


class AlertLevel(str, Enum):
    NORMAL = "normal"
    GREEN = "green"
    YELLOW = "yellow"
    RED = "red"


@dataclass(frozen=True)
class AlertPolicy:
    metric: str
    red_threshold: Fraction
    rise_epsilon: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "red_threshold", to_fraction(self.red_threshold))
        object.__setattr__(self, "rise_epsilon", to_fraction(self.rise_epsilon))
        if self.rise_epsilon < 0:
            raise ValueError(f"alert policy {self.metric}: rise_epsilon must be >= 0")


@dataclass(frozen=True)
class MonitorState:
    last_value: Optional[Fraction] = None
    consecutive_rises: int = 0
    level: AlertLevel = AlertLevel.NORMAL


def evaluate_alert(state: MonitorState, policy: AlertPolicy, reading: Number) -> Tuple[MonitorState, AlertLevel]:
    value = to_fraction(reading)
    rising = state.last_value is not None and value > state.last_value + policy.rise_epsilon
    rises = state.consecutive_rises + 1 if rising else 0
    if value >= policy.red_threshold:
        level = AlertLevel.RED
    elif rises >= 2:
        level = AlertLevel.YELLOW
    elif rises == 1:
        level = AlertLevel.GREEN
    else:
        level = AlertLevel.NORMAL
    new_state = replace(state, last_value=value, consecutive_rises=rises, level=level)
    return new_state, level
