import logging
from typing import List, Optional, Tuple

from src.core.errors import DepletedNode, NoForwardTarget, OutOfRange
from src.kernel.events import MoveWaypoint, SenseTick
from src.kernel.rng import RandomStream
from src.network.connections import NetworkConnection
from src.network.packets import Location, Reading, Readings
from src.nodes.base import Node
from src.scenario.datasets import (
    DatasetHandle,
    RandomInRange,
    SelectionMode,
    Sequential,
    Waypoint,
    check_waypoints,
    next_value,
    waypoint_at,
)

logger = logging.getLogger(__name__)


class SensorNode(Node):
    kind = "sensor"
    handlers = {**Node.handlers, SenseTick: "on_sense"}

    def __init__(
        self,
        node_id: str,
        connection: NetworkConnection,
        metric: str,
        reading_interval_s: int,
        dataset: DatasetHandle,
        selection: Optional[SelectionMode] = None,
        **common,
    ):
        super().__init__(node_id, connection, **common)
        if reading_interval_s <= 0:
            raise OutOfRange(f"{node_id}: reading interval must be > 0, got {reading_interval_s}")
        self.metric = metric
        self.reading_interval_s = int(reading_interval_s)
        self.dataset = dataset
        self.selection = selection or Sequential()
        if not isinstance(self.selection, RandomInRange):
            dataset.require_values()

    def start(self) -> None:
        self._schedule_tick(self.reading_interval_s)

    def _schedule_tick(self, t: int) -> None:
        if self.sim.within_horizon(t):
            self.pending["sense"] = self.sim.schedule(t, self.entity_id, SenseTick())

    def cycle_cost(self, payload: Readings) -> float:
        """Energy of one sense + transmit cycle."""
        return self.defaults.sense_J + self.transmit_cost(payload)

    def sense(self, now: int, rng: RandomStream) -> Reading:
        if not self.alive:
            raise DepletedNode(f"{self.entity_id} is silent")
        value = next_value(self.dataset, self.selection, rng)
        sample = Readings((Reading(self.entity_id, self.metric, value, now, self.location),))
        if not self.charge(self.cycle_cost(sample)):
            raise DepletedNode(f"{self.entity_id} ran out of energy at t={now}")

        reading = Reading(self.entity_id, self.metric, value, now, self.location, self.battery_pct)
        self.sim.packets.readings_emitted += 1
        self.sim.emit(
            "sense",
            self.entity_id,
            metric=self.metric,
            value=value,
            battery=reading.battery_pct if reading.battery_pct is not None else "-",
        )
        self._schedule_tick(now + self.reading_interval_s)
        self.send(Readings((reading,)))
        return reading

    def on_sense(self, event) -> None:
        self.pending.pop("sense", None)
        try:
            self.sense(self.sim.now, self.rng)
        except DepletedNode as e:
            logger.debug(str(e))
        except NoForwardTarget as e:
            self.report_error(e)


class MobileSensor(SensorNode):
    """A sensor whose location follows a waypoint trajectory (step policy)."""

    kind = "mobile_sensor"
    handlers = {**SensorNode.handlers, MoveWaypoint: "on_move"}

    def __init__(self, node_id: str, connection: NetworkConnection, trajectory: List[Waypoint], **kwargs):
        super().__init__(node_id, connection, **kwargs)
        self.trajectory = check_waypoints(list(trajectory), node_id)
        first = waypoint_at(self.trajectory, 0)
        if first is not None:
            self.location = first.location

    def start(self) -> None:
        super().start()
        self._schedule_move(0)

    def _schedule_move(self, index: int) -> None:
        while index < len(self.trajectory) and self.trajectory[index].t <= 0:
            index += 1
        if index < len(self.trajectory) and self.sim.within_horizon(self.trajectory[index].t):
            self.pending["move"] = self.sim.schedule(
                self.trajectory[index].t, self.entity_id, MoveWaypoint(index)
            )

    def move_to(self, now: int) -> Location:
        wp = waypoint_at(self.trajectory, now)
        if wp is not None:
            self.location = wp.location
        return self.location

    def on_move(self, event) -> None:
        self.pending.pop("move", None)
        if not self.alive:
            return
        x, y, z = self.move_to(self.sim.now)
        self.sim.emit("move", self.entity_id, x=x, y=y, z=z)
        self._schedule_move(event.payload.index + 1)


class RandomWalkSensor(SensorNode):
    """A sensor that takes a bounded random step every ``step_s`` seconds.

    Displacements are drawn from the node's seeded stream, so a walk replays
    exactly under the same seed.
    """

    kind = "mobile_sensor"
    handlers = {**SensorNode.handlers, MoveWaypoint: "on_move"}

    def __init__(
        self,
        node_id: str,
        connection: NetworkConnection,
        step_s: int,
        max_step_m: float,
        bounds: Tuple[Tuple[float, float], Tuple[float, float]],
        **kwargs,
    ):
        super().__init__(node_id, connection, **kwargs)
        if step_s <= 0 or max_step_m <= 0:
            raise OutOfRange(f"{node_id}: random walk needs a positive step and distance")
        self.step_s = int(step_s)
        self.max_step_m = float(max_step_m)
        self.bounds = bounds
        x, y, z = self.location
        self.location = (_clamp(x, bounds[0]), _clamp(y, bounds[1]), z)

    def start(self) -> None:
        super().start()
        self._schedule_move(1)

    def _schedule_move(self, index: int) -> None:
        t = index * self.step_s
        if self.sim.within_horizon(t):
            self.pending["move"] = self.sim.schedule(t, self.entity_id, MoveWaypoint(index))

    def step(self, rng: RandomStream) -> Location:
        x, y, z = self.location
        dx = rng.uniform(-self.max_step_m, self.max_step_m)
        dy = rng.uniform(-self.max_step_m, self.max_step_m)
        self.location = (_clamp(x + dx, self.bounds[0]), _clamp(y + dy, self.bounds[1]), z)
        return self.location

    def on_move(self, event) -> None:
        self.pending.pop("move", None)
        if not self.alive:
            return
        x, y, z = self.step(self.rng)
        self.sim.emit("move", self.entity_id, x=round(x, 3), y=round(y, 3), z=z)
        self._schedule_move(event.payload.index + 1)


def _clamp(value: float, bounds: Tuple[float, float]) -> float:
    low, high = bounds
    return min(max(value, low), high)
