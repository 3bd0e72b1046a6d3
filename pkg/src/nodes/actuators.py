import logging
from dataclasses import dataclass
from typing import List, Optional, Union

from src.core.errors import DeadTarget
from src.kernel.engine import Entity, Simulation
from src.nodes.base import Node

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NodeFailed:
    node: str


@dataclass(frozen=True)
class SignalLost:
    node: str


Trigger = Union[NodeFailed, SignalLost]

TRIGGERS = {"failure": NodeFailed, "signal_lost": SignalLost}


class Actuator(Entity):
    """
    Rewires forwarding targets when a watched node fails or loses its signal.

    Affected nodes are the explicit ``rewire`` list, or by default every node
    currently forwarding to the watched node. The change applies to packets
    emitted after the trigger.
    """

    kind = "actuator"
    handlers = {}

    def __init__(
        self,
        actuator_id: str,
        watch: str,
        to: str,
        on: str = "failure",
        rewire: Optional[List[str]] = None,
    ):
        super().__init__(actuator_id)
        if on not in TRIGGERS:
            raise ValueError(f"{actuator_id}: unknown trigger {on!r}")
        self.watch = watch
        self.to = to
        self.on = on
        self.rewire = list(rewire) if rewire else None
        self.actions = 0

    def attach(self, sim: Simulation, index: int) -> None:
        super().attach(sim, index)
        sim.watch(self.watch, self.on_trigger)

    def on_trigger(self, trigger_kind: str, node_id: str) -> None:
        if trigger_kind != self.on:
            return
        try:
            self.act(TRIGGERS[trigger_kind](node_id), self.to)
        except DeadTarget as e:
            logger.warning(f"{self.entity_id}: {e}")
            self.sim.emit("error", self.entity_id, error="DeadTarget", message=str(e))

    def affected(self, watched: str) -> List[Node]:
        entities = self.sim.entities
        if self.rewire is not None:
            return [entities[n] for n in self.rewire if isinstance(entities.get(n), Node)]
        return [e for e in entities.values() if isinstance(e, Node) and e.forward_target == watched]

    def act(self, trigger: Trigger, new_target: str) -> None:
        target = self.sim.entities.get(new_target)
        if target is None or not getattr(target, "alive", True):
            raise DeadTarget(new_target)
        cause = "failure" if isinstance(trigger, NodeFailed) else "signal_lost"
        for node in self.affected(trigger.node):
            if node.forward_target == new_target:
                self.sim.emit("action", self.entity_id, trigger=cause, node=node.entity_id, target=new_target, noop=True)
                continue
            old = node.forward_target
            node.forward_target = new_target
            self.actions += 1
            self.sim.emit(
                "action", self.entity_id, trigger=cause, node=node.entity_id, old=old or "-", target=new_target
            )
            logger.info(f"{self.entity_id}: rerouted {node.entity_id} {old} -> {new_target} at t={self.sim.now}")
        self.sim.topology_version += 1
