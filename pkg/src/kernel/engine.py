"""
Discrete-event engine: future-event list, clock, entity registry, run loop.

Events are dispatched strictly in (fire_at, seq) order, where seq is the
insertion counter. A run is single-threaded and owns all of its state.
"""

import logging
import time
from collections import defaultdict
from typing import Any, Callable, ClassVar, Dict, List, Optional

from src.core.config import config
from src.core.errors import HandlerFailure, PastTime, SimulationError
from src.core.events import EventBus
from src.kernel.events import Event, EventHandle, EntityId, SimTime
from src.kernel.queue import FutureEventList
from src.kernel.rng import RandomStream, master_stream, substream
from src.kernel.stats import MemoryGauge, PacketCounters, RunStats
from src.kernel.trace import TraceRecorder

logger = logging.getLogger(__name__)


class Entity:
    """Anything that can be the target of an event."""

    # payload type -> handler method name
    handlers: ClassVar[Dict[type, str]] = {}

    def __init__(self, entity_id: EntityId):
        self.entity_id = entity_id
        self.index = -1
        self.sim: Optional["Simulation"] = None
        self.rng: Optional[RandomStream] = None

    def attach(self, sim: "Simulation", index: int) -> None:
        self.sim = sim
        self.index = index
        self.rng = substream(sim.seed, index)

    def dispatch(self, event: Event) -> None:
        name = self.handlers.get(type(event.payload))
        if name is None:
            raise SimulationError(
                f"{type(self).__name__} {self.entity_id} has no handler for "
                f"{type(event.payload).__name__}"
            )
        getattr(self, name)(event)

    def on_run_end(self) -> None:
        """Called once when a run reaches its end, after the last event."""

    def energy_J(self, elapsed_s: SimTime) -> Optional[float]:
        """Energy drawn over ``elapsed_s`` simulated seconds, for entities that model it."""
        return None

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.entity_id})"


class Simulation:
    def __init__(
        self,
        seed: int = 0,
        horizon: Optional[SimTime] = None,
        settle: SimTime = 0,
        name: str = "simulation",
        keep_trace: bool = False,
        defaults: Any = None,
    ):
        self.name = name
        self.seed = seed
        self.horizon = horizon
        self.settle = settle
        self.end_time = None if horizon is None else horizon + settle
        self.defaults = defaults
        self.clock: SimTime = 0
        self.queue = FutureEventList()
        self._seq = 0
        self._packet_seq = 0
        self.entities: Dict[EntityId, Entity] = {}
        self.rng = master_stream(seed)
        self.bus = EventBus()
        self.trace = TraceRecorder(self.bus, keep=keep_trace)
        self.packets = PacketCounters()
        self.events_processed = 0
        self.finished = False
        self.watchers: Dict[EntityId, List[Callable[[str, EntityId], None]]] = defaultdict(list)
        # Bumped whenever forwarding targets change at run time
        self.topology_version = 0

    @property
    def now(self) -> SimTime:
        return self.clock

    # Registry

    def register(self, entity: Entity) -> Entity:
        if entity.entity_id in self.entities:
            raise SimulationError(f"duplicate entity id {entity.entity_id}")
        entity.attach(self, len(self.entities))
        self.entities[entity.entity_id] = entity
        return entity

    def get(self, entity_id: EntityId) -> Entity:
        return self.entities[entity_id]

    def watch(self, entity_id: EntityId, callback: Callable[[str, EntityId], None]) -> None:
        self.watchers[entity_id].append(callback)

    def notify(self, trigger: str, entity_id: EntityId) -> None:
        for callback in self.watchers.get(entity_id, ()):
            callback(trigger, entity_id)

    def next_packet_id(self) -> int:
        self._packet_seq += 1
        return self._packet_seq

    # Scheduling

    def schedule(self, fire_at: SimTime, target: EntityId, payload: Any) -> EventHandle:
        if fire_at < self.clock:
            raise PastTime(fire_at, self.clock)
        self._seq += 1
        event = Event(fire_at, self._seq, target, payload)
        self.queue.push(event)
        return EventHandle(event)

    def cancel(self, handle: EventHandle) -> bool:
        return self.queue.cancel(handle.event)

    def within_horizon(self, t: SimTime) -> bool:
        return self.horizon is None or t <= self.horizon

    def within_run(self, t: SimTime) -> bool:
        return self.end_time is None or t <= self.end_time

    # Trace

    def emit(self, kind: str, subject: str, **detail: Any) -> None:
        self.trace.emit(self.clock, kind, subject, detail)

    # Run loop

    def run(self, until: Optional[SimTime] = None, memory_source: Optional[str] = None) -> RunStats:
        """
        Dispatch events up to ``until`` (default: horizon + settle). A run that
        reaches its end gives every entity one ``on_run_end`` call; stopping
        earlier leaves the simulation resumable.
        """
        if until is None:
            until = self.end_time
        gauge = MemoryGauge(memory_source or config.MEMORY_SOURCE)
        gauge.start()
        started = time.perf_counter()
        logger.info(f"Run '{self.name}' started at t={self.clock} (until={until})")

        queue = self.queue
        entities = self.entities
        while True:
            next_time = queue.peek_time()
            if next_time is None or (until is not None and next_time > until):
                break
            event = queue.pop()
            self.clock = event.fire_at
            self.events_processed += 1
            try:
                entities[event.target].dispatch(event)
            except HandlerFailure:
                raise
            except Exception as e:
                logger.error(f"Handler failure: {e!r} on {event!r}")
                raise HandlerFailure(event, e) from e

        reached_end = until is None or (self.end_time is not None and until >= self.end_time)
        if reached_end and not self.finished:
            self.finished = True
            for entity in list(entities.values()):
                entity.on_run_end()

        wall_ms = (time.perf_counter() - started) * 1000.0
        peak, source = gauge.stop()
        stats = self.stats(wall_ms, peak, source)
        stats.check_conservation()
        logger.info(
            f"Run '{self.name}' finished at t={self.clock}: {stats.events_processed} events, "
            f"{stats.packets_sent} packets sent, {wall_ms:.1f} ms"
        )
        return stats

    def stats(self, wall_ms: float = 0.0, peak: int = 0, source: str = "none") -> RunStats:
        p = self.packets
        energy = {}
        for entity_id, entity in self.entities.items():
            joules = entity.energy_J(self.clock)
            if joules is not None:
                energy[entity_id] = round(joules, 3)
        return RunStats(
            events_processed=self.events_processed,
            final_time=self.clock,
            packets_sent=p.sent,
            packets_delivered=p.delivered,
            packets_lost=p.lost,
            packets_in_flight=p.in_flight,
            lost_by_reason=dict(sorted(p.lost_by_reason.items())),
            readings_emitted=p.readings_emitted,
            trace_counts=dict(sorted(self.trace.counts.items())),
            energy_J=energy,
            wall_clock_ms=wall_ms,
            peak_memory_bytes=peak,
            peak_memory_source=source,
            trace_hash=self.trace.digest,
        )
