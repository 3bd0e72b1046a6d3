"""
IoT datacenters: store incoming aggregated records, keep the per-node
liveness ledger, evaluate alert policies on every stored round and produce
daily averages once a day has settled.

A day closes at ``day * 86400 + settle``, later if some gateway still holds
an open round of that day, in which case the boundary moves to that round's
flush plus the settle period. A record that still arrives for a closed day
reopens it and the day's average is emitted again, marked ``revised``, from
every round stored for it. Days left open when the run ends are closed then.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Set, Tuple

from src.cloud.broker import Broker
from src.cloud.resources import PhysicalHost
from src.cloud.store import RecordStore
from src.kernel.engine import Entity
from src.kernel.events import DayBoundary, PacketArrival
from src.network.packets import AggregatedRecord, DataPacket, Location, ServiceRequest
from src.nodes.base import record_arrival
from src.nodes.gateway import DAY_S, GatewayNode
from src.services.aggregation import daily_average, round_mean
from src.services.alerts import AlertLevel, AlertPolicy, MonitorState, evaluate_alert
from src.services.types import ServiceRegistry

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StoreHook:
    """Submit one request of ``service_type`` per stored record, to ``datacenter`` (default: self)."""

    service_type: str
    datacenter: Optional[str] = None


class IoTDatacenter(Entity):
    kind = "datacenter"
    handlers = {PacketArrival: "on_packet", DayBoundary: "on_day"}

    def __init__(
        self,
        dc_id: str,
        hosts: List[PhysicalHost],
        registry: Optional[ServiceRegistry] = None,
        alerts: Iterable[AlertPolicy] = (),
        on_store: Iterable[StoreHook] = (),
        location: Optional[Location] = None,
        db_path: str = ":memory:",
    ):
        super().__init__(dc_id)
        self.hosts = hosts
        self.registry = registry or ServiceRegistry()
        self.broker = Broker(f"{dc_id}.broker", hosts, self.registry)
        self.alerts = list(alerts)
        self.on_store = list(on_store)
        self.location = location
        self.store = RecordStore(db_path)
        self.alive = True
        # node -> (last time heard, last reported battery %)
        self.liveness: Dict[str, Tuple[int, Optional[float]]] = {}
        # (gateway, day) -> metric -> exact round means
        self.daily: Dict[Tuple[str, int], Dict[str, List[Fraction]]] = {}
        self.monitors: Dict[Tuple[str, str], MonitorState] = {}
        self._days_pending: Set[int] = set()
        self._days_closed: Set[int] = set()
        # (gateway, day) pairs whose average was already emitted
        self._reported: Set[Tuple[str, int]] = set()
        self._gateways: Optional[List[GatewayNode]] = None
        self._request_seq = 0

    def on_packet(self, event) -> None:
        packet: DataPacket = event.payload.packet
        if not record_arrival(self.sim, self.entity_id, packet, self.alive):
            return
        payload = packet.payload
        now = self.sim.now
        if isinstance(payload, AggregatedRecord):
            self.store_record(payload, now)
        elif isinstance(payload, ServiceRequest):
            self.broker.submit_request(payload, now)
        else:
            logger.debug(f"{self.entity_id}: ignoring {type(payload).__name__} from {packet.source}")

    def store_record(self, rec: AggregatedRecord, now: int) -> None:
        self.store.insert(rec, now)
        self.liveness[rec.gateway] = (now, self.liveness.get(rec.gateway, (now, None))[1])
        for node, (heard, battery) in rec.sources.items():
            self.liveness[node] = (heard, battery)

        means = self.daily.setdefault((rec.gateway, rec.day), defaultdict(list))
        for metric, values in rec.values.items():
            exact, _ = round_mean(values)
            means[metric].append(exact)
            self._evaluate_alerts(rec.gateway, metric, exact)
        self._schedule_day(rec.day, now)

        for hook in self.on_store:
            self._submit_hook(hook, rec, now)

    def _schedule_day(self, day: int, now: int) -> None:
        if day in self._days_pending:
            return
        self._days_pending.add(day)
        at = now if day in self._days_closed else max(now, day * DAY_S + self.sim.settle)
        self.sim.schedule(at, self.entity_id, DayBoundary(day))

    def _pending_flush(self, day: int) -> Optional[int]:
        if self._gateways is None:
            self._gateways = [e for e in self.sim.entities.values() if isinstance(e, GatewayNode)]
        times = [t for t in (gw.pending_flush(day) for gw in self._gateways) if t is not None]
        return max(times, default=None)

    def _evaluate_alerts(self, gateway: str, metric: str, value: Fraction) -> None:
        for policy in self.alerts:
            if policy.metric != metric:
                continue
            key = (gateway, metric)
            previous = self.monitors.get(key, MonitorState())
            state, level = evaluate_alert(previous, policy, value)
            self.monitors[key] = state
            if level is not previous.level:
                self.sim.emit("alert", gateway, metric=metric, previous=previous.level.value, level=level.value)
                if level is AlertLevel.RED:
                    logger.info(f"{self.entity_id}: red alert on {gateway}/{metric} at t={self.sim.now}")

    def _submit_hook(self, hook: StoreHook, rec: AggregatedRecord, now: int) -> None:
        target = self if hook.datacenter in (None, self.entity_id) else self.sim.get(hook.datacenter)
        self._request_seq += 1
        request = ServiceRequest(f"{self.entity_id}-r{self._request_seq}", hook.service_type, rec.gateway, now)
        target.broker.submit_request(request, now)

    def on_day(self, event) -> None:
        day = event.payload.day
        self._days_pending.discard(day)
        flush_at = self._pending_flush(day)
        if flush_at is not None:
            retry = max(flush_at, self.sim.now) + self.sim.settle
            if self.sim.within_run(retry):
                self._days_pending.add(day)
                self.sim.schedule(retry, self.entity_id, DayBoundary(day))
                return
        self.close_day(day)

    def close_day(self, day: int) -> None:
        self._days_closed.add(day)
        for key in sorted(k for k in self.daily if k[1] == day):
            gateway = key[0]
            means = self.daily.pop(key)
            revised = key in self._reported
            self._reported.add(key)
            if revised:
                means = self._stored_means(gateway, day)
                logger.info(f"{self.entity_id}: revising day {day} of {gateway} after a late record")
            averages = {metric: daily_average(values) for metric, values in sorted(means.items())}
            extra = {"revised": True} if revised else {}
            self.sim.emit("daily_avg", gateway, day=day, dc=self.entity_id, **extra, **averages)

    def _stored_means(self, gateway: str, day: int) -> Dict[str, List[Fraction]]:
        means: Dict[str, List[Fraction]] = defaultdict(list)
        for entry in self.store.records(gateway, day):
            for metric, values in entry["vals"].items():
                means[metric].append(round_mean(values)[0])
        return means

    def on_run_end(self) -> None:
        for day in sorted({d for _, d in self.daily}):
            self.close_day(day)

    def energy_J(self, elapsed_s: int) -> float:
        return sum(host.energy_J(elapsed_s) for host in self.hosts)
