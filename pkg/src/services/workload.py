import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

from src.cloud.broker import Broker
from src.kernel.engine import Entity
from src.kernel.events import WorkloadTick
from src.network.packets import ServiceRequest

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RuntimeWorkload:
    intervals: int
    interval_length_s: int
    # service type -> requests submitted at the start of every interval
    requests: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.intervals < 0 or self.interval_length_s <= 0:
            raise ValueError("workload needs intervals >= 0 and interval_length_s > 0")
        if any(count < 0 for count in self.requests.values()):
            raise ValueError("workload request counts must be >= 0")

    @property
    def total_requests(self) -> int:
        return self.intervals * sum(self.requests.values())


class WorkloadDriver(Entity):
    """Submits a runtime workload to one broker, interval by interval."""

    kind = "workload"
    handlers = {WorkloadTick: "on_tick"}

    def __init__(self, driver_id: str, workload: RuntimeWorkload, broker: Broker):
        super().__init__(driver_id)
        self.workload = workload
        self.broker = broker
        self.submitted = 0

    def start(self) -> None:
        if self.workload.intervals > 0:
            self.sim.schedule(0, self.entity_id, WorkloadTick(0))

    def on_tick(self, event) -> None:
        interval = event.payload.interval
        now = self.sim.now
        for service_type, count in self.workload.requests.items():
            for n in range(count):
                request = ServiceRequest(f"{self.entity_id}-i{interval}-{service_type}-{n}", service_type, self.entity_id, now)
                self.broker.submit_request(request, now)
                self.submitted += 1
        nxt = interval + 1
        t = nxt * self.workload.interval_length_s
        if nxt < self.workload.intervals and self.sim.within_horizon(t):
            self.sim.schedule(t, self.entity_id, WorkloadTick(nxt))


def generate_workload(w: RuntimeWorkload, broker: Broker, driver_id: Optional[str] = None) -> WorkloadDriver:
    for service_type in w.requests:
        broker.registry.get(service_type)
    driver = WorkloadDriver(driver_id or f"{broker.entity_id}.workload", w, broker)
    broker.sim.register(driver)
    driver.start()
    logger.debug(f"Workload {driver.entity_id}: {w.intervals} x {w.interval_length_s}s, {w.total_requests} requests")
    return driver
