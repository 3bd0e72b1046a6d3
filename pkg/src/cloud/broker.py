"""
Per-datacenter broker: VM placement and service-request scheduling.

Placement is first-fit over hosts in declaration order. Requests become
cloudlets that queue FIFO on the least-loaded VM serving their type (ties go
to the VM declared first) and run space-shared, one at a time per VM.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Union

from src.kernel.engine import Entity
from src.kernel.events import CloudletCompletion
from src.cloud.resources import IoTCloudlet, PhysicalHost, VirtualMachine, VMSpec
from src.network.packets import ServiceRequest
from src.services.types import ServiceRegistry

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Placed:
    host_id: str


@dataclass(frozen=True)
class Rejected:
    reason: str = "no host has capacity"


ProvisionOutcome = Union[Placed, Rejected]


class Broker(Entity):
    kind = "broker"
    handlers = {CloudletCompletion: "on_completion"}

    def __init__(self, broker_id: str, hosts: List[PhysicalHost], registry: ServiceRegistry):
        super().__init__(broker_id)
        self.hosts = hosts
        self.registry = registry
        self.vms: List[VirtualMachine] = []
        self.vm_index: Dict[str, VirtualMachine] = {}
        self.cloudlets: Dict[str, IoTCloudlet] = {}
        self.completed: List[IoTCloudlet] = []
        self.unserved = 0
        self.rejected = 0
        self._cloudlet_seq = 0
        # Hosts before this index have no free slot or PE left
        self._first_open = 0

    # Placement

    def _full(self, host: PhysicalHost) -> bool:
        slots_full = host.vm_slots is not None and len(host.vms) >= host.vm_slots
        return slots_full or host.used_pes >= host.pes

    def provision(self, spec: VMSpec) -> ProvisionOutcome:
        while self._first_open < len(self.hosts) and self._full(self.hosts[self._first_open]):
            self._first_open += 1
        for host in self.hosts[self._first_open :]:
            if host.fits(spec):
                vm = VirtualMachine.place(spec, host)
                self.vms.append(vm)
                self.vm_index[vm.vm_id] = vm
                self.sim.emit("provision", spec.vm_id, host=host.host_id, pes=spec.pes, result="placed")
                return Placed(host.host_id)
        self.rejected += 1
        self.sim.emit("provision", spec.vm_id, pes=spec.pes, result="rejected")
        logger.debug(f"{self.entity_id}: no host can take VM {spec.vm_id}")
        return Rejected()

    def deprovision(self, vm_id: str) -> bool:
        vm = self.vm_index.get(vm_id)
        if vm is None or vm.load:
            return False
        vm.host.vms.remove(vm)
        self.vms.remove(vm)
        del self.vm_index[vm_id]
        self._first_open = min(self._first_open, self.hosts.index(vm.host))
        return True

    # Scheduling

    def least_loaded(self, service_type: str) -> Optional[VirtualMachine]:
        best = None
        for vm in self.vms:
            if vm.serves(service_type) and (best is None or vm.load < best.load):
                best = vm
                if best.load == 0:
                    break
        return best

    def submit_request(self, req: ServiceRequest, now: int) -> Optional[IoTCloudlet]:
        service_type = self.registry.get(req.service_type)
        self._cloudlet_seq += 1
        cloudlet = IoTCloudlet(
            f"{self.entity_id}-c{self._cloudlet_seq}", service_type.demand_mi, service_type.type_id, now
        )
        vm = self.least_loaded(service_type.type_id)
        if vm is None:
            self.unserved += 1
            logger.warning(f"{self.entity_id}: no VM serves {service_type.type_id}, request {req.request_id} dropped")
            self.sim.emit("error", self.entity_id, error="Unserved", request=req.request_id, service=req.service_type)
            return None
        cloudlet.vm_id = vm.vm_id
        self.cloudlets[cloudlet.cloudlet_id] = cloudlet
        vm.run_queue.append(cloudlet)
        if vm.running is None:
            self._start_next(vm, now)
        return cloudlet

    def execute(self, vm: VirtualMachine, cl: IoTCloudlet, now: int) -> int:
        duration = vm.duration(cl.length_mi)
        cl.started_at = now
        vm.running = cl
        vm.host.busy_pe_seconds += vm.pes * duration
        self.sim.schedule(now + duration, self.entity_id, CloudletCompletion(cl.cloudlet_id, vm.vm_id))
        return now + duration

    def _start_next(self, vm: VirtualMachine, now: int) -> None:
        if vm.run_queue:
            self.execute(vm, vm.run_queue.popleft(), now)

    def on_completion(self, event) -> None:
        now = self.sim.now
        vm = self.vm_index[event.payload.vm_id]
        cl = self.cloudlets.pop(event.payload.cloudlet_id)
        cl.completed_at = now
        vm.running = None
        vm.completed += 1
        self.completed.append(cl)
        self.sim.emit(
            "cloudlet_done",
            cl.cloudlet_id,
            vm=vm.vm_id,
            service=cl.service_type,
            submitted=cl.submitted_at,
            started=cl.started_at,
            wait=cl.wait_s,
        )
        self._start_next(vm, now)
