"""Physical hosts, virtual machines and cloudlets (space-shared execution)."""

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, FrozenSet, List, Optional

from src.core.errors import OutOfRange


@dataclass(frozen=True)
class VMSpec:
    vm_id: str
    pes: int = 2
    mips_per_pe: float = 2400.0
    ram_bytes: int = 8 * 2**30
    storage_bytes: int = 0
    # Service types this VM serves; None serves every type
    services: Optional[FrozenSet[str]] = None

    def __post_init__(self):
        if self.pes < 1 or self.mips_per_pe <= 0:
            raise OutOfRange(f"VM {self.vm_id}: pes and mips_per_pe must be positive")


@dataclass
class PhysicalHost:
    host_id: str
    pes: int = 12
    mips_per_pe: float = 3000.0
    ram_bytes: int = 256 * 2**30
    storage_bytes: int = 2**40
    idle_W: float = 100.0
    full_W: float = 250.0
    vm_slots: Optional[int] = None
    vms: List["VirtualMachine"] = field(default_factory=list)
    busy_pe_seconds: int = 0

    def __post_init__(self):
        if self.pes < 1 or self.mips_per_pe <= 0:
            raise OutOfRange(f"host {self.host_id}: pes and mips_per_pe must be positive")
        if self.full_W < self.idle_W:
            raise OutOfRange(f"host {self.host_id}: full-load power below idle power")

    @property
    def used_pes(self) -> int:
        return sum(vm.pes for vm in self.vms)

    @property
    def used_mips(self) -> float:
        return sum(vm.pes * vm.mips_per_pe for vm in self.vms)

    def fits(self, spec: VMSpec) -> bool:
        if self.vm_slots is not None and len(self.vms) >= self.vm_slots:
            return False
        if spec.mips_per_pe > self.mips_per_pe:
            return False
        return (
            self.used_pes + spec.pes <= self.pes
            and self.used_mips + spec.pes * spec.mips_per_pe <= self.pes * self.mips_per_pe
            and sum(vm.ram_bytes for vm in self.vms) + spec.ram_bytes <= self.ram_bytes
            and sum(vm.storage_bytes for vm in self.vms) + spec.storage_bytes <= self.storage_bytes
        )

    def energy_J(self, total_seconds: int) -> float:
        """Idle draw for the whole run plus the load-proportional share for busy PE-seconds."""
        return self.idle_W * total_seconds + (self.full_W - self.idle_W) * self.busy_pe_seconds / self.pes


@dataclass
class IoTCloudlet:
    cloudlet_id: str
    length_mi: float
    service_type: str
    submitted_at: int
    started_at: Optional[int] = None
    completed_at: Optional[int] = None
    vm_id: Optional[str] = None

    @property
    def wait_s(self) -> Optional[int]:
        return None if self.started_at is None else self.started_at - self.submitted_at


@dataclass
class VirtualMachine:
    vm_id: str
    pes: int
    mips_per_pe: float
    ram_bytes: int
    storage_bytes: int
    host: PhysicalHost
    services: Optional[FrozenSet[str]] = None
    run_queue: Deque[IoTCloudlet] = field(default_factory=deque)
    running: Optional[IoTCloudlet] = None
    completed: int = 0

    @classmethod
    def place(cls, spec: VMSpec, host: PhysicalHost) -> "VirtualMachine":
        vm = cls(spec.vm_id, spec.pes, spec.mips_per_pe, spec.ram_bytes, spec.storage_bytes, host, spec.services)
        host.vms.append(vm)
        return vm

    def serves(self, service_type: str) -> bool:
        return self.services is None or service_type in self.services

    @property
    def load(self) -> int:
        return len(self.run_queue) + (1 if self.running is not None else 0)

    def duration(self, length_mi: float) -> int:
        return math.ceil(length_mi / (self.pes * self.mips_per_pe))
