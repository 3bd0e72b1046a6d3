from dataclasses import dataclass
from typing import Dict, Iterable, Optional

from src.core.errors import UnknownServiceType


@dataclass(frozen=True)
class IoTServiceType:
    type_id: str
    name: str
    demand_mi: float

    def __post_init__(self):
        if self.demand_mi < 0:
            raise ValueError(f"service type {self.type_id}: demand_mi must be >= 0")


class ServiceRegistry:
    def __init__(self, types: Optional[Iterable[IoTServiceType]] = None):
        self._types: Dict[str, IoTServiceType] = {}
        for service_type in types or ():
            self.register(service_type)

    def register(self, service_type: IoTServiceType) -> None:
        self._types[service_type.type_id] = service_type

    def get(self, type_id: str) -> IoTServiceType:
        try:
            return self._types[type_id]
        except KeyError:
            raise UnknownServiceType(type_id) from None

    def __contains__(self, type_id: str) -> bool:
        return type_id in self._types

    def __len__(self) -> int:
        return len(self._types)
