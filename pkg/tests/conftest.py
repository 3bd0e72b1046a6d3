from decimal import Decimal
from typing import Iterable, List

import pytest

from src.cloud.datacenter import IoTDatacenter
from src.cloud.resources import PhysicalHost
from src.kernel.engine import Simulation
from src.kernel.trace import TraceRecord
from src.network.catalog import DEFAULTS, ConnectionKind
from src.network.connections import NetworkConnection
from src.scenario.datasets import inline_dataset
from src.nodes.sensors import SensorNode


def connection(kind: ConnectionKind = ConnectionKind.WIFI, **kwargs) -> NetworkConnection:
    return NetworkConnection(DEFAULTS.connection(kind), **kwargs)


def datacenter(sim: Simulation, dc_id: str = "DC", **kwargs) -> IoTDatacenter:
    dc = IoTDatacenter(dc_id, kwargs.pop("hosts", [PhysicalHost(f"{dc_id}-h1")]), **kwargs)
    sim.register(dc)
    sim.register(dc.broker)
    return dc


def sensor(
    node_id: str, values: Iterable, target: str, interval: int = 3600, metric: str = "temp", **kwargs
) -> SensorNode:
    return SensorNode(
        node_id,
        kwargs.pop("conn", None) or connection(),
        metric,
        interval,
        inline_dataset(values, node_id),
        forward_target=target,
        **kwargs,
    )


def details(records: List[TraceRecord], key: str) -> List:
    return [r.detail[key] for r in records]


def dec(text: str) -> Decimal:
    return Decimal(text)


@pytest.fixture
def sim():
    return Simulation(seed=7, horizon=4 * 3600, settle=600, keep_trace=True)
