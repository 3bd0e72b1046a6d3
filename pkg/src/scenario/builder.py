import logging
from decimal import Decimal
from typing import Dict, List, Optional

from src.cloud.datacenter import IoTDatacenter, StoreHook
from src.cloud.resources import PhysicalHost, VMSpec
from src.core.config import config
from src.core.errors import ScenarioInvalid
from src.fogedge.edge import Downsample, EdgeDevice, Passthrough, ThresholdFilter
from src.fogedge.fog import FogNode
from src.kernel.engine import Simulation
from src.kernel.events import NodeFailure, OutageEnd, OutageStart, SignalChange
from src.network.catalog import DefaultsTable
from src.network.connections import NetworkConnection
from src.nodes.actuators import Actuator
from src.nodes.gateway import GatewayNode
from src.nodes.links import LinkNode
from src.nodes.power import Battery, ContinuousSupply, UsbCharging
from src.nodes.sensors import MobileSensor, RandomWalkSensor, SensorNode
from src.scenario.datasets import (
    DatasetHandle,
    RandomInRange,
    RandomRow,
    Sequential,
    Waypoint,
    inline_dataset,
    load_dataset,
    load_trajectory,
)
from src.scenario.models import NodeModel, ScenarioSpec, SensorModel
from src.scenario.parser import check_scenario, effective_defaults
from src.services.alerts import AlertPolicy
from src.services.types import IoTServiceType, ServiceRegistry
from src.services.workload import RuntimeWorkload, generate_workload

logger = logging.getLogger(__name__)


def _power(decl: NodeModel):
    p = decl.power
    if p.kind == "battery":
        return Battery(p.capacity_J, p.level_J)
    if p.kind == "usb":
        return UsbCharging()
    return ContinuousSupply()


def _connection(decl: NodeModel, defaults: DefaultsTable) -> NetworkConnection:
    c = decl.connection
    return NetworkConnection(defaults.connection(c.kind), c.strength, c.base_loss, protocol=c.protocol)


def _common(decl: NodeModel) -> dict:
    return {
        "location": decl.location,
        "power": _power(decl),
        "name": decl.name,
        "coverage_m": decl.coverage_m,
    }


def _selection(sensor: SensorModel):
    s = sensor.selection_model
    if s.mode == "random":
        return RandomRow()
    if s.mode == "random_in_range":
        return RandomInRange(s.min, s.max)
    return Sequential()


class ScenarioBuilder:
    """Turns a validated scenario into a simulation with every entity registered and started."""

    def __init__(self, spec: ScenarioSpec, keep_trace: bool = False):
        self.spec = spec
        self.keep_trace = keep_trace
        self.defaults = effective_defaults(spec)
        self._datasets: Dict[str, DatasetHandle] = spec._datasets

    def dataset(self, sensor: SensorModel) -> DatasetHandle:
        ds = sensor.dataset
        if ds.values is not None:
            return inline_dataset(ds.values, f"{sensor.id}:inline")
        if ds.path not in self._datasets:
            self._datasets[ds.path] = load_dataset(ds.path)
        return self._datasets[ds.path].fork()

    def build(self, seed: Optional[int] = None, horizon: Optional[int] = None) -> Simulation:
        spec = self.spec
        settle = spec.settle if spec.settle is not None else config.SETTLE_SECONDS
        sim = Simulation(
            seed=spec.seed if seed is None else seed,
            horizon=spec.horizon if horizon is None else horizon,
            settle=settle,
            name=spec.name,
            keep_trace=self.keep_trace,
            defaults=self.defaults,
        )
        registry = ServiceRegistry(
            IoTServiceType(t.id, t.name or t.id, t.demand_mi) for t in spec.services.types
        )
        alerts = [AlertPolicy(a.metric, a.red_threshold, a.rise_epsilon) for a in spec.services.alerts]

        datacenters = self._build_datacenters(sim, registry, alerts)
        self._build_nodes(sim)
        self._build_actuators(sim)
        self._inject_failures(sim)

        for entity in list(sim.entities.values()):
            if isinstance(entity, SensorNode):
                entity.start()
        for w in spec.services.workloads:
            workload = RuntimeWorkload(w.intervals, w.interval, dict(w.requests))
            generate_workload(workload, datacenters[w.datacenter].broker)

        logger.info(
            f"Built scenario '{spec.name}': {spec.node_count()} nodes, {len(sim.entities)} entities, "
            f"seed={sim.seed}, horizon={sim.horizon}s"
        )
        return sim

    def _build_datacenters(self, sim, registry, alerts) -> Dict[str, IoTDatacenter]:
        built = {}
        for dc in self.spec.datacenters:
            hosts: List[PhysicalHost] = []
            for h in dc.hosts:
                for host_id in h.expanded_ids():
                    hosts.append(
                        PhysicalHost(
                            host_id, h.pes, h.mips_per_pe, h.ram_bytes, h.storage_bytes, h.idle_W, h.full_W, h.vm_slots
                        )
                    )
            hooks = [StoreHook(hook.service, hook.datacenter) for hook in dc.on_store]
            datacenter = IoTDatacenter(dc.id, hosts, registry, alerts, hooks, dc.location)
            sim.register(datacenter)
            sim.register(datacenter.broker)
            for vm in dc.vms:
                services = frozenset(vm.services) if vm.services is not None else None
                for vm_id in vm.expanded_ids():
                    datacenter.broker.provision(
                        VMSpec(vm_id, vm.pes, vm.mips_per_pe, vm.ram_bytes, vm.storage_bytes, services)
                    )
            built[dc.id] = datacenter
        return built

    def _build_nodes(self, sim: Simulation) -> None:
        spec, defaults = self.spec, self.defaults
        for fog in spec.fogs:
            sim.register(FogNode(fog.id, _connection(fog, defaults), fog.mips, fog.next_hop, **_common(fog)))
        for edge in spec.edges:
            p = edge.processing
            if p.kind == "downsample":
                processing = Downsample(p.k)
            elif p.kind == "threshold":
                processing = ThresholdFilter(Decimal(p.min), Decimal(p.max))
            else:
                processing = Passthrough()
            sim.register(
                EdgeDevice(
                    edge.id,
                    _connection(edge, defaults),
                    edge.mips,
                    edge.storage_bytes,
                    processing,
                    cloud=edge.cloud,
                    iot=edge.iot,
                    **_common(edge),
                )
            )
        for gw in spec.gateways:
            sim.register(
                GatewayNode(
                    gw.id,
                    _connection(gw, defaults),
                    round_timeout=gw.round_timeout,
                    forward_target=gw.target,
                    **_common(gw),
                )
            )
        for link in spec.links:
            sim.register(
                LinkNode(link.id, _connection(link, defaults), forward_target=link.target, **_common(link))
            )
        for sensor in spec.sensors:
            for node_id in sensor.expanded_ids():
                sim.register(self._sensor(node_id, sensor))

    def _sensor(self, node_id: str, sensor: SensorModel) -> SensorNode:
        kwargs = dict(
            metric=sensor.metric,
            reading_interval_s=sensor.interval,
            dataset=self.dataset(sensor),
            selection=_selection(sensor),
            forward_target=sensor.target,
            **_common(sensor),
        )
        connection = _connection(sensor, self.defaults)
        if sensor.trajectory is None:
            return SensorNode(node_id, connection, **kwargs)
        walk = sensor.trajectory.random_walk
        if walk is not None:
            return RandomWalkSensor(node_id, connection, walk.step, walk.max_step_m, (walk.x, walk.y), **kwargs)
        if sensor.trajectory.path is not None:
            waypoints = load_trajectory(sensor.trajectory.path)
        else:
            waypoints = [Waypoint(*wp) for wp in sensor.trajectory.waypoints]
        return MobileSensor(node_id, connection, waypoints, **kwargs)

    def _build_actuators(self, sim: Simulation) -> None:
        for act in self.spec.actuators:
            sim.register(Actuator(act.id, act.watch, act.to, act.on, act.rewire))

    def _inject_failures(self, sim: Simulation) -> None:
        for failure in self.spec.failures:
            if failure.kind == "node_failure":
                sim.schedule(failure.at, failure.node, NodeFailure())
            elif failure.kind == "signal":
                sim.schedule(failure.at, failure.node, SignalChange(failure.strength))
            else:
                node = sim.get(failure.node)
                node.connection.add_outage(failure.start, failure.end)
                sim.schedule(failure.start, failure.node, OutageStart(failure.end))
                sim.schedule(failure.end, failure.node, OutageEnd())


def build_simulation(
    spec: ScenarioSpec, seed: Optional[int] = None, horizon: Optional[int] = None, keep_trace: bool = False
) -> Simulation:
    """Validate (when not already done) and build a runnable simulation."""
    diagnostics = check_scenario(spec)
    if diagnostics:
        raise ScenarioInvalid(diagnostics, spec.name)
    return ScenarioBuilder(spec, keep_trace).build(seed, horizon)
