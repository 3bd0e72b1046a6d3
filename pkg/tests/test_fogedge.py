from decimal import Decimal

import pytest

from src.fogedge.edge import Downsample, EdgeDevice, Passthrough, ThresholdFilter
from src.fogedge.fog import FogNode
from src.kernel.engine import Simulation
from src.network.packets import AggregatedRecord, Reading, Readings
from src.nodes.gateway import GatewayNode
from src.nodes.power import Battery

from tests.conftest import connection, datacenter, sensor


def record(**values) -> AggregatedRecord:
    return AggregatedRecord(
        "G", 3600, 1, 1, {m: tuple(Decimal(str(v)) for v in vs) for m, vs in values.items()}
    )


class TestEdgeProcessing:
    @pytest.fixture
    def edge(self, sim):
        return sim.register(EdgeDevice("E", connection(), mips=0.001, cloud="DC"))

    def test_processing_delay_scales_with_readings(self, edge):
        assert edge.processing_delay(record(temp=[1, 2, 3])) == 3
        assert edge.processing_delay(record(temp=[1])) == 1

    def test_passthrough_is_the_default(self, edge):
        rec = record(temp=[1])
        assert edge.processing == Passthrough()
        assert edge.edge_process(rec, 0) is rec

    def test_downsample_keeps_every_kth_round(self, edge):
        edge.processing = Downsample(2)
        kept = [edge.edge_process(record(temp=[i]), 0) is not None for i in range(4)]
        assert kept == [False, True, False, True]

    def test_threshold_filter_drops_values_and_empty_metrics(self, edge):
        edge.processing = ThresholdFilter(Decimal(2), Decimal(3))
        out = edge.edge_process(record(temp=[1, 2, 3, 4], rain=[9]), 0)
        assert out.values == {"temp": (Decimal(2), Decimal(3))}
        assert edge.edge_process(record(temp=[7]), 0) is None

    def test_invalid_configurations(self):
        with pytest.raises(ValueError):
            Downsample(0)
        with pytest.raises(ValueError):
            ThresholdFilter(Decimal(3), Decimal(1))
        with pytest.raises(ValueError):
            EdgeDevice("E", connection(), mips=1000)
        with pytest.raises(ValueError):
            EdgeDevice("E", connection(), mips=0, cloud="DC")


def test_edge_fans_out_to_cloud_and_iot_targets(sim):
    dc = datacenter(sim)
    sim.register(GatewayNode("G", connection(), forward_target="E"))
    sim.register(EdgeDevice("E", connection(), mips=0.001, cloud="DC", iot="L"))
    sim.register(FogNode("L", connection(), mips=1000, next_hop="DC2"))
    dc2 = datacenter(sim, "DC2")
    sim.register(sensor("S1", [4], "G")).start()
    sim.run()
    assert len(dc.store) == 4
    assert len(dc2.store) == 4
    first = dc.store.records()[0]
    # sensor 2s, gateway hop 2s, one reading of processing 1s, edge hop 2s
    assert first["stored_at"] == 3600 + 2 + 2 + 1 + 2


def stored_values(layer: str):
    sim = Simulation(seed=11, horizon=2 * 86400, settle=3600)
    dc = datacenter(sim)
    first_hop = {"none": "DC", "fog": "F", "edge": "E"}[layer]
    sim.register(GatewayNode("G", connection(), forward_target=first_hop))
    if layer == "fog":
        sim.register(FogNode("F", connection(), mips=2000, next_hop="DC"))
    if layer == "edge":
        sim.register(EdgeDevice("E", connection(), mips=1000, processing=Passthrough(), cloud="DC"))
    for i, values in enumerate(([1, 2, 3], ["0.5", "1.5"], [10, 20, 30, 40]), start=1):
        sim.register(sensor(f"S{i}", values, "G", interval=6 * 3600)).start()
    stats = sim.run()
    return dc.store.stored_values(), stats


def test_fog_and_edge_layers_are_optional():
    direct, direct_stats = stored_values("none")
    assert len(direct) == 3 * 8
    for layer in ("fog", "edge"):
        layered, stats = stored_values(layer)
        assert layered == direct
        assert stats.packets_sent > direct_stats.packets_sent
        assert stats.packets_lost == 0


def sent_sizes(sim, subject: str):
    return [r.detail["size"] for r in sim.trace.of_kind("packet_sent") if r.subject == subject]


def test_battery_edge_pays_transmit_energy_per_target(sim):
    datacenter(sim)
    datacenter(sim, "DC2")
    edge = sim.register(EdgeDevice("E", connection(), mips=1000, cloud="DC", iot="DC2", power=Battery(10.0)))
    source = sim.register(sensor("S1", [1], "E"))
    source.send(Readings((Reading("S1", "temp", Decimal(1), 0),)))
    sim.run()

    inbound, outbound = sent_sizes(sim, "S1"), sent_sizes(sim, "E")
    assert len(outbound) == 2
    rates = edge.connection.conn_type
    spent = 10.0 - edge.power.level_J
    expected = inbound[0] * rates.rx_energy_J_per_byte + sum(outbound) * rates.tx_energy_J_per_byte
    assert spent == pytest.approx(expected)
    assert spent > inbound[0] * rates.rx_energy_J_per_byte + outbound[0] * rates.tx_energy_J_per_byte


def test_battery_gateway_pays_transmit_energy_when_forwarding(sim):
    datacenter(sim)
    gw = sim.register(GatewayNode("G", connection(), forward_target="DC", power=Battery(10.0)))
    upstream = sim.register(GatewayNode("G0", connection(), forward_target="G"))
    upstream.send(record(temp=[1, 2]))
    sim.run()

    inbound, outbound = sent_sizes(sim, "G0"), sent_sizes(sim, "G")
    rates = gw.connection.conn_type
    expected = inbound[0] * rates.rx_energy_J_per_byte + outbound[0] * rates.tx_energy_J_per_byte
    assert 10.0 - gw.power.level_J == pytest.approx(expected)
