from fractions import Fraction

import pytest

from src.cloud.datacenter import IoTDatacenter, StoreHook
from src.cloud.resources import PhysicalHost, VMSpec
from src.core.errors import EmptyInput, UnknownServiceType
from src.kernel.engine import Simulation
from src.nodes.gateway import GatewayNode
from src.services.aggregation import daily_average, exact_mean, report, round_mean
from src.services.alerts import AlertLevel, AlertPolicy, MonitorState, evaluate_alert
from src.services.types import IoTServiceType, ServiceRegistry

from tests.conftest import connection, dec, details, sensor


class TestAggregation:
    def test_report_rounds_half_up_away_from_zero(self):
        assert report(dec("0.125")) == dec("0.13")
        assert report(dec("-0.125")) == dec("-0.13")
        assert report(Fraction(1, 3)) == dec("0.33")
        assert report(Fraction(-11, 40)) == dec("-0.28")

    def test_round_mean_is_exact(self):
        exact, shown = round_mean([dec("0.1"), dec("0.2"), dec("0.2")])
        assert exact == Fraction(1, 6)
        assert shown == dec("0.17")

    def test_daily_average_rounds_only_once(self):
        # Rounding each mean first would give (0.13 + 0.12) / 2 = 0.13
        means = [Fraction(1, 8), Fraction(1, 8) - Fraction(1, 1000)]
        assert daily_average(means) == dec("0.12")

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            exact_mean([])
        with pytest.raises(EmptyInput):
            daily_average([])


def levels(values, red=25, epsilon=0):
    policy = AlertPolicy("precipitation", Fraction(red), Fraction(epsilon))
    state, out = MonitorState(), []
    for v in values:
        state, level = evaluate_alert(state, policy, dec(str(v)))
        out.append(level)
    return out


class TestAlerts:
    def test_rising_series_escalates_to_red(self):
        G, Y, R, N = AlertLevel.GREEN, AlertLevel.YELLOW, AlertLevel.RED, AlertLevel.NORMAL
        assert levels([0, 1, 2, 3, 30]) == [N, G, Y, Y, R]

    def test_yellow_never_precedes_green(self):
        seq = levels([0, "0.4", "2.1", "6.8", "14.5", "22.3", "9.7", "3.2", "1.5", "4.9", "11.6", "18.4", "26.7"])
        for i, level in enumerate(seq):
            if level is AlertLevel.YELLOW:
                assert seq[i - 1] in (AlertLevel.GREEN, AlertLevel.YELLOW)
        assert seq[-1] is AlertLevel.RED
        assert seq[6] is AlertLevel.NORMAL

    def test_red_regardless_of_trend(self):
        assert levels([40, 30, 25]) == [AlertLevel.RED] * 3

    def test_epsilon_ignores_small_rises(self):
        assert levels([1, "1.05", "1.2"], epsilon="0.1") == [AlertLevel.NORMAL, AlertLevel.NORMAL, AlertLevel.GREEN]

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValueError):
            AlertPolicy("rain", 10, -1)


def test_registry_lookup():
    reg = ServiceRegistry([IoTServiceType("mon", "monitoring", 2400)])
    assert "mon" in reg and len(reg) == 1
    assert reg.get("mon").demand_mi == 2400
    with pytest.raises(UnknownServiceType):
        reg.get("other")
    with pytest.raises(ValueError):
        IoTServiceType("bad", "bad", -1)


def test_datacenter_alerts_and_daily_averages():
    sim = Simulation(seed=3, horizon=2 * 86400, settle=3600, keep_trace=True)
    reg = ServiceRegistry([IoTServiceType("alert", "alert-analysis", 4800)])
    dc = IoTDatacenter(
        "DC",
        [PhysicalHost("h1")],
        registry=reg,
        alerts=[AlertPolicy("rain", 25)],
        on_store=[StoreHook("alert")],
    )
    sim.register(dc)
    sim.register(dc.broker)
    dc.broker.provision(VMSpec("v1", services=frozenset({"alert"})))
    sim.register(GatewayNode("G", connection(), forward_target="DC"))
    rain = [0, 1, 2, 3, 30, 0, 0, 0]
    sim.register(sensor("S1", rain, "G", interval=6 * 3600, metric="rain")).start()
    sim.run()

    alerts = sim.trace.of_kind("alert")
    assert details(alerts, "level") == ["green", "yellow", "red", "normal"]
    assert details(alerts, "previous") == ["normal", "green", "yellow", "red"]
    averages = sim.trace.of_kind("daily_avg")
    assert details(averages, "day") == [1, 2]
    assert details(averages, "rain") == [dec("1.50"), dec("7.50")]
    assert len(dc.broker.completed) == 8


def rain_datacenter(settle: int, rain, horizon: int = 2 * 86400):
    sim = Simulation(seed=3, horizon=horizon, settle=settle, keep_trace=True)
    dc = IoTDatacenter("DC", [PhysicalHost("h1")])
    sim.register(dc)
    sim.register(dc.broker)
    sim.register(GatewayNode("G", connection(), forward_target="DC"))
    sim.register(sensor("S1", rain, "G", interval=6 * 3600, metric="rain")).start()
    return sim, dc


def test_record_after_day_close_revises_the_average():
    # Without a settle window the midnight round lands after its day closed
    sim, dc = rain_datacenter(0, [0, 1, 2, 3, 4, 5, 6, 7])
    sim.run()

    averages = sim.trace.of_kind("daily_avg")
    assert details(averages, "day") == [1, 1, 2]
    assert details(averages, "rain") == [dec("1.00"), dec("1.50"), dec("5.00")]
    assert [r.detail.get("revised", False) for r in averages] == [False, True, False]
    assert dc.daily == {}


def test_daily_averages_with_settle_are_emitted_once():
    sim, dc = rain_datacenter(3600, [0, 1, 2, 3, 4, 5, 6, 7])
    sim.run()

    averages = sim.trace.of_kind("daily_avg")
    assert details(averages, "rain") == [dec("1.50"), dec("5.50")]
    assert not any("revised" in r.detail for r in averages)


def test_datacenter_reports_host_energy():
    sim, dc = rain_datacenter(3600, [0, 1, 2, 3])
    stats = sim.run()

    assert set(stats.energy_J) == {"DC"}
    assert stats.energy_J["DC"] == pytest.approx(dc.energy_J(sim.clock), abs=1e-3)
    assert stats.energy_J["DC"] >= dc.hosts[0].idle_W * sim.clock
