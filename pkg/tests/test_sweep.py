import time
from unittest.mock import patch

import pandas as pd
import pytest

from src.cli.main import main
from src.cli.sweep import SWEEP_COLUMNS, cell_scenario, fit_trend, plan_cells, run_sweep, write_sweep
from src.cloud.broker import Rejected
from src.cloud.resources import VMSpec
from src.core.events import event_bus
from src.scenario.builder import build_simulation
from src.scenario.export import read_metrics
from src.scenario.presets import env_iot, jose

HOUR = 3600


def test_plan_cells_seeds_follow_cell_index():
    cells = plan_cells([1, 5, 10], [6 * HOUR], repeats=3, seed=100)
    assert len(cells) == 9
    assert [c.seed for c in cells] == list(range(100, 109))
    assert [(c.locations, c.repeat) for c in cells[:4]] == [(1, 1), (1, 2), (1, 3), (5, 1)]
    with pytest.raises(ValueError):
        plan_cells([1], [None], repeats=0, seed=0)
    with pytest.raises(ValueError):
        plan_cells([0], [None], repeats=1, seed=0)


def test_cell_scenario_overrides_interval_and_replicates():
    cell = plan_cells([3], [12 * HOUR], 1, 0)[0]
    spec = cell_scenario(env_iot().model_dump(), cell)
    assert spec.sensor_count() == 18
    assert {s.interval for s in spec.sensors} == {12 * HOUR}


async def test_sweep_rows_match_single_runs():
    base = env_iot(days=2)
    progress = []

    def on_progress(event):
        progress.append(event.payload)

    event_bus.subscribe(on_progress, topic="sweep_progress")
    try:
        table = await run_sweep(base, [1, 2], [6 * HOUR], repeats=2, seed=42)
    finally:
        event_bus.unsubscribe(on_progress)

    assert list(table.columns) == list(SWEEP_COLUMNS)
    assert list(table["cell"]) == [0, 1, 2, 3]
    assert (table["error"] == "").all()
    assert list(table["readings"]) == [48, 48, 96, 96]
    assert sorted(p["done"] for p in progress) == [1, 2, 3, 4]

    single = build_simulation(env_iot(days=2), seed=42).run()
    assert table.loc[0, "trace_hash"] == single.trace_hash
    assert table.loc[0, "events"] == single.events_processed


async def test_failed_cell_is_reported_not_raised():
    with patch("src.cli.sweep.build_simulation", side_effect=RuntimeError("disk on fire")):
        table = await run_sweep(env_iot(days=1), [1], [None], workers=1)
    assert table.loc[0, "error"] == "RuntimeError: disk on fire"
    with pytest.raises(ValueError):
        fit_trend(table, "locations")


async def test_peak_memory_is_measured_per_run():
    table = await run_sweep(env_iot(days=2), [20, 1], [6 * HOUR], workers=1)
    assert list(table["peak_mem_source"]) == ["tracemalloc", "tracemalloc"]
    big, small = table.loc[0, "peak_mem"], table.loc[1, "peak_mem"]
    assert 0 < small < big


def test_write_sweep(tmp_path):
    table = pd.DataFrame([{"cell": 0, "locations": 1, "wall_ms": 1.5, "error": ""}])
    path = tmp_path / "nested" / "sweep.csv"
    write_sweep(table, path)
    assert pd.read_csv(path).loc[0, "wall_ms"] == 1.5


def test_fit_trend_on_a_perfect_line():
    table = pd.DataFrame(
        {
            "locations": [1, 1, 5, 5, 10, 99],
            "wall_ms": [10.0, 12.0, 51.0, 51.0, 101.0, 0.0],
            "error": ["", "", "", "", "", "boom"],
        }
    )
    slope, r2 = fit_trend(table, "locations")
    assert slope == pytest.approx(10.0)
    assert r2 == pytest.approx(1.0)


@pytest.mark.slow
class TestScalingTrend:
    async def test_wall_time_grows_with_locations(self):
        table = await run_sweep(env_iot(), [1, 5, 10, 20], [6 * HOUR], repeats=5)
        slope, r2 = fit_trend(table, "locations")
        assert slope > 0
        assert r2 >= 0.9

    async def test_wall_time_grows_with_reading_frequency(self):
        intervals = [24 * HOUR, 12 * HOUR, 6 * HOUR, 3 * HOUR]
        table = await run_sweep(env_iot(), [5], intervals, repeats=5)
        table["readings_per_day"] = 86400 // table["interval_s"]
        slope, r2 = fit_trend(table, "readings_per_day")
        assert slope > 0
        assert r2 >= 0.9


@pytest.mark.slow
def test_jose_at_desk_scale(tmp_path):
    spec = jose(sensors_per_type=1000)
    sim = build_simulation(spec)
    storage = [sim.get(f"C{i}-storage").broker for i in range(1, 6)]
    assert sum(len(b.vms) for b in storage) == 500
    assert all(len(host.vms) == 10 for b in storage for host in b.hosts)
    assert storage[0].provision(VMSpec("C1-extra")) == Rejected()

    started = time.perf_counter()
    metrics = tmp_path / "jose.json"
    code = main(
        [
            "--log-file", str(tmp_path / "log"),
            "preset", "jose", "--sensors-per-type", "1000",
            "--trace", str(tmp_path / "jose.csv"), "--metrics", str(metrics),
        ]
    )
    assert code == 0
    assert time.perf_counter() - started < 120
    doc = read_metrics(metrics)
    assert doc.readings_emitted == 25_000 * 30
    assert doc.peak_memory_bytes < 4 * 2**30
