"""
Scaling sweeps: run a scenario over a grid of location counts and reading
intervals, several repeats per cell, and collect one row per run.

Cells run concurrently up to the configured worker count. With more than
one worker runs go to a process pool; rows are appended under a lock in
completion order and sorted by cell index before they are returned. Peak
memory is measured per run with tracemalloc, so rows are comparable even
when runs share a process.
"""

import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.core.config import config
from src.core.errors import IoFailure
from src.core.events import event_bus
from src.scenario.builder import build_simulation
from src.scenario.models import ScenarioSpec
from src.scenario.parser import replicate

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "cell",
    "locations",
    "interval_s",
    "repeat",
    "seed",
    "wall_ms",
    "peak_mem",
    "peak_mem_source",
    "events",
    "readings",
    "packets_sent",
    "trace_hash",
    "error",
)


@dataclass(frozen=True)
class SweepCell:
    index: int
    locations: int
    interval_s: Optional[int]
    repeat: int
    seed: int


def plan_cells(
    locations: Sequence[int], intervals: Sequence[Optional[int]], repeats: int, seed: int
) -> List[SweepCell]:
    """Cross product in (locations, interval, repeat) order; cell i runs with seed + i."""
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    cells = []
    for n in locations:
        if n < 1:
            raise ValueError(f"location count must be >= 1, got {n}")
        for interval in intervals:
            for r in range(1, repeats + 1):
                cells.append(SweepCell(len(cells), n, interval, r, seed + len(cells)))
    return cells


def cell_scenario(base: Dict[str, Any], cell: SweepCell) -> ScenarioSpec:
    spec = ScenarioSpec.model_validate(base)
    if cell.interval_s is not None:
        for sensor in spec.sensors:
            sensor.interval = cell.interval_s
    if cell.locations > 1:
        spec = replicate(spec, cell.locations)
    return spec


def run_cell(base: Dict[str, Any], cell: SweepCell, horizon: Optional[int] = None) -> Dict[str, Any]:
    """One isolated run. Failures are reported in the row, never raised."""
    row: Dict[str, Any] = {**asdict(cell), "cell": cell.index}
    del row["index"]
    try:
        sim = build_simulation(cell_scenario(base, cell), seed=cell.seed, horizon=horizon)
        stats = sim.run(memory_source="tracemalloc")
    except Exception as e:
        logger.error(f"Sweep cell {cell.index} failed: {e}")
        row["error"] = f"{type(e).__name__}: {e}"
        return row
    row.update(
        wall_ms=round(stats.wall_clock_ms, 3),
        peak_mem=stats.peak_memory_bytes,
        peak_mem_source=stats.peak_memory_source,
        events=stats.events_processed,
        readings=stats.readings_emitted,
        packets_sent=stats.packets_sent,
        trace_hash=stats.trace_hash,
        error="",
    )
    return row


async def run_sweep(
    base: ScenarioSpec,
    locations: Sequence[int],
    intervals: Sequence[Optional[int]],
    repeats: int = 1,
    seed: Optional[int] = None,
    horizon: Optional[int] = None,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    seed = base.seed if seed is None else seed
    workers = min(max(workers or config.SWEEP_WORKERS, 1), 32)
    cells = plan_cells(locations, intervals or [None], repeats, seed)
    document = base.model_dump()
    logger.info(f"Sweep over {len(cells)} cells with {workers} worker(s)")

    semaphore = asyncio.Semaphore(workers)
    lock = asyncio.Lock()
    rows: List[Dict[str, Any]] = []
    loop = asyncio.get_running_loop()
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None

    async def run_one(cell: SweepCell) -> None:
        async with semaphore:
            if executor is not None:
                row = await loop.run_in_executor(executor, run_cell, document, cell, horizon)
            else:
                row = await asyncio.to_thread(run_cell, document, cell, horizon)
        async with lock:
            rows.append(row)
            done = len(rows)
        logger.info(f"Sweep cell {cell.index} done ({done}/{len(cells)})")
        event_bus.publish("sweep_progress", done=done, total=len(cells), cell=cell.index)

    try:
        await asyncio.gather(*(run_one(cell) for cell in cells))
    finally:
        if executor is not None:
            executor.shutdown()

    rows.sort(key=lambda r: r["cell"])
    return pd.DataFrame(rows, columns=list(SWEEP_COLUMNS))


def write_sweep(table: pd.DataFrame, path: Union[str, Path]) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(path, index=False)
    except OSError as e:
        raise IoFailure(f"cannot write sweep table {path}: {e}") from e
    logger.info(f"Sweep table written to {path} ({len(table)} rows)")


def fit_trend(table: pd.DataFrame, x: str, y: str = "wall_ms") -> Tuple[float, float]:
    """Least-squares line through the per-x means of y. Returns (slope, r_squared)."""
    ok = table[table["error"].fillna("") == ""]
    means = ok.groupby(x)[y].mean()
    xs = means.index.to_numpy(dtype=float)
    ys = means.to_numpy(dtype=float)
    if len(xs) < 2:
        raise ValueError(f"need at least two distinct {x} values to fit a trend")
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = ys - (slope * xs + intercept)
    total = ys - ys.mean()
    ss_tot = float(np.dot(total, total))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - float(np.dot(residual, residual)) / ss_tot
    return float(slope), r_squared
