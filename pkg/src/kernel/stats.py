import logging
import sys
import tracemalloc
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Tuple

from pydantic import BaseModel, Field

from src.core.errors import ConservationError

logger = logging.getLogger(__name__)


@dataclass
class PacketCounters:
    """Live packet accounting for one run."""

    sent: int = 0
    delivered: int = 0
    in_flight: int = 0
    lost_by_reason: Counter = field(default_factory=Counter)
    readings_emitted: int = 0

    @property
    def lost(self) -> int:
        return sum(self.lost_by_reason.values())


class RunStats(BaseModel):
    events_processed: int = 0
    final_time: int = 0
    packets_sent: int = 0
    packets_delivered: int = 0
    packets_lost: int = 0
    packets_in_flight: int = 0
    lost_by_reason: Dict[str, int] = Field(default_factory=dict)
    readings_emitted: int = 0
    trace_counts: Dict[str, int] = Field(default_factory=dict)
    # Datacenter id -> joules drawn by its hosts over the simulated run
    energy_J: Dict[str, float] = Field(default_factory=dict)
    # Excluded from determinism checks
    wall_clock_ms: float = 0.0
    peak_memory_bytes: int = 0
    peak_memory_source: str = "none"
    trace_hash: str = ""

    def check_conservation(self) -> None:
        if self.packets_sent != self.packets_delivered + self.packets_lost + self.packets_in_flight:
            raise ConservationError(
                f"sent={self.packets_sent} != delivered={self.packets_delivered} "
                f"+ lost={self.packets_lost} + in_flight={self.packets_in_flight}"
            )

    def deterministic_view(self) -> dict:
        return self.model_dump(exclude={"wall_clock_ms", "peak_memory_bytes", "peak_memory_source"})


class MemoryGauge:
    """
    Peak memory of a run. "rusage" reads the platform's max-RSS facility,
    a process-wide high-water mark that never falls between runs.
    "tracemalloc" measures the Python allocations made during this run only,
    above what was live when it started; sweeps use it so every row is its
    own run's figure.
    """

    def __init__(self, source: str = "rusage"):
        self.source = source
        if source == "rusage":
            try:
                import resource  # noqa: F401
            except ImportError:
                self.source = "tracemalloc"
        self._started_tracing = False
        self._baseline = 0

    def start(self) -> None:
        if self.source != "tracemalloc":
            return
        if tracemalloc.is_tracing():
            tracemalloc.reset_peak()
        else:
            tracemalloc.start()
            self._started_tracing = True
        self._baseline, _ = tracemalloc.get_traced_memory()

    def stop(self) -> Tuple[int, str]:
        if self.source == "rusage":
            import resource

            peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
            # Linux reports KiB, macOS bytes
            if sys.platform != "darwin":
                peak *= 1024
            return int(peak), "rusage"
        peak_bytes = 0
        if tracemalloc.is_tracing():
            _, peak_bytes = tracemalloc.get_traced_memory()
            if self._started_tracing:
                tracemalloc.stop()
                self._started_tracing = False
        return max(int(peak_bytes) - self._baseline, 0), "tracemalloc"
