"""
Run artifacts: the trace CSV and the metrics JSON.

The trace CSV starts with a ``#format_version=1`` line, then the header
``time,kind,subject,detail``. ``detail`` is the record's ``key=value`` list
joined with ``;``. Rows appear in emission order, which is (time, emission)
order. The metrics JSON holds every RunStats field plus scenario name, seed
and format version.
"""

import csv
import logging
from pathlib import Path
from typing import IO, Iterable, Optional, Union

from pydantic import ValidationError

from src.core.errors import IoFailure
from src.core.events import Event, EventBus
from src.kernel.stats import RunStats
from src.kernel.trace import TraceRecord

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
TRACE_COLUMNS = ("time", "kind", "subject", "detail")

PathLike = Union[str, Path]


class MetricsDocument(RunStats):
    format_version: int = FORMAT_VERSION
    scenario: str = ""
    seed: int = 0


class TraceWriter:
    """Streams trace records from a simulation bus into a CSV file."""

    def __init__(self, path: PathLike):
        self.path = Path(path)
        self.rows = 0
        self._file: Optional[IO[str]] = None
        self._writer = None
        self._bus: Optional[EventBus] = None

    def open(self) -> "TraceWriter":
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._file = open(self.path, "w", newline="", encoding="utf-8")
            self._file.write(f"#format_version={FORMAT_VERSION}\n")
            self._writer = csv.writer(self._file, lineterminator="\n")
            self._writer.writerow(TRACE_COLUMNS)
        except OSError as e:
            raise IoFailure(f"cannot write trace {self.path}: {e}") from e
        return self

    def attach(self, bus: EventBus) -> "TraceWriter":
        if self._file is None:
            self.open()
        bus.subscribe(self._on_trace, topic="trace")
        self._bus = bus
        return self

    def _on_trace(self, event: Event) -> None:
        self.write(event.payload["record"])

    def write(self, record: TraceRecord) -> None:
        try:
            self._writer.writerow((record.time, record.kind, record.subject, record.detail_text()))
        except OSError as e:
            raise IoFailure(f"cannot write trace {self.path}: {e}") from e
        self.rows += 1

    def close(self) -> None:
        if self._bus is not None:
            self._bus.unsubscribe(self._on_trace)
            self._bus = None
        if self._file is not None:
            self._file.close()
            self._file = None
            logger.info(f"Trace written to {self.path} ({self.rows} records)")

    def __enter__(self) -> "TraceWriter":
        return self.open() if self._file is None else self

    def __exit__(self, *exc) -> None:
        self.close()


def write_trace(records: Iterable[TraceRecord], path: PathLike) -> int:
    with TraceWriter(path) as writer:
        for record in records:
            writer.write(record)
        return writer.rows


def write_metrics(stats: RunStats, path: PathLike, scenario: str, seed: int) -> MetricsDocument:
    document = MetricsDocument(**stats.model_dump(), scenario=scenario, seed=seed)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write metrics {path}: {e}") from e
    logger.info(f"Metrics written to {path}")
    return document


def read_metrics(path: PathLike) -> MetricsDocument:
    path = Path(path)
    try:
        return MetricsDocument.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise IoFailure(f"cannot read metrics {path}: {e}") from e
    except ValidationError as e:
        raise IoFailure(f"malformed metrics {path}: {e.error_count()} error(s)") from e


def write_outputs(
    stats: RunStats,
    trace: Iterable[TraceRecord],
    trace_path: Optional[PathLike],
    metrics_path: Optional[PathLike],
    scenario: str = "",
    seed: int = 0,
) -> None:
    """Write a kept trace and the metrics summary. Either path may be None to skip it."""
    if trace_path is not None:
        write_trace(trace, trace_path)
    if metrics_path is not None:
        write_metrics(stats, metrics_path, scenario, seed)
