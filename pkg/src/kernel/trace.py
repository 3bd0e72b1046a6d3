"""
Trace stream: the ordered record of every observable simulation event.

Records are hashed as they are emitted (the run's trace_hash) and published
on the simulation's bus under the ``trace`` topic for writers to consume.
"""

import hashlib
from collections import Counter
from decimal import Decimal
from fractions import Fraction
from typing import Any, Dict, List, NamedTuple

from src.core.events import EventBus

TRACE_KINDS = (
    "sense",
    "packet_sent",
    "packet_delivered",
    "packet_lost",
    "aggregate",
    "daily_avg",
    "alert",
    "battery",
    "provision",
    "cloudlet_done",
    "failure",
    "move",
    "action",
    "outage",
    "signal",
    "late",
    "error",
)


def format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (list, tuple)):
        return "[" + " ".join(format_value(v) for v in value) + "]"
    if isinstance(value, Decimal):
        return str(value)
    return str(value)


class TraceRecord(NamedTuple):
    time: int
    kind: str
    subject: str
    detail: Dict[str, Any]

    def detail_text(self) -> str:
        return ";".join(f"{k}={format_value(v)}" for k, v in self.detail.items())

    def line(self) -> str:
        return f"{self.time}\t{self.kind}\t{self.subject}\t{self.detail_text()}\n"


class TraceRecorder:
    def __init__(self, bus: EventBus, keep: bool = False):
        self.bus = bus
        self.keep = keep
        self.records: List[TraceRecord] = []
        self.counts: Counter = Counter()
        self._hash = hashlib.sha256()
        self._last_time = 0

    def emit(self, time: int, kind: str, subject: str, detail: Dict[str, Any]) -> TraceRecord:
        if time < self._last_time:
            raise ValueError(f"trace record at t={time} after t={self._last_time}")
        self._last_time = time
        record = TraceRecord(time, kind, subject, detail)
        self._hash.update(record.line().encode("utf-8"))
        self.counts[kind] += 1
        if self.keep:
            self.records.append(record)
        self.bus.publish("trace", record=record)
        return record

    @property
    def digest(self) -> str:
        return self._hash.hexdigest()

    def of_kind(self, kind: str) -> List[TraceRecord]:
        return [r for r in self.records if r.kind == kind]
