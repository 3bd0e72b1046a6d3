"""
Sensor datasets and trajectory files.

Dataset CSV: header exactly ``timestamp,value``; row order is authoritative,
timestamps are informational. Values are kept as Decimal so the aggregation
arithmetic downstream stays exact.

Trajectory CSV: header exactly ``t,x,y,z``; times in seconds, strictly
increasing; coordinates in meters.
"""

import logging
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import pandas as pd

from src.core.errors import BadHeader, EmptyDataset, IoFailure, MissingFile, NonNumericValue
from src.kernel.rng import RandomStream

logger = logging.getLogger(__name__)

DATASET_HEADER = ["timestamp", "value"]
TRAJECTORY_HEADER = ["t", "x", "y", "z"]


# Selection modes


@dataclass(frozen=True)
class Sequential:
    pass


@dataclass(frozen=True)
class RandomRow:
    pass


@dataclass(frozen=True)
class RandomInRange:
    min: float
    max: float

    def __post_init__(self):
        if self.min > self.max:
            raise ValueError(f"random_in_range: min {self.min} > max {self.max}")


SelectionMode = Union[Sequential, RandomRow, RandomInRange]


def parse_decimal(raw: str, source: str, row: int) -> Decimal:
    try:
        value = Decimal(raw.strip())
    except (InvalidOperation, AttributeError):
        raise NonNumericValue(source, row, raw)
    if not value.is_finite():
        raise NonNumericValue(source, row, raw)
    return value


@dataclass
class DatasetHandle:
    source: str
    values: Tuple[Decimal, ...]
    timestamps: Tuple[str, ...] = ()
    # Sequential cursor, one per sensor
    position: int = 0
    wraps: int = field(default=0)

    @property
    def row_count(self) -> int:
        return len(self.values)

    def fork(self) -> "DatasetHandle":
        """A fresh cursor over the same rows."""
        return DatasetHandle(self.source, self.values, self.timestamps)

    def require_values(self) -> None:
        if not self.values:
            raise EmptyDataset(f"dataset {self.source} has no rows")


def inline_dataset(values: Iterable, source: str = "<inline>") -> DatasetHandle:
    parsed = tuple(parse_decimal(str(v), source, i + 1) for i, v in enumerate(values))
    return DatasetHandle(source, parsed)


def read_csv_strict(path: Union[str, Path], header: List[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"{path} does not exist")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise BadHeader(f"{path}: empty file, expected header {','.join(header)}")
    except OSError as e:
        raise IoFailure(f"{path}: {e}") from e
    columns = [str(c).strip() for c in df.columns]
    if columns != header:
        raise BadHeader(f"{path}: header {','.join(columns)} != {','.join(header)}")
    return df


def load_dataset(path: Union[str, Path]) -> DatasetHandle:
    df = read_csv_strict(path, DATASET_HEADER)
    source = str(path)
    values = tuple(parse_decimal(raw, source, row) for row, raw in enumerate(df["value"], start=1))
    handle = DatasetHandle(source, values, tuple(df["timestamp"]))
    logger.debug(f"Loaded dataset {source}: {handle.row_count} rows")
    return handle


def next_value(h: DatasetHandle, mode: SelectionMode, rng: RandomStream) -> Decimal:
    if isinstance(mode, RandomInRange):
        if mode.min == mode.max:
            return Decimal(repr(float(mode.min)))
        return Decimal(repr(rng.uniform(mode.min, mode.max)))
    h.require_values()
    if isinstance(mode, RandomRow):
        return h.values[rng.randrange(len(h.values))]
    if h.position >= len(h.values):
        h.position = 0
        h.wraps += 1
        logger.debug(f"Dataset {h.source} wrapped (wrap #{h.wraps})")
    value = h.values[h.position]
    h.position += 1
    return value


# Trajectories


@dataclass(frozen=True)
class Waypoint:
    t: int
    x: float
    y: float
    z: float

    @property
    def location(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.z)


def check_waypoints(waypoints: List[Waypoint], source: str = "<inline>") -> List[Waypoint]:
    if not waypoints:
        raise EmptyDataset(f"trajectory {source} has no waypoints")
    for prev, cur in zip(waypoints, waypoints[1:]):
        if cur.t <= prev.t:
            raise ValueError(f"trajectory {source}: waypoint times must strictly increase ({prev.t} -> {cur.t})")
    return waypoints


def load_trajectory(path: Union[str, Path]) -> List[Waypoint]:
    df = read_csv_strict(path, TRAJECTORY_HEADER)
    source = str(path)
    waypoints: List[Waypoint] = []
    for row, rec in enumerate(df.itertuples(index=False), start=1):
        try:
            waypoints.append(Waypoint(int(rec.t), float(rec.x), float(rec.y), float(rec.z)))
        except ValueError:
            raise NonNumericValue(source, row, ",".join(rec))
    return check_waypoints(waypoints, source)


def waypoint_at(waypoints: List[Waypoint], now: int) -> Optional[Waypoint]:
    """Last waypoint with t <= now (step policy)."""
    current = None
    for wp in waypoints:
        if wp.t > now:
            break
        current = wp
    return current
