import json
import logging
import sqlite3
from decimal import Decimal
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from src.core.errors import DuplicateRound, IoFailure
from src.network.packets import AggregatedRecord

logger = logging.getLogger(__name__)


class RecordStore:
    """Append-only table of aggregated records keyed by (gateway, day, round)."""

    def __init__(self, db_path: str = ":memory:"):
        self.db_path = db_path
        self.conn = None
        self._connect()
        self._init_db()

    def _connect(self):
        """Establish database connection."""
        if self.db_path != ":memory:":
            path = Path(self.db_path)
            path.parent.mkdir(parents=True, exist_ok=True)

        self.conn = sqlite3.connect(self.db_path, check_same_thread=False)
        self.conn.row_factory = sqlite3.Row

    def _init_db(self):
        try:
            with self.conn:
                self.conn.execute(
                    """
                    CREATE TABLE IF NOT EXISTS records (
                        gateway TEXT NOT NULL,
                        day INTEGER NOT NULL,
                        round INTEGER NOT NULL,
                        round_time INTEGER NOT NULL,
                        stored_at INTEGER NOT NULL,
                        reading_count INTEGER NOT NULL,
                        vals TEXT NOT NULL,
                        PRIMARY KEY (gateway, day, round)
                    )
                """
                )
        except sqlite3.Error as e:
            logger.error(f"Failed to initialize record store: {e}")
            raise IoFailure(f"record store {self.db_path}: {e}") from e

    def insert(self, record: AggregatedRecord, stored_at: int) -> None:
        vals = json.dumps({metric: [str(v) for v in values] for metric, values in record.values.items()})
        try:
            with self.conn:
                self.conn.execute(
                    """
                    INSERT INTO records (gateway, day, round, round_time, stored_at, reading_count, vals)
                    VALUES (?, ?, ?, ?, ?, ?, ?)
                    """,
                    (
                        record.gateway,
                        record.day,
                        record.round_index,
                        record.round_time,
                        stored_at,
                        record.reading_count,
                        vals,
                    ),
                )
        except sqlite3.IntegrityError:
            raise DuplicateRound(record.gateway, record.day, record.round_index) from None
        except sqlite3.Error as e:
            logger.error(f"Record store write error for {record.key}: {e}")
            raise IoFailure(str(e)) from e

    def _decode(self, row: sqlite3.Row) -> Dict[str, Any]:
        entry = dict(row)
        entry["vals"] = {m: [Decimal(v) for v in vs] for m, vs in json.loads(entry["vals"]).items()}
        return entry

    def get(self, key: Tuple[str, int, int]) -> Optional[Dict[str, Any]]:
        row = self.conn.execute(
            "SELECT * FROM records WHERE gateway = ? AND day = ? AND round = ?", key
        ).fetchone()
        return self._decode(row) if row else None

    def records(self, gateway: Optional[str] = None, day: Optional[int] = None) -> List[Dict[str, Any]]:
        query = "SELECT * FROM records WHERE 1=1"
        params: List[Any] = []
        if gateway is not None:
            query += " AND gateway = ?"
            params.append(gateway)
        if day is not None:
            query += " AND day = ?"
            params.append(day)
        query += " ORDER BY round_time, gateway"
        return [self._decode(row) for row in self.conn.execute(query, params)]

    def stored_values(self) -> List[Tuple[str, Decimal]]:
        """Every stored (metric, value) pair, sorted."""
        pairs = []
        for entry in self.records():
            for metric, values in entry["vals"].items():
                pairs.extend((metric, v) for v in values)
        return sorted(pairs)

    def __len__(self) -> int:
        return self.conn.execute("SELECT COUNT(*) FROM records").fetchone()[0]

    def close(self):
        if self.conn:
            self.conn.close()
