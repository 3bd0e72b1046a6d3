import logging
import sys
from typing import Optional

from src.core.config import config
from src.core.events import event_bus


class EventBusHandler(logging.Handler):
    """
    Logging handler that republishes formatted records on the process event
    bus so a front end can mirror them.
    """

    def emit(self, record):
        try:
            msg = self.format(record)
            event_bus.publish("log", message=msg, level=record.levelname)
        except Exception:
            self.handleError(record)


def print_log_event(event):
    """Bus subscriber that mirrors log lines on stderr (CLI --verbose)."""
    print(event.payload["message"], file=sys.stderr)


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None):
    """
    Configure logging to write to a file and the event bus.
    """
    file_handler = logging.FileHandler(log_file or config.LOG_FILE)
    bus_handler = EventBusHandler()

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    file_handler.setFormatter(formatter)
    bus_handler.setFormatter(formatter)

    logging.basicConfig(
        level=level or config.LOG_LEVEL,
        handlers=[file_handler, bus_handler],
        force=True,
    )
    logging.info("Logging initialized")
