from typing import Any, Callable, Dict, List, Optional, Tuple
from dataclasses import dataclass
import asyncio


@dataclass
class Event:
    type: str
    payload: Dict[str, Any]


class EventBus:
    """Synchronous publish/subscribe hub.

    A subscriber may restrict itself to one topic; unfiltered subscribers see
    everything. Coroutine callbacks are scheduled on the running loop, if any.
    """

    def __init__(self):
        self.subscribers: List[Tuple[Optional[str], Callable[[Event], Any]]] = []

    def subscribe(self, callback: Callable[[Event], Any], topic: Optional[str] = None):
        self.subscribers.append((topic, callback))

    def unsubscribe(self, callback: Callable[[Event], Any]):
        # Equality, not identity: each access to a bound method builds a new object
        self.subscribers = [(t, cb) for t, cb in self.subscribers if cb != callback]

    def publish(self, event_type: str, **kwargs):
        if not self.subscribers:
            return
        event = Event(type=event_type, payload=kwargs)
        for topic, callback in self.subscribers:
            if topic is not None and topic != event_type:
                continue
            # If callback is a coroutine, schedule it
            if asyncio.iscoroutinefunction(callback):
                try:
                    loop = asyncio.get_running_loop()
                    loop.create_task(callback(event))
                except RuntimeError:
                    # No running loop, can't schedule async callback
                    pass
            else:
                callback(event)


# Process-wide bus (log mirroring, sweep progress). Each simulation owns its own.
event_bus = EventBus()
