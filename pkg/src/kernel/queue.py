"""
Future-event list.

A binary heap keyed by (fire_at, seq). Cancellation is lazy: cancelled
events stay in the heap until they reach the top and are discarded.
"""

import heapq
from typing import Iterator, List, Optional, Tuple

from src.kernel.events import Event, EventState, SimTime


class FutureEventList:
    def __init__(self):
        self._heap: List[Tuple[SimTime, int, Event]] = []
        self._live = 0

    def __len__(self) -> int:
        return self._live

    def push(self, event: Event) -> None:
        heapq.heappush(self._heap, (event.fire_at, event.seq, event))
        self._live += 1

    def cancel(self, event: Event) -> bool:
        if event.state is not EventState.PENDING:
            return False
        event.state = EventState.CANCELLED
        self._live -= 1
        return True

    def _drop_cancelled(self) -> None:
        heap = self._heap
        while heap and heap[0][2].state is EventState.CANCELLED:
            heapq.heappop(heap)

    def peek_time(self) -> Optional[SimTime]:
        self._drop_cancelled()
        if self._heap:
            return self._heap[0][0]
        return None

    def pop(self) -> Event:
        self._drop_cancelled()
        if not self._heap:
            raise IndexError("pop from an empty future-event list")
        event = heapq.heappop(self._heap)[2]
        event.state = EventState.FIRED
        self._live -= 1
        return event

    def pending(self) -> Iterator[Event]:
        """Live events in no particular order."""
        return (e for _, _, e in self._heap if e.state is EventState.PENDING)
