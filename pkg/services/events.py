"""Discrete-event core: a time-ordered queue with deterministic tie-breaking."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from core.errors import SchedulingInPast


class EventKind(str, Enum):
    MESSAGE_ARRIVAL = "message_arrival"
    RETRANSMISSION_TIMER = "retransmission_timer"
    TRANSACTION_TIMEOUT = "transaction_timeout"
    CLIENT_DEADLINE = "client_deadline"


@dataclass(order=True, frozen=True)
class Event:
    fire_time: float  # simulated microseconds
    sequence: int
    kind: EventKind = field(compare=False)
    target: int = field(compare=False)
    payload: Any = field(default=None, compare=False)


class EventQueue:
    """Pops events in (fire_time, sequence) order; the clock follows the last pop."""

    def __init__(self, now_us: float = 0.0):
        self.now_us = now_us
        self._heap: list[Event] = []
        self._sequence = itertools.count()

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, fire_time: float, kind: EventKind, target: int, payload: Any = None) -> Event:
        if fire_time < self.now_us:
            raise SchedulingInPast(f"cannot schedule {kind.value} at {fire_time} us, clock is at {self.now_us} us")
        event = Event(fire_time, next(self._sequence), kind, target, payload)
        heapq.heappush(self._heap, event)
        return event

    def pop(self) -> Optional[Event]:
        """Next event, or None once the queue is empty (end of run)."""
        if not self._heap:
            return None
        event = heapq.heappop(self._heap)
        self.now_us = event.fire_time
        return event
