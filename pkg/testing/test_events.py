import pytest

from core.errors import SchedulingInPast
from services.events import EventKind, EventQueue


def test_pops_in_time_then_schedule_order():
    queue = EventQueue()
    queue.schedule(30.0, EventKind.MESSAGE_ARRIVAL, 1, "late")
    queue.schedule(10.0, EventKind.MESSAGE_ARRIVAL, 2, "first")
    queue.schedule(10.0, EventKind.CLIENT_DEADLINE, 3, "second")
    queue.schedule(20.0, EventKind.RETRANSMISSION_TIMER, 4, "middle")

    payloads = []
    while (event := queue.pop()) is not None:
        payloads.append(event.payload)
    assert payloads == ["first", "second", "middle", "late"]


def test_clock_follows_pops():
    queue = EventQueue(now_us=5.0)
    queue.schedule(5.0, EventKind.MESSAGE_ARRIVAL, 0)
    queue.schedule(12.5, EventKind.TRANSACTION_TIMEOUT, 0)
    assert len(queue) == 2
    queue.pop()
    assert queue.now_us == 5.0
    queue.pop()
    assert queue.now_us == 12.5
    assert queue.pop() is None
    assert queue.now_us == 12.5


def test_scheduling_in_the_past_is_rejected():
    queue = EventQueue()
    queue.schedule(100.0, EventKind.MESSAGE_ARRIVAL, 0)
    queue.pop()
    with pytest.raises(SchedulingInPast):
        queue.schedule(99.0, EventKind.MESSAGE_ARRIVAL, 0)
    queue.schedule(100.0, EventKind.MESSAGE_ARRIVAL, 0)
