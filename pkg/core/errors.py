"""Domain errors shared by the analytic model, the simulator and the front ends."""

from __future__ import annotations

from typing import Iterable, List


class PerfModelError(Exception):
    """Base class for every error raised by this project."""


class InvalidConfig(PerfModelError, ValueError):
    """A scenario or system configuration violates one or more invariants."""

    def __init__(self, violations: Iterable[str]):
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations) or "invalid configuration")


class FaultBoundTooSmall(PerfModelError, ValueError):
    """The requested bound only holds for f >= 1."""


class Unsatisfiable(PerfModelError, ValueError):
    """No finite parameter choice satisfies the requested target."""


class SchedulingInPast(PerfModelError):
    """An event was scheduled before the current simulated time."""


class DeliveryAbandoned(PerfModelError):
    """A reliable delivery ran out of retransmissions."""

    def __init__(self, message_id: str):
        self.message_id = message_id
        super().__init__(f"delivery of {message_id} abandoned after the retransmission cap")
