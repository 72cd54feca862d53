"""Client side of a transaction: count distinct REPLYs until the threshold or the deadline."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from agents.messages import Phase, ProtocolMessage


class Outcome(str, Enum):
    PENDING = "pending"
    SUCCESS = "success"
    FAILURE = "failure"


@dataclass(frozen=True)
class ClientResult:
    outcome: Outcome
    latency_us: Optional[float] = None


@dataclass
class ClientState:
    threshold: int
    start_us: float = 0.0
    txn_id: Optional[int] = None
    replies: set[int] = field(default_factory=set)
    result: ClientResult = ClientResult(Outcome.PENDING)

    @property
    def decided(self) -> bool:
        return self.result.outcome is not Outcome.PENDING


def client_observe(client: ClientState, reply: ProtocolMessage, now_us: float) -> ClientResult:
    """Record a REPLY; success is declared on the threshold-th distinct replica and never revoked."""
    if reply.phase is not Phase.REPLY or (client.txn_id is not None and reply.txn_id != client.txn_id):
        return client.result
    if client.result.outcome is Outcome.FAILURE:
        return client.result
    client.replies.add(reply.sender)
    if not client.decided and len(client.replies) >= client.threshold:
        client.result = ClientResult(Outcome.SUCCESS, latency_us=now_us - client.start_us)
    return client.result


def client_expire(client: ClientState, now_us: float) -> ClientResult:
    """ClientDeadline fired: a still-pending transaction fails."""
    if not client.decided:
        client.result = ClientResult(Outcome.FAILURE)
    return client.result
