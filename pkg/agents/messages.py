"""In-simulator protocol messages. No wire format: only byte counts matter for loss."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

PRIMARY_ID = 0
CLIENT_ID = -1


class Phase(str, Enum):
    PRE_PREPARE = "pre_prepare"
    PREPARE = "prepare"
    COMMIT = "commit"
    REPLY = "reply"


@dataclass(frozen=True)
class ProtocolMessage:
    phase: Phase
    txn_id: int
    sender: int
    view: int = 0


@dataclass(frozen=True)
class Send:
    """One outgoing message; local sends are a node talking to itself and never touch the network."""

    dst: int
    message: ProtocolMessage

    @property
    def local(self) -> bool:
        return self.dst == self.message.sender
