"""Primary/backup state machine of one PBFT view-consensus round."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional

from agents.messages import CLIENT_ID, PRIMARY_ID, Phase, ProtocolMessage, Send

logger = logging.getLogger(__name__)


class ReplicaPhase(IntEnum):
    IDLE = 0
    PRE_PREPARED = 1
    PREPARED = 2
    COMMITTED = 3


class Behavior(str, Enum):
    HONEST = "honest"
    SILENT = "silent"


@dataclass
class NodeState:
    id: int
    behavior: Behavior = Behavior.HONEST
    txn_id: Optional[int] = None
    phase: ReplicaPhase = ReplicaPhase.IDLE
    received: dict[Phase, set[int]] = field(default_factory=lambda: {Phase.PREPARE: set(), Phase.COMMIT: set()})
    replied: bool = False

    @property
    def role(self) -> str:
        return "primary" if self.id == PRIMARY_ID else "backup"


class Replica:
    """One replica. `threshold` counts distinct same-phase messages from other nodes."""

    def __init__(self, node_id: int, n: int, threshold: int, behavior: Behavior = Behavior.HONEST):
        self.n = n
        self.threshold = threshold
        self.state = NodeState(id=node_id, behavior=behavior)

    @property
    def node_id(self) -> int:
        return self.state.id

    @property
    def silent(self) -> bool:
        return self.state.behavior is Behavior.SILENT

    def begin(self, txn_id: int) -> None:
        """Forget the previous transaction; messages for it are dropped from now on."""
        self.state = NodeState(id=self.state.id, behavior=self.state.behavior, txn_id=txn_id)

    def start_transaction(self, txn_id: int) -> list[Send]:
        """Primary only: PRE-PREPARE to every backup plus the local copy to itself."""
        if self.node_id != PRIMARY_ID:
            raise ValueError(f"node {self.node_id} is not the primary")
        if self.state.txn_id != txn_id:
            self.begin(txn_id)
        message = ProtocolMessage(Phase.PRE_PREPARE, txn_id, self.node_id)
        return [Send(dst, message) for dst in range(self.n)]

    def on_message(self, msg: ProtocolMessage) -> list[Send]:
        state = self.state
        if msg.txn_id != state.txn_id:
            return []

        outgoing: list[Send] = []
        if msg.phase is Phase.PRE_PREPARE:
            if msg.sender != PRIMARY_ID or state.phase is not ReplicaPhase.IDLE:
                return []
            state.phase = ReplicaPhase.PRE_PREPARED
            outgoing += self._broadcast(Phase.PREPARE)
        elif msg.phase in state.received:
            if msg.sender == self.node_id or msg.sender in state.received[msg.phase]:
                return []
            state.received[msg.phase].add(msg.sender)
        else:
            return []

        outgoing += self._advance()
        return [] if self.silent else outgoing

    def _advance(self) -> list[Send]:
        state = self.state
        outgoing: list[Send] = []
        if state.phase is ReplicaPhase.PRE_PREPARED and len(state.received[Phase.PREPARE]) >= self.threshold:
            state.phase = ReplicaPhase.PREPARED
            outgoing += self._broadcast(Phase.COMMIT)
        if state.phase is ReplicaPhase.PREPARED and len(state.received[Phase.COMMIT]) >= self.threshold:
            state.phase = ReplicaPhase.COMMITTED
            if not state.replied:
                state.replied = True
                outgoing.append(Send(CLIENT_ID, ProtocolMessage(Phase.REPLY, state.txn_id, self.node_id)))
        return outgoing

    def _broadcast(self, phase: Phase) -> list[Send]:
        message = ProtocolMessage(phase, self.state.txn_id, self.node_id)
        return [Send(dst, message) for dst in range(self.n) if dst != self.node_id]


def on_message(node: Replica, msg: ProtocolMessage) -> tuple[ReplicaPhase, list[Send]]:
    """Feed one message to a replica; returns its phase afterwards and what it sends."""
    sends = node.on_message(msg)
    return node.state.phase, sends
