"""Discrete-event simulation of PBFT transactions over the star network.

Each repetition owns a PCG64 generator seeded with `seed ^ repetition` and
runs its requests back-to-back: a request starts when the previous one
succeeded or hit its deadline. Repetitions are independent and can be spread
over worker processes without changing a single record.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Union

import numpy as np

from agents.client import ClientState, Outcome, client_expire, client_observe
from agents.messages import CLIENT_ID, PRIMARY_ID, Phase, ProtocolMessage, Send
from agents.replica import Behavior, Replica, ReplicaPhase
from core.errors import DeliveryAbandoned
from core.models import ScenarioSpec, Tcp, Udp, other_transport, preprepare_transport
from core.scenario import validate
from services.events import EventKind, EventQueue
from services.links import StarTopology
from services.transports import TcpEndpointModel, broadcast_udp, transmit_tcp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransactionRecord:
    repetition: int
    index: int
    start_ms: float
    success: bool
    latency_ms: Optional[float]
    # network datagrams per phase, retransmissions included; local self-sends excluded
    messages: dict[str, int]
    retransmissions: int
    m: int
    k: int
    j: int
    s: int
    abandoned: tuple[str, ...] = ()

    @property
    def messages_total(self) -> int:
        return sum(self.messages.values())


@dataclass
class _Tally:
    messages: Counter = field(default_factory=Counter)
    retransmissions: int = 0
    abandoned: list[str] = field(default_factory=list)


def make_rng(seed: int, repetition: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed ^ repetition))


class TransactionSimulator:
    """Replicas, client and network of one repetition."""

    def __init__(self, spec: ScenarioSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        n = spec.system.n
        self.topology = StarTopology(spec.channel, [*range(n), CLIENT_ID])
        silent = set(range(n - spec.faulty.count, n))
        threshold = spec.system.simulator_threshold
        self.replicas = [
            Replica(i, n, threshold, Behavior.SILENT if i in silent else Behavior.HONEST) for i in range(n)
        ]
        self.preprepare = preprepare_transport(spec.transport)
        self.other = other_transport(spec.transport)
        self._endpoints = {
            id(transport): TcpEndpointModel(transport)
            for transport in (self.preprepare, self.other)
            if isinstance(transport, Tcp)
        }

    def run_transaction(self, repetition: int, index: int, start_us: float) -> tuple[TransactionRecord, float]:
        """Simulate one request; returns its record and the time the next request may start."""
        queue = EventQueue(start_us)
        for replica in self.replicas:
            replica.begin(index)
        client = ClientState(threshold=self.spec.system.reply_threshold, start_us=start_us, txn_id=index)
        deadline_us = start_us + self.spec.txn_timeout_ms * 1e3
        queue.schedule(deadline_us, EventKind.CLIENT_DEADLINE, CLIENT_ID)
        queue.schedule(deadline_us, EventKind.TRANSACTION_TIMEOUT, CLIENT_ID)

        tally = _Tally()
        self._dispatch(queue, self.replicas[PRIMARY_ID].start_transaction(index), tally)

        end_us = deadline_us
        while (event := queue.pop()) is not None:
            if event.kind is EventKind.MESSAGE_ARRIVAL:
                if event.target == CLIENT_ID:
                    before = client.result.outcome
                    result = client_observe(client, event.payload, queue.now_us)
                    if before is Outcome.PENDING and result.outcome is Outcome.SUCCESS:
                        end_us = queue.now_us
                else:
                    self._dispatch(queue, self.replicas[event.target].on_message(event.payload), tally)
            elif event.kind is EventKind.RETRANSMISSION_TIMER:
                phase, _ = event.payload
                tally.messages[phase.value] += 1
                tally.retransmissions += 1
            elif event.kind is EventKind.CLIENT_DEADLINE:
                client_expire(client, queue.now_us)
            elif event.kind is EventKind.TRANSACTION_TIMEOUT:
                break

        phases = [replica.state.phase for replica in self.replicas]
        success = client.result.outcome is Outcome.SUCCESS
        record = TransactionRecord(
            repetition=repetition,
            index=index,
            start_ms=start_us / 1e3,
            success=success,
            latency_ms=client.result.latency_us / 1e3 if success else None,
            messages={phase.value: tally.messages.get(phase.value, 0) for phase in Phase},
            retransmissions=tally.retransmissions,
            m=sum(1 for i, phase in enumerate(phases) if i != PRIMARY_ID and phase >= ReplicaPhase.PRE_PREPARED),
            k=sum(1 for phase in phases if phase >= ReplicaPhase.PREPARED),
            j=sum(1 for phase in phases if phase >= ReplicaPhase.COMMITTED),
            s=len(client.replies),
            abandoned=tuple(tally.abandoned),
        )
        logger.debug(
            f"rep={repetition} txn={index} success={success} m={record.m} k={record.k} j={record.j} s={record.s}"
        )
        return record, end_us

    # --- Network ---

    def _transport_for(self, phase: Phase) -> Union[Udp, Tcp]:
        return self.preprepare if phase is Phase.PRE_PREPARE else self.other

    def _dispatch(self, queue: EventQueue, sends: list[Send], tally: _Tally) -> None:
        groups: dict[ProtocolMessage, list[int]] = defaultdict(list)
        for send in sends:
            if send.local:
                queue.schedule(queue.now_us, EventKind.MESSAGE_ARRIVAL, send.dst, send.message)
            else:
                groups[send.message].append(send.dst)

        payload = self.spec.system.payload_bytes
        for message, destinations in groups.items():
            transport = self._transport_for(message.phase)
            if isinstance(transport, Udp):
                copies = transport.preprepare_copies if message.phase is Phase.PRE_PREPARE else transport.repeats
                tally.messages[message.phase.value] += copies * len(destinations)
                arrivals = broadcast_udp(self.topology, destinations, payload, copies, self.rng, queue.now_us)
                for dst, times in zip(destinations, arrivals):
                    for arrival in times:
                        queue.schedule(arrival, EventKind.MESSAGE_ARRIVAL, dst, message)
            else:
                endpoint = self._endpoints[id(transport)]
                for dst in destinations:
                    self._send_tcp(queue, endpoint, message, dst, tally)

    def _send_tcp(
        self, queue: EventQueue, endpoint: TcpEndpointModel, message: ProtocolMessage, dst: int, tally: _Tally
    ) -> None:
        message_id = f"{message.txn_id}:{message.phase.value}:{message.sender}->{dst}"
        delivery = transmit_tcp(
            endpoint,
            self.topology.path(message.sender, dst),
            self.spec.system.payload_bytes,
            self.rng,
            queue.now_us,
            message_id,
        )
        tally.messages[message.phase.value] += len(delivery.first_sends_us)
        for sent_at in delivery.retransmissions_us:
            queue.schedule(sent_at, EventKind.RETRANSMISSION_TIMER, message.sender, (message.phase, message_id))
        try:
            queue.schedule(delivery.result(), EventKind.MESSAGE_ARRIVAL, dst, message)
        except DeliveryAbandoned as exc:
            logger.debug(f"Abandoned TCP delivery {exc.message_id}")
            tally.abandoned.append(exc.message_id)


def run_repetition(spec: ScenarioSpec, repetition: int) -> list[TransactionRecord]:
    """All requests of one repetition, on its own generator."""
    simulator = TransactionSimulator(spec, make_rng(spec.seed, repetition))
    records = []
    clock_us = 0.0
    for index in range(spec.requests):
        record, clock_us = simulator.run_transaction(repetition, index, clock_us)
        records.append(record)
    return records


def _run_repetition_args(args: tuple[ScenarioSpec, int]) -> list[TransactionRecord]:
    return run_repetition(*args)


def run(spec: Union[ScenarioSpec, Mapping[str, Any]], workers: int = 1) -> list[TransactionRecord]:
    """Simulate every repetition of a scenario; records come back ordered by (repetition, index)."""
    spec = validate(spec)
    logger.info(
        f"Simulating {spec.scenario_id}: n={spec.system.n} f={spec.system.f} "
        f"{spec.repetitions}x{spec.requests} transactions on {workers} worker(s)"
    )
    jobs = [(spec, repetition) for repetition in range(spec.repetitions)]
    if workers > 1 and spec.repetitions > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_run_repetition_args, jobs))
    else:
        batches = [_run_repetition_args(job) for job in jobs]
    records = [record for batch in batches for record in batch]
    successes = sum(record.success for record in records)
    logger.info(f"Finished {spec.scenario_id}: {successes}/{len(records)} transactions succeeded")
    return records
