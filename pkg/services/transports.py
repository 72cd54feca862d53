"""Message transports over the star: repeated UDP datagrams and a simplified TCP.

TCP here is reduced to what matters for consensus success: a segment is
delivered only in an attempt where its data frame and the returning ACK both
survive both links. An unacknowledged segment is resent after an exponentially
backed-off RTO until the retransmission cap is hit. No congestion window, no RTT estimation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from core.channel import PATH_LINKS
from core.errors import DeliveryAbandoned
from core.models import Tcp
from services.links import Path, StarTopology

logger = logging.getLogger(__name__)


# --- UDP ---


def transmit_udp(path: Path, payload_bytes: int, copies: int, rng: np.random.Generator, now_us: float = 0.0) -> list[float]:
    """Arrival times of the copies that survive both links, sorted; copies leave back-to-back."""
    if copies < 1:
        raise ValueError(f"copies must be >= 1, got {copies}")
    up, down = path
    survived = up.survives(rng, payload_bytes, (copies,)) & down.survives(rng, payload_bytes, (copies,))
    delays = up.traversal_us(rng, payload_bytes, (copies,)) + down.traversal_us(rng, payload_bytes, (copies,))
    departures = now_us + np.arange(copies) * up.serialization_us(payload_bytes)
    return sorted((departures + delays)[survived].tolist())


def broadcast_udp(
    topology: StarTopology,
    destinations: Sequence[int],
    payload_bytes: int,
    copies: int,
    rng: np.random.Generator,
    now_us: float = 0.0,
) -> list[list[float]]:
    """transmit_udp towards every destination at once; one arrival list per destination."""
    if copies < 1:
        raise ValueError(f"copies must be >= 1, got {copies}")
    if not destinations:
        return []
    survived, delays = topology.sample_paths(rng, payload_bytes, (len(destinations), copies))
    departures = now_us + np.arange(copies) * topology.serialization_us(payload_bytes)
    arrivals = departures[None, :] + delays
    return [sorted(arrivals[i][survived[i]].tolist()) for i in range(len(destinations))]


# --- TCP ---


@dataclass(frozen=True)
class TcpEndpointModel:
    """Sender-side retransmission policy shared by every connection of one transport."""

    config: Tcp = Tcp()

    @property
    def max_retx(self) -> int:
        return self.config.max_retx

    def rto_schedule_ms(self) -> list[float]:
        return self.config.rto_schedule_ms()


@dataclass
class SegmentState:
    size_bytes: int
    attempts: int = 0
    next_timeout_ms: Optional[float] = None
    delivered_us: Optional[float] = None


@dataclass
class TcpDelivery:
    """Outcome of one (sender, receiver, message) transfer."""

    message_id: str
    arrival_us: Optional[float]
    segments: list[SegmentState] = field(default_factory=list)
    first_sends_us: list[float] = field(default_factory=list)
    retransmissions_us: list[float] = field(default_factory=list)

    @property
    def abandoned(self) -> bool:
        return self.arrival_us is None

    def result(self) -> float:
        if self.arrival_us is None:
            raise DeliveryAbandoned(self.message_id)
        return self.arrival_us


def _ack_link_success(endpoint: TcpEndpointModel, path: Path, size_bytes: int) -> tuple[float, float]:
    if endpoint.config.ack_success is not None:
        per_link = endpoint.config.ack_success ** (1.0 / PATH_LINKS)
        return per_link, per_link
    # ACKs default to the data frame's survival
    down, up = path[1], path[0]
    return down.success(size_bytes), up.success(size_bytes)


def transmit_tcp(
    endpoint: TcpEndpointModel,
    path: Path,
    payload_bytes: int,
    rng: np.random.Generator,
    now_us: float = 0.0,
    message_id: str = "",
) -> TcpDelivery:
    """Send one message over an established connection.

    A segment counts as delivered in the first attempt whose data frame and
    ACK both survive, at that data frame's arrival. After max_retx failed
    retransmissions the segment, and with it the message, is abandoned.
    """
    up, down = path
    rtos = endpoint.rto_schedule_ms()
    delivery = TcpDelivery(message_id=message_id, arrival_us=None)

    offset = now_us
    for size in endpoint.config.segment_sizes(payload_bytes):
        state = SegmentState(size_bytes=size)
        delivery.segments.append(state)
        sent_at = offset
        offset += up.serialization_us(size)
        ack_back, ack_up = _ack_link_success(endpoint, path, size)
        for attempt in range(endpoint.max_retx + 1):
            state.attempts += 1
            if attempt == 0:
                delivery.first_sends_us.append(sent_at)
            else:
                delivery.retransmissions_us.append(sent_at)
            forward = bool(up.survives(rng, size)) and bool(down.survives(rng, size))
            if forward and rng.random() < ack_back and rng.random() < ack_up:
                state.delivered_us = sent_at + float(up.traversal_us(rng, size) + down.traversal_us(rng, size))
                state.next_timeout_ms = None
                break
            if attempt == endpoint.max_retx:
                break
            state.next_timeout_ms = rtos[attempt]
            sent_at += rtos[attempt] * 1e3

    if all(segment.delivered_us is not None for segment in delivery.segments):
        delivery.arrival_us = max(segment.delivered_us for segment in delivery.segments)
    else:
        logger.debug(f"TCP delivery {message_id} abandoned after {endpoint.max_retx} retransmissions")
    return delivery
