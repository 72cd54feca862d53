"""Pydantic models describing a PBFT deployment over a lossy star network.

Every model is frozen and rejects unknown keys, so a scenario file with a
typo fails loudly instead of silently falling back to a default.
"""

from __future__ import annotations

import math
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

# Ethernet + IPv4 + UDP framing
DEFAULT_HEADER_BYTES = 54
DEFAULT_BANDWIDTH_BPS = 100e6
DEFAULT_PAYLOAD_BYTES = 128
DEFAULT_TCP_MAX_RETX = 12
DEFAULT_MSS_BYTES = 1460


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# --- System ---


class SystemConfig(_Frozen):
    """Replica count, fault bound and the quorum thresholds derived from them.

    prepare_commit_threshold counts messages from *other* nodes (2f by
    default); reply_threshold is what the client waits for (2f+1 by default,
    f+1 in the optimistic reading).
    """

    n: int = Field(ge=1)
    f: int = Field(ge=0)
    prepare_commit_threshold: Optional[int] = Field(default=None, ge=0)
    reply_threshold: Optional[int] = Field(default=None, ge=1)
    payload_bytes: int = Field(default=DEFAULT_PAYLOAD_BYTES, ge=1)
    quorum_rule: Literal["byzantine", "fixed"] = "byzantine"

    @property
    def quorum(self) -> int:
        """Same-phase messages a node needs, counting its own: more than (n+f)/2."""
        return (self.n + self.f) // 2 + 1

    @property
    def simulator_threshold(self) -> int:
        """Distinct messages from other nodes the simulated replicas wait for."""
        if self.quorum_rule == "fixed":
            return self.prepare_commit_threshold if self.prepare_commit_threshold is not None else 2 * self.f
        return self.quorum - 1


# --- Channel ---


class PacketSuccess(_Frozen):
    kind: Literal["packet_success"] = "packet_success"
    p: float = Field(ge=0.0, le=1.0)
    per: Literal["link", "path"] = "link"


class BitErrorRate(_Frozen):
    kind: Literal["ber"] = "ber"
    ber: float = Field(ge=0.0, le=1.0)


LossModel = Annotated[Union[PacketSuccess, BitErrorRate], Field(discriminator="kind")]


class Deterministic(_Frozen):
    kind: Literal["deterministic"] = "deterministic"
    ms: float = Field(ge=0.0)

    @property
    def mean_ms(self) -> float:
        return self.ms


class TruncatedNormal(_Frozen):
    """Normal delay truncated at zero; give either std_ms or variance_ms2."""

    kind: Literal["truncated_normal"] = "truncated_normal"
    mean_ms: float = Field(ge=0.0)
    std_ms: Optional[float] = Field(default=None, ge=0.0)
    variance_ms2: Optional[float] = Field(default=None, ge=0.0)

    @property
    def sigma_ms(self) -> float:
        if self.std_ms is not None:
            return self.std_ms
        return math.sqrt(self.variance_ms2 or 0.0)


DelayModel = Annotated[Union[Deterministic, TruncatedNormal], Field(discriminator="kind")]


class ChannelSpec(_Frozen):
    """Loss, delay and capacity of every node-router link of the star."""

    loss: LossModel = PacketSuccess(p=1.0)
    delay: DelayModel = TruncatedNormal(mean_ms=20.0, std_ms=5.0)
    bandwidth_bps: float = Field(default=DEFAULT_BANDWIDTH_BPS, gt=0.0)
    header_bytes: int = Field(default=DEFAULT_HEADER_BYTES, ge=0)

    def frame_bytes(self, payload_bytes: int) -> int:
        return payload_bytes + self.header_bytes

    def serialization_ms(self, payload_bytes: int) -> float:
        return self.frame_bytes(payload_bytes) * 8 / self.bandwidth_bps * 1e3


# --- Transport ---


class Udp(_Frozen):
    """Datagrams repeated `repeats` times; PRE-PREPARE may use its own count."""

    kind: Literal["udp"] = "udp"
    repeats: int = Field(default=1, ge=1)
    repeats_preprepare: Optional[int] = Field(default=None, ge=1)

    @property
    def preprepare_copies(self) -> int:
        return self.repeats_preprepare if self.repeats_preprepare is not None else self.repeats


class Tcp(_Frozen):
    """Simplified TCP: per-segment ACKs, exponential RTO backoff, retransmission cap."""

    kind: Literal["tcp"] = "tcp"
    max_retx: int = Field(default=DEFAULT_TCP_MAX_RETX, ge=0)
    ack_success: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    mss_bytes: int = Field(default=DEFAULT_MSS_BYTES, gt=0)
    initial_rto_ms: float = Field(default=1000.0, gt=0.0)
    max_rto_ms: float = Field(default=60000.0, gt=0.0)

    def segment_count(self, payload_bytes: int) -> int:
        return max(1, math.ceil(payload_bytes / self.mss_bytes))

    def segment_sizes(self, payload_bytes: int) -> list[int]:
        u = self.segment_count(payload_bytes)
        return [self.mss_bytes] * (u - 1) + [payload_bytes - (u - 1) * self.mss_bytes]

    def rto_schedule_ms(self) -> list[float]:
        """RTO waited before each retransmission: doubling from the initial RTO, capped."""
        rtos = []
        rto = self.initial_rto_ms
        for _ in range(self.max_retx):
            rtos.append(rto)
            rto = min(self.max_rto_ms, 2 * rto)
        return rtos


PlainTransport = Annotated[Union[Udp, Tcp], Field(discriminator="kind")]


class Hybrid(_Frozen):
    """One transport for PRE-PREPARE, another for PREPARE/COMMIT/REPLY."""

    kind: Literal["hybrid"] = "hybrid"
    preprepare: PlainTransport = Tcp()
    other: PlainTransport = Udp()


TransportSpec = Annotated[Union[Udp, Tcp, Hybrid], Field(discriminator="kind")]


def preprepare_transport(transport: Union[Udp, Tcp, Hybrid]) -> Union[Udp, Tcp]:
    return transport.preprepare if isinstance(transport, Hybrid) else transport


def other_transport(transport: Union[Udp, Tcp, Hybrid]) -> Union[Udp, Tcp]:
    return transport.other if isinstance(transport, Hybrid) else transport


# --- Scenario ---


class FaultSpec(_Frozen):
    count: int = Field(default=0, ge=0)
    behavior: Literal["silent"] = "silent"


class ScenarioSpec(_Frozen):
    """One simulated deployment: `repetitions` independent runs of `requests` transactions."""

    scenario_id: str = "scenario"
    system: SystemConfig
    channel: ChannelSpec = ChannelSpec()
    transport: TransportSpec = Udp()
    requests: int = Field(default=100, ge=1)
    repetitions: int = Field(default=20, ge=1)
    txn_timeout_ms: Optional[float] = Field(default=None, gt=0.0)
    seed: int = Field(default=0, ge=0, lt=2**64)
    faulty: FaultSpec = FaultSpec()
