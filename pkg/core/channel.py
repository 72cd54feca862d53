"""Channel-parameter conversions shared by the analytic model and the simulator."""

from __future__ import annotations

import numpy as np

from .models import BitErrorRate, ChannelSpec, PacketSuccess

# node -> router -> node
PATH_LINKS = 2


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")


def ber_to_packet_success(ber: float, total_bytes: int) -> float:
    """Probability that all 8*total_bytes bits of a frame survive i.i.d. bit errors."""
    _check_probability("ber", ber)
    if total_bytes < 1:
        raise ValueError(f"total_bytes must be >= 1, got {total_bytes}")
    if ber == 1.0:
        return 0.0
    # log1p keeps (1 - ber)^bits accurate for tiny error rates
    return float(np.exp(8 * total_bytes * np.log1p(-ber)))


def fec_effective_success(p_l: float, r: int) -> float:
    """Success of a repetition code: at least one of r independent copies arrives."""
    _check_probability("p_l", p_l)
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    return 1.0 - (1.0 - p_l) ** r


def link_success(channel: ChannelSpec, payload_bytes: int) -> float:
    """Probability that a frame carrying `payload_bytes` survives one link."""
    loss = channel.loss
    if isinstance(loss, PacketSuccess):
        return loss.p if loss.per == "link" else loss.p ** (1.0 / PATH_LINKS)
    if isinstance(loss, BitErrorRate):
        return ber_to_packet_success(loss.ber, max(1, channel.frame_bytes(payload_bytes)))
    raise TypeError(f"unsupported loss model {type(loss).__name__}")


def path_success(channel: ChannelSpec, payload_bytes: int) -> float:
    """End-to-end survival over the node-router-node path (transport-layer view)."""
    return link_success(channel, payload_bytes) ** PATH_LINKS
