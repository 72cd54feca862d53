"""Star topology: every endpoint hangs off one router through its own link.

The router forwards instantly; loss, propagation delay and serialization all
live on the links, so a node-to-node message crosses exactly two of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from core.channel import link_success
from core.models import ChannelSpec, Deterministic, TruncatedNormal

ROUTER = "router"

Endpoint = Union[int, str]


def sample_truncated_normal(rng: np.random.Generator, mean: float, sigma: float, shape) -> np.ndarray:
    """Normal draws conditioned on being >= 0, by rejection (no clipping)."""
    size = int(np.prod(shape))
    if sigma == 0.0:
        return np.full(shape, max(mean, 0.0), dtype=float)
    out = np.empty(size, dtype=float)
    pending = np.arange(size)
    while pending.size:
        draws = rng.normal(mean, sigma, pending.size)
        accepted = draws >= 0.0
        out[pending[accepted]] = draws[accepted]
        pending = pending[~accepted]
    return out.reshape(shape)


def sample_delay_ms(delay: Union[Deterministic, TruncatedNormal], rng: np.random.Generator, shape) -> np.ndarray:
    if isinstance(delay, Deterministic):
        return np.full(shape, delay.ms, dtype=float)
    return sample_truncated_normal(rng, delay.mean_ms, delay.sigma_ms, shape)


@dataclass(frozen=True)
class Link:
    endpoint_a: Endpoint
    endpoint_b: Endpoint
    channel: ChannelSpec

    def success(self, payload_bytes: int) -> float:
        return link_success(self.channel, payload_bytes)

    def serialization_us(self, payload_bytes: int) -> float:
        return self.channel.serialization_ms(payload_bytes) * 1e3

    def survives(self, rng: np.random.Generator, payload_bytes: int, shape=()) -> np.ndarray:
        return rng.random(shape) < self.success(payload_bytes)

    def traversal_us(self, rng: np.random.Generator, payload_bytes: int, shape=()) -> np.ndarray:
        """Sampled propagation delay plus serialization, in microseconds."""
        return sample_delay_ms(self.channel.delay, rng, shape) * 1e3 + self.serialization_us(payload_bytes)


Path = tuple[Link, Link]


class StarTopology:
    """Homogeneous star: one link per endpoint, all sharing the same channel."""

    def __init__(self, channel: ChannelSpec, endpoints: Iterable[int]):
        self.channel = channel
        self.links = {endpoint: Link(endpoint, ROUTER, channel) for endpoint in endpoints}

    def path(self, src: int, dst: int) -> Path:
        return self.links[src], self.links[dst]

    def serialization_us(self, payload_bytes: int) -> float:
        return self.channel.serialization_ms(payload_bytes) * 1e3

    def sample_paths(
        self, rng: np.random.Generator, payload_bytes: int, shape: tuple[int, ...], p_link: float | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """Survival and end-to-end delay (us) of `shape` independent two-link traversals.

        p_link overrides the per-link success probability (used for ACKs).
        """
        if p_link is None:
            p_link = link_success(self.channel, payload_bytes)
        survived = (rng.random(shape + (2,)) < p_link).all(axis=-1)
        delays = sample_delay_ms(self.channel.delay, rng, shape + (2,)) * 1e3
        return survived, delays.sum(axis=-1) + 2 * self.serialization_us(payload_bytes)
