"""Closed-form transaction-success model for PBFT over lossy channels.

The model follows a single view-consensus round through its four phases.
Random variables (all counts of nodes):

    M  backups that receive the PRE-PREPARE          (out of n-1)
    K  nodes that accept PREPARE                    (out of M+1, primary included)
    J  nodes that accept COMMIT                     (out of K)
    S  REPLY messages that reach the client          (out of J)

A node accepts PREPARE (COMMIT) when at least 2f of the messages sent by the
other participants of the phase arrive; its own message is not counted.
Message deliveries are i.i.d. with success probability p_msg, which already
includes the transport (UDP repetitions or TCP retransmissions).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import binom

from core.channel import fec_effective_success, path_success
from core.errors import FaultBoundTooSmall, Unsatisfiable
from core.models import ScenarioSpec, SystemConfig, Tcp, Udp, other_transport, preprepare_transport

logger = logging.getLogger(__name__)


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")


# --- Message success models ---


@dataclass(frozen=True)
class UdpModel:
    """Per-message success of a (possibly repeated) datagram."""

    p_msg: float
    p_preprepare: Optional[float] = None

    def __post_init__(self) -> None:
        _check_probability("p_msg", self.p_msg)
        if self.p_preprepare is not None:
            _check_probability("p_preprepare", self.p_preprepare)

    @property
    def preprepare_success(self) -> float:
        return self.p_msg if self.p_preprepare is None else self.p_preprepare


@dataclass(frozen=True)
class TcpModel:
    """Per-message success of a message split into segments, each retransmitted up to max_retx times.

    p_segments holds P(M|p) of every segment: the segment and its ACK both survive.
    """

    p_segments: tuple[float, ...]
    max_retx: int
    p_preprepare: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.p_segments:
            raise ValueError("p_segments must not be empty")
        for value in self.p_segments:
            _check_probability("p_segment", value)
        if self.max_retx < 0:
            raise ValueError(f"max_retx must be >= 0, got {self.max_retx}")
        if self.p_preprepare is not None:
            _check_probability("p_preprepare", self.p_preprepare)

    @property
    def segment_count(self) -> int:
        return len(self.p_segments)

    @property
    def p_segment(self) -> float:
        return self.p_segments[0]

    @property
    def p_msg(self) -> float:
        return tcp_message_success(self.p_segments, self.max_retx)

    @property
    def preprepare_success(self) -> float:
        return self.p_msg if self.p_preprepare is None else self.p_preprepare


MessageSuccessModel = Union[UdpModel, TcpModel]


@dataclass(frozen=True)
class JointPhaseDistribution:
    """P(M=m, K=k, J=j, S=s) stored as a dense array indexed [m, k, j, s]."""

    n: int
    f: int
    pmf: np.ndarray

    def entry(self, m: int, k: int, j: int, s: int) -> float:
        if not (0 <= m < self.n and 0 <= s <= j <= k <= m + 1):
            return 0.0
        return float(self.pmf[m, k, j, s])

    def total_mass(self) -> float:
        return float(self.pmf.sum())


# --- Building blocks ---


def binomial_tail(threshold: int, trials: int, p: float) -> float:
    """P(X >= threshold) for X ~ Binomial(trials, p)."""
    _check_probability("p", p)
    if threshold <= 0:
        return 1.0
    if threshold > trials:
        return 0.0
    return float(binom.sf(threshold - 1, trials, p))


def _phase_threshold(cfg: SystemConfig) -> int:
    return 2 * cfg.f if cfg.prepare_commit_threshold is None else cfg.prepare_commit_threshold


def _reply_threshold(cfg: SystemConfig) -> int:
    return 2 * cfg.f + 1 if cfg.reply_threshold is None else cfg.reply_threshold


def joint_pmf(cfg: SystemConfig, msg: MessageSuccessModel) -> JointPhaseDistribution:
    n = cfg.n
    p = msg.p_msg
    threshold = _phase_threshold(cfg)
    counts = np.arange(n + 1)
    tail = np.array([binomial_tail(threshold, x, p) for x in counts])
    # reply[j, s] = C(j, s) p^s (1-p)^(j-s); zero above the diagonal
    reply = binom.pmf(counts[None, :], counts[:, None], p)
    preprepared = binom.pmf(np.arange(n), n - 1, msg.preprepare_success)

    pmf = np.zeros((n, n + 1, n + 1, n + 1))
    for m in range(n):
        if preprepared[m] == 0.0:
            continue
        prepared = binom.pmf(np.arange(m + 2), m + 1, tail[m])
        for k in range(m + 2):
            weight = preprepared[m] * prepared[k]
            if weight == 0.0:
                continue
            committed = binom.pmf(np.arange(k + 1), k, tail[max(k - 1, 0)])
            pmf[m, k, : k + 1, :] = weight * committed[:, None] * reply[: k + 1, :]
    return JointPhaseDistribution(n=n, f=cfg.f, pmf=pmf)


def _first_m(cfg: SystemConfig, count_primary: bool) -> int:
    quorum = 2 * cfg.f + 1
    return max(quorum - 1, 0) if count_primary else quorum


def success_probability(cfg: SystemConfig, msg: MessageSuccessModel, count_primary: bool = False) -> float:
    """P(S >= reply_threshold, J >= 2f+1, K >= 2f+1, M >= 2f+1).

    count_primary=True reads the PRE-PREPARE condition as M+1 >= 2f+1.
    """
    dist = joint_pmf(cfg, msg)
    quorum = 2 * cfg.f + 1
    m0 = _first_m(cfg, count_primary)
    return float(dist.pmf[m0:, quorum:, quorum:, _reply_threshold(cfg):].sum())


def expected_replies(cfg: SystemConfig, msg: MessageSuccessModel, count_primary: bool = False) -> float:
    """E[S; J >= 2f+1, K >= 2f+1, M >= 2f+1]; mass below the thresholds contributes zero."""
    dist = joint_pmf(cfg, msg)
    quorum = 2 * cfg.f + 1
    m0 = _first_m(cfg, count_primary)
    restricted = dist.pmf[m0:, quorum:, quorum:, :].sum(axis=(0, 1, 2))
    return float(np.dot(restricted, np.arange(cfg.n + 1)))


def expected_replies_lower_bound(cfg: SystemConfig, msg: MessageSuccessModel) -> float:
    """Fast lower bound on expected_replies; needs f >= 1."""
    n, f = cfg.n, cfg.f
    if f < 1:
        raise FaultBoundTooSmall(f"the expected-replies bound requires f >= 1, got f={f}")
    p = msg.p_msg
    threshold = _phase_threshold(cfg)
    m = np.arange(n - 1)
    tail = np.array([binomial_tail(threshold, x + 1, p) for x in m])
    total = np.sum(binom.pmf(m, n - 2, p) * tail ** (2 * n + 2))
    return float(p**2 * n * total)


# --- TCP ---


def tcp_segment_success(p_l: float, p_ack: Optional[float] = None) -> float:
    """P(M|p): the segment and its acknowledgement both arrive."""
    _check_probability("p_l", p_l)
    p_ack = p_l if p_ack is None else p_ack
    _check_probability("p_ack", p_ack)
    return p_l * p_ack


def retx_success(p_tx: float, m: int) -> float:
    """Success within one transmission plus at most m retransmissions."""
    _check_probability("p_tx", p_tx)
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if p_tx == 1.0:
        return 1.0
    # log space: 1 - p_tx rounds to 1.0 for p_tx below machine epsilon
    return float(-np.expm1((m + 1) * np.log1p(-p_tx)))


def retx_success_series(p_tx: float, m: int) -> float:
    """Same quantity as retx_success, summed as a geometric series over attempts."""
    _check_probability("p_tx", p_tx)
    return float(p_tx * np.sum((1.0 - p_tx) ** np.arange(m + 1)))


def tcp_message_success(p_segments: Sequence[float], m: int) -> float:
    """All segments of a message get through within the retransmission cap."""
    if len(p_segments) == 0:
        raise ValueError("p_segments must not be empty")
    return float(np.prod([retx_success(p, m) for p in p_segments]))


def quorum_acceptance_distribution(n: int, f: int, p_msg: float) -> np.ndarray:
    """pmf of the number of replicas (out of n) receiving at least 2f of the n-1 other messages."""
    q = binomial_tail(2 * f, n - 1, p_msg)
    return binom.pmf(np.arange(n + 1), n, q)


def _check_bound_preconditions(n: int, f: int, u: int) -> None:
    if f < 1:
        raise FaultBoundTooSmall(f"the retransmission bound requires f >= 1, got f={f}")
    if f > (n - 1) // 3:
        raise ValueError(f"f must be <= floor((n-1)/3), got n={n}, f={f}")
    if u < 1:
        raise ValueError(f"u must be >= 1, got {u}")


def _transmissions_per_round(n: int, u: int) -> int:
    return u * n + (2 * n - 2) * (n - 1)


def tcp_expected_replies_bound(n: int, f: int, u: int, p_l: float, r: int, udp: bool = False) -> float:
    """Lower bound on expected replies with r retransmissions per segment.

    udp=True uses p_l instead of p_l**2 as the per-attempt success, i.e. r+1
    immediate datagram copies.
    """
    _check_bound_preconditions(n, f, u)
    _check_probability("p_l", p_l)
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    p_tx = p_l if udp else p_l**2
    return n * retx_success(p_tx, r) ** _transmissions_per_round(n, u)


def required_retransmissions(n: int, f: int, u: int, p_l: float, udp: bool = False) -> int:
    """Retransmissions per segment after which the bound reaches 2f+1 replies."""
    _check_bound_preconditions(n, f, u)
    _check_probability("p_l", p_l)
    if p_l == 0.0:
        raise Unsatisfiable("no number of retransmissions helps on a channel that never delivers")
    p_tx = p_l if udp else p_l**2
    if p_tx == 0.0:
        raise Unsatisfiable(f"per-attempt success underflows to zero for p_l={p_l}")
    if p_tx == 1.0:
        return 0
    exponent = 1.0 / _transmissions_per_round(n, u)
    target = 1.0 - ((2 * f + 1) / n) ** exponent
    r = max(math.ceil(math.log(target) / math.log1p(-p_tx) - 1.0), 0)

    def reaches(retx: int) -> bool:
        return tcp_expected_replies_bound(n, f, u, p_l, retx, udp=udp) >= 2 * f + 1

    # the ceil can be one off either way at an integer boundary
    if not reaches(r):
        r += 1
    elif r > 0 and reaches(r - 1):
        r -= 1
    return r


def transport_switch_recommended(
    cfg: SystemConfig, msg: MessageSuccessModel, fast: bool = False, count_primary: bool = False
) -> bool:
    """True when fewer than 2f+1 replies are expected.

    fast=True uses the lower bound, which can recommend switching earlier.
    count_primary is passed on to expected_replies.
    """
    if fast:
        expected = expected_replies_lower_bound(cfg, msg)
    else:
        expected = expected_replies(cfg, msg, count_primary=count_primary)
    return expected < 2 * cfg.f + 1


# --- Message accounting ---


def message_count(n: int, f: int, r_pp: int) -> int:
    """Messages of one view-consensus round with r_pp PRE-PREPARE retransmissions."""
    if n < 3 * f + 1:
        raise ValueError(f"n must be >= 3f+1, got n={n}, f={f}")
    if r_pp < 0:
        raise ValueError(f"r_pp must be >= 0, got {r_pp}")
    return (r_pp + 1) * n + 2 * n**2 + f + 1


def preprepare_overhead(n: int, f: int, r_pp: int = 1) -> float:
    """Relative message overhead of r_pp PRE-PREPARE retransmissions."""
    base = message_count(n, f, 0)
    return (message_count(n, f, r_pp) - base) / base


def node_addition_overhead(n_from: int, n_to: int, f: int) -> float:
    """Relative message overhead of growing the deployment from n_from to n_to nodes."""
    base = message_count(n_from, f, 0)
    return (message_count(n_to, f, 0) - base) / base


# --- Scenario bridge ---


def _transport_success(transport: Union[Udp, Tcp], spec: ScenarioSpec, preprepare: bool) -> float:
    payload = spec.system.payload_bytes
    if isinstance(transport, Udp):
        copies = transport.preprepare_copies if preprepare else transport.repeats
        return fec_effective_success(path_success(spec.channel, payload), copies)
    return tcp_message_success(_segment_successes(transport, spec), transport.max_retx)


def _segment_successes(transport: Tcp, spec: ScenarioSpec) -> tuple[float, ...]:
    # ack_success None: the ACK survives like its data frame, p(ACK) = p(l)
    return tuple(
        tcp_segment_success(path_success(spec.channel, size), transport.ack_success)
        for size in transport.segment_sizes(spec.system.payload_bytes)
    )


def message_model_for(spec: ScenarioSpec) -> MessageSuccessModel:
    """Effective per-message success of a scenario's channel and transport."""
    p_pre = _transport_success(preprepare_transport(spec.transport), spec, preprepare=True)
    other = other_transport(spec.transport)
    if isinstance(other, Tcp):
        return TcpModel(p_segments=_segment_successes(other, spec), max_retx=other.max_retx, p_preprepare=p_pre)
    return UdpModel(p_msg=_transport_success(other, spec, preprepare=False), p_preprepare=p_pre)
