"""Monte-Carlo simulation of the abstract four-phase reception process.

No timing and no shared transmissions: every participant independently draws
how many of the other participants' messages it heard. This is exactly the
independence structure of the closed form in services.analytic, so the two
must agree up to sampling error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from core.models import SystemConfig
from services.analytic import MessageSuccessModel

logger = logging.getLogger(__name__)

DEFAULT_BATCH = 100_000


@dataclass(frozen=True)
class OracleEstimate:
    trials: int
    success_rate: float
    success_se: float
    expected_replies: float
    expected_replies_se: float
    # fraction of trials in which every node passed every phase and the client heard all n
    full_rate: float


def _thresholds(cfg: SystemConfig, count_primary: bool) -> tuple[int, int, int, int]:
    f = cfg.f
    phase = 2 * f if cfg.prepare_commit_threshold is None else cfg.prepare_commit_threshold
    reply = 2 * f + 1 if cfg.reply_threshold is None else cfg.reply_threshold
    quorum = 2 * f + 1
    m0 = max(quorum - 1, 0) if count_primary else quorum
    return phase, quorum, m0, reply


def simulate_phases(
    cfg: SystemConfig,
    msg: MessageSuccessModel,
    trials: int = 1_000_000,
    seed: int = 0,
    count_primary: bool = False,
    batch: int = DEFAULT_BATCH,
) -> OracleEstimate:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    n = cfg.n
    p, p_pp = msg.p_msg, msg.preprepare_success
    phase, quorum, m0, reply = _thresholds(cfg, count_primary)
    rng = np.random.Generator(np.random.PCG64(seed))
    slots = np.arange(n)

    successes = 0
    replies_sum = 0.0
    replies_sq = 0.0
    full = 0
    done = 0
    while done < trials:
        size = min(batch, trials - done)
        m = rng.binomial(n - 1, p_pp, size=size)
        # primary plus the m backups that got the PRE-PREPARE
        participants = slots[None, :] < (m + 1)[:, None]
        heard = rng.binomial(np.broadcast_to(m[:, None], (size, n)), p)
        k = ((heard >= phase) & participants).sum(axis=1)

        committers = slots[None, :] < k[:, None]
        heard = rng.binomial(np.broadcast_to(np.maximum(k - 1, 0)[:, None], (size, n)), p)
        j = ((heard >= phase) & committers).sum(axis=1)

        s = rng.binomial(j, p)

        passed = (m >= m0) & (k >= quorum) & (j >= quorum)
        restricted = np.where(passed, s, 0).astype(float)
        successes += int(np.count_nonzero(passed & (s >= reply)))
        replies_sum += float(restricted.sum())
        replies_sq += float(np.square(restricted).sum())
        full += int(np.count_nonzero((m == n - 1) & (k == n) & (j == n) & (s == n)))
        done += size

    rate = successes / trials
    mean = replies_sum / trials
    variance = max(replies_sq / trials - mean**2, 0.0)
    logger.debug(f"Phase oracle n={n} f={cfg.f} p={p:.4f}: rate={rate:.5f} E[S]={mean:.4f} over {trials} trials")
    return OracleEstimate(
        trials=trials,
        success_rate=rate,
        success_se=float(np.sqrt(rate * (1.0 - rate) / trials)),
        expected_replies=mean,
        expected_replies_se=float(np.sqrt(variance / trials)),
        full_rate=full / trials,
    )
