"""Scenario validation and YAML scenario files."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Mapping, Union

import yaml
from pydantic import ValidationError

from .errors import InvalidConfig
from .models import Hybrid, ScenarioSpec, SystemConfig, Udp

logger = logging.getLogger(__name__)

# PRE-PREPARE, PREPARE, COMMIT, REPLY
PROTOCOL_HOPS = 4
TIMEOUT_FACTOR = 10


def _format_pydantic_error(err: Mapping[str, Any]) -> str:
    location = ".".join(str(part) for part in err.get("loc", ()))
    return f"{location}: {err.get('msg')}" if location else str(err.get("msg"))


def _system_violations(system: SystemConfig) -> list[str]:
    n, f = system.n, system.f
    violations = []
    if n < 3 * f + 1:
        violations.append(f"n < 3f+1 (n={n}, f={f})")
    if f > (n - 1) // 3:
        violations.append(f"f > floor((n-1)/3) (n={n}, f={f})")
    if system.reply_threshold is not None and system.reply_threshold not in (f + 1, 2 * f + 1):
        violations.append(f"reply_threshold must be f+1={f + 1} or 2f+1={2 * f + 1}, got {system.reply_threshold}")
    if system.prepare_commit_threshold is not None and system.prepare_commit_threshold > n - 1:
        violations.append(
            f"prepare_commit_threshold must be <= n-1={n - 1}, got {system.prepare_commit_threshold}"
        )
    return violations


def expected_latency_ms(spec: ScenarioSpec) -> float:
    """No-loss transaction latency: four protocol hops over two links each."""
    channel = spec.channel
    per_link = channel.delay.mean_ms + channel.serialization_ms(spec.system.payload_bytes)
    return PROTOCOL_HOPS * 2 * per_link


def validate(spec: Union[ScenarioSpec, Mapping[str, Any]]) -> ScenarioSpec:
    """Check every invariant and fill derived defaults.

    Raises InvalidConfig listing all violations found. Idempotent.
    """
    data = spec.model_dump() if isinstance(spec, ScenarioSpec) else dict(spec)
    try:
        parsed = ScenarioSpec.model_validate(data)
    except ValidationError as exc:
        raise InvalidConfig(_format_pydantic_error(err) for err in exc.errors()) from exc

    violations = _system_violations(parsed.system)
    if parsed.faulty.count > parsed.system.f:
        violations.append(f"faulty.count must be <= f={parsed.system.f}, got {parsed.faulty.count}")
    if violations:
        raise InvalidConfig(violations)

    system = parsed.system
    f = system.f
    system = system.model_copy(
        update={
            "prepare_commit_threshold": 2 * f if system.prepare_commit_threshold is None else system.prepare_commit_threshold,
            "reply_threshold": 2 * f + 1 if system.reply_threshold is None else system.reply_threshold,
        }
    )
    transport = parsed.transport
    if isinstance(transport, Udp):
        transport = transport.model_copy(update={"repeats_preprepare": transport.preprepare_copies})
    elif isinstance(transport, Hybrid):
        update = {}
        for name in ("preprepare", "other"):
            sub = getattr(transport, name)
            if isinstance(sub, Udp):
                update[name] = sub.model_copy(update={"repeats_preprepare": sub.preprepare_copies})
        transport = transport.model_copy(update=update)

    normalized = parsed.model_copy(update={"system": system, "transport": transport})
    if normalized.txn_timeout_ms is None:
        # a timed-out transaction counts as failed, also when TCP was still retransmitting
        normalized = normalized.model_copy(update={"txn_timeout_ms": TIMEOUT_FACTOR * expected_latency_ms(normalized)})
    return normalized


def load_scenario(path: Union[str, Path]) -> ScenarioSpec:
    """Read and validate a YAML scenario file."""
    path = Path(path)
    logger.info(f"Loading scenario from {path}")
    with path.open("r", encoding="utf-8") as fp:
        data = yaml.safe_load(fp) or {}
    if not isinstance(data, dict):
        raise InvalidConfig([f"{path}: top level must be a mapping"])
    return validate(data)


def dump_scenario(spec: ScenarioSpec) -> str:
    return yaml.safe_dump(spec.model_dump(mode="json"), sort_keys=False)
