"""Parameter sweeps: one simulated scenario per axis value, with the analytic prediction alongside."""

from __future__ import annotations

import logging
import math
from typing import Any, Iterable, Literal, Optional, Sequence

import numpy as np
from tqdm import tqdm

from core.channel import path_success
from core.errors import InvalidConfig, PerfModelError
from core.models import ScenarioSpec
from core.scenario import validate
from experiments.report import ScenarioResult, SweepRow, wilson_interval
from services.analytic import (
    expected_replies,
    expected_replies_lower_bound,
    message_model_for,
    success_probability,
    transport_switch_recommended,
)
from services.simulator import TransactionRecord, run

logger = logging.getLogger(__name__)

Axis = Literal["ber", "packet_loss", "repeats", "n", "r_pp"]
AXES: tuple[str, ...] = ("ber", "packet_loss", "repeats", "n", "r_pp")


def point_seed(base_seed: int, index: int) -> int:
    """Seed of the index-th sweep point, independent of how points are scheduled."""
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1, np.uint64)[0])


def _udp_section(data: dict[str, Any], axis: str) -> dict[str, Any]:
    transport = data["transport"]
    if transport["kind"] == "udp":
        return transport
    if transport["kind"] == "hybrid":
        section = "preprepare" if axis == "r_pp" else "other"
        if transport[section]["kind"] == "udp":
            return transport[section]
    raise PerfModelError(f"axis {axis!r} needs a UDP transport, scenario uses {transport['kind']}")


def apply_axis(base: ScenarioSpec, axis: str, value: float) -> ScenarioSpec:
    """Scenario at one axis value (not validated).

    packet_loss is end-to-end loss of one data message; repeats sets the send
    count of every phase; r_pp the PRE-PREPARE send count only.
    """
    data = base.model_dump()
    if axis == "ber":
        data["channel"]["loss"] = {"kind": "ber", "ber": float(value)}
    elif axis == "packet_loss":
        data["channel"]["loss"] = {"kind": "packet_success", "p": 1.0 - float(value), "per": "path"}
    elif axis == "repeats":
        section = _udp_section(data, axis)
        section["repeats"] = int(value)
        section["repeats_preprepare"] = int(value)
    elif axis == "r_pp":
        section = _udp_section(data, axis)
        section["repeats_preprepare"] = int(value)
    elif axis == "n":
        data["system"]["n"] = int(value)
    else:
        raise PerfModelError(f"unknown sweep axis {axis!r}, expected one of {', '.join(AXES)}")
    return ScenarioSpec.model_validate(data)


def model_scenario(
    n: int,
    f: int,
    p: Optional[float] = None,
    ber: Optional[float] = None,
    payload_bytes: int = 128,
    reply_threshold: Optional[int] = None,
    transport: str = "udp",
    repeats: int = 1,
    repeats_preprepare: Optional[int] = None,
    max_retx: int = 12,
) -> ScenarioSpec:
    """Validated scenario from bare model parameters; p is end-to-end packet success."""
    if (p is None) == (ber is None):
        raise InvalidConfig(["give exactly one of p and ber"])
    loss = {"kind": "ber", "ber": ber} if ber is not None else {"kind": "packet_success", "p": p, "per": "path"}
    if transport == "tcp":
        transport_spec = {"kind": "tcp", "max_retx": max_retx}
    else:
        transport_spec = {"kind": "udp", "repeats": repeats, "repeats_preprepare": repeats_preprepare}
    system = {"n": n, "f": f, "payload_bytes": payload_bytes, "reply_threshold": reply_threshold}
    return validate({"system": system, "channel": {"loss": loss}, "transport": transport_spec})


def model_columns(spec: ScenarioSpec) -> dict[str, Any]:
    """Analytic columns of a validated scenario, from the same effective message success the simulator sees.

    The primary counts towards the 2f+1 pre-prepared participants here, as it
    does in the simulated protocol.
    """
    system = spec.system
    msg = message_model_for(spec)
    bound = expected_replies_lower_bound(system, msg) if system.f >= 1 else None
    return {
        "packet_loss_effective": 1.0 - path_success(spec.channel, system.payload_bytes),
        "model_p_succ": success_probability(system, msg, count_primary=True),
        "model_expected_replies": expected_replies(system, msg, count_primary=True),
        "model_lower_bound": bound,
        "switch_to_tcp": transport_switch_recommended(system, msg, count_primary=True),
    }


def summarize(records: Sequence[TransactionRecord]) -> dict[str, Any]:
    """Simulation columns; latency statistics only over successful transactions."""
    trials = len(records)
    successes = sum(1 for record in records if record.success)
    latencies = np.array([record.latency_ms for record in records if record.success], dtype=float)
    ci_low, ci_high = wilson_interval(successes, trials)
    has_latency = latencies.size > 0
    return {
        "successes": successes,
        "trials": trials,
        "success_rate": successes / trials if trials else None,
        "ci_low": ci_low if trials else None,
        "ci_high": ci_high if trials else None,
        "latency_mean_ms": float(latencies.mean()) if has_latency else None,
        "latency_p50_ms": float(np.median(latencies)) if has_latency else None,
        "latency_p95_ms": float(np.percentile(latencies, 95)) if has_latency else None,
        "msgs_per_txn": float(np.mean([record.messages_total for record in records])) if trials else None,
    }


def evaluate_point(
    spec: ScenarioSpec,
    axis_name: str = "none",
    axis_value: Optional[float] = None,
    simulate: bool = True,
    workers: int = 1,
) -> SweepRow:
    """Model and (optionally) simulation columns of one validated scenario."""
    row = {"scenario_id": spec.scenario_id, "axis_name": axis_name, "axis_value": axis_value}
    row.update(model_columns(spec))
    if simulate:
        row.update(summarize(run(spec, workers=workers)))
    return SweepRow(**row)


def sweep(
    base: ScenarioSpec,
    axis: str,
    values: Iterable[float],
    simulate: bool = True,
    workers: int = 1,
    progress: bool = True,
) -> ScenarioResult:
    """One row per value, in order; a value that breaks the scenario yields an error row."""
    values = list(values)
    rows = []
    logger.info(f"Sweeping {base.scenario_id} over {axis} ({len(values)} points)")
    for index, value in enumerate(tqdm(values, desc=f"{base.scenario_id} {axis}", disable=not progress)):
        try:
            spec = apply_axis(base, axis, value).model_copy(update={"seed": point_seed(base.seed, index)})
            spec = validate(spec)
            rows.append(evaluate_point(spec, axis, float(value), simulate=simulate, workers=workers))
        except (PerfModelError, ValueError) as exc:
            logger.warning(f"Sweep point {axis}={value} of {base.scenario_id} skipped: {exc}")
            rows.append(SweepRow(scenario_id=base.scenario_id, axis_name=axis, axis_value=float(value), error=str(exc)))
    return ScenarioResult(scenario_id=base.scenario_id, axis_name=axis, rows=rows)


def grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic grid, rounded to kill float drift (0.1 + 0.2 style)."""
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(max(count, 0))]
