"""Named experiment presets, one per published figure plus a few extra studies.

Where a figure only says "packet loss" without a grid, the presets sweep
end-to-end packet loss over LOSS_GRID (0 to 30 % in 2.5 % steps). That grid
is our choice.

The n=20 presets use the fixed 2f quorum so that the simulated replicas wait
for exactly as many messages as the closed-form model assumes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Optional

from core.models import ScenarioSpec
from core.scenario import validate
from experiments.report import ScenarioResult
from experiments.sweep import grid, sweep

logger = logging.getLogger(__name__)

LOSS_GRID = tuple(grid(0.0, 0.30, 0.025))
BER_GRID = tuple(grid(0.0, 13e-5, 1e-5))
NODE_RANGE = (4, 5, 6, 7)


@dataclass(frozen=True)
class Series:
    scenario: dict[str, Any]
    axis: str
    values: tuple[float, ...]
    simulate: bool = True


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    series: tuple[Series, ...]


def _scenario(
    scenario_id: str, n: int, f: int, transport: Optional[dict] = None, quorum_rule: str = "byzantine", **extra: Any
) -> dict[str, Any]:
    data = {
        "scenario_id": scenario_id,
        "system": {"n": n, "f": f, "payload_bytes": 128, "quorum_rule": quorum_rule},
        "channel": {
            "delay": {"kind": "truncated_normal", "mean_ms": 20.0, "std_ms": 5.0},
            "bandwidth_bps": 100e6,
        },
        "transport": transport or {"kind": "udp", "repeats": 1},
        "requests": 100,
        "repetitions": 20,
    }
    data.update(extra)
    return data


_TCP = {"kind": "tcp", "max_retx": 12}

PRESETS: dict[str, Preset] = {
    preset.name: preset
    for preset in (
        Preset(
            "fig2",
            "Success probability vs bit error rate, n=20, f=6, UDP",
            (Series(_scenario("fig2", 20, 6, quorum_rule="fixed"), "ber", BER_GRID),),
        ),
        Preset(
            "fig3",
            "Exact expected replies vs the closed-form lower bound, n=20, f=6 (model only)",
            (
                Series(
                    _scenario("fig3", 20, 6, quorum_rule="fixed"),
                    "packet_loss",
                    tuple(grid(0.0, 0.30, 0.01)),
                    simulate=False,
                ),
            ),
        ),
        Preset(
            "fig4",
            "UDP repetition code r=1..3, n=4, f=1",
            tuple(
                Series(_scenario(f"fig4-r{r}", 4, 1, {"kind": "udp", "repeats": r}), "packet_loss", LOSS_GRID)
                for r in (1, 2, 3)
            ),
        ),
        Preset(
            "fig5",
            "Node redundancy over UDP, f=1, n=4..7",
            tuple(Series(_scenario(f"fig5-n{n}", n, 1), "packet_loss", LOSS_GRID) for n in NODE_RANGE),
        ),
        Preset(
            "fig6",
            "Node redundancy over TCP (12 retransmissions), f=1, n=4..7",
            tuple(Series(_scenario(f"fig6-n{n}", n, 1, _TCP), "packet_loss", LOSS_GRID) for n in NODE_RANGE),
        ),
        Preset(
            "fig7",
            "PRE-PREPARE sent 1..3 times, other phases once, n=4, f=1",
            tuple(
                Series(
                    _scenario(f"fig7-rpp{r_pp}", 4, 1, {"kind": "udp", "repeats": 1, "repeats_preprepare": r_pp}),
                    "packet_loss",
                    LOSS_GRID,
                )
                for r_pp in (1, 2, 3)
            ),
        ),
        Preset(
            "fault-bound",
            "Minimal deployments n=3f+1 for f=1..4 over UDP",
            tuple(Series(_scenario(f"fault-bound-f{f}", 3 * f + 1, f), "packet_loss", LOSS_GRID) for f in (1, 2, 3, 4)),
        ),
        Preset(
            "hybrid",
            "TCP for PRE-PREPARE and UDP for the rest vs pure UDP, n=4, f=1",
            (
                Series(_scenario("hybrid-udp", 4, 1), "packet_loss", LOSS_GRID),
                Series(
                    _scenario(
                        "hybrid-tcp-preprepare",
                        4,
                        1,
                        {"kind": "hybrid", "preprepare": _TCP, "other": {"kind": "udp", "repeats": 1}},
                    ),
                    "packet_loss",
                    LOSS_GRID,
                ),
            ),
        ),
        Preset(
            "byzantine-silent",
            "n=6, f=1 with one silent replica vs n=4, f=1 without faults",
            (
                Series(_scenario("byzantine-n4", 4, 1), "packet_loss", LOSS_GRID),
                Series(_scenario("byzantine-n6-silent", 6, 1, faulty={"count": 1}), "packet_loss", LOSS_GRID),
            ),
        ),
    )
}


def preset_scenario(series: Series, seed: Optional[int] = None, **overrides: Any) -> ScenarioSpec:
    data = dict(series.scenario)
    data.update({key: value for key, value in overrides.items() if value is not None})
    if seed is not None:
        data["seed"] = seed
    return validate(data)


def run_preset(
    name: str,
    seed: Optional[int] = None,
    requests: Optional[int] = None,
    repetitions: Optional[int] = None,
    workers: int = 1,
    progress: bool = True,
) -> ScenarioResult:
    """All series of a preset, concatenated into one result (rows keep their series scenario_id)."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}, expected one of {', '.join(PRESETS)}")
    preset = PRESETS[name]
    logger.info(f"Running preset {name}: {preset.description}")
    rows = []
    for series in preset.series:
        base = preset_scenario(series, seed=seed, requests=requests, repetitions=repetitions)
        result = sweep(base, series.axis, series.values, simulate=series.simulate, workers=workers, progress=progress)
        rows.extend(result.rows)
    axis = preset.series[0].axis if preset.series else ""
    return ScenarioResult(scenario_id=name, axis_name=axis, rows=rows)
