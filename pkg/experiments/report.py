"""Sweep results: row model, Wilson intervals and the CSV format."""

from __future__ import annotations

import io
import logging
import math
from pathlib import Path
from typing import IO, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy.stats import binomtest

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "scenario_id",
    "axis_name",
    "axis_value",
    "packet_loss_effective",
    "success_rate",
    "ci_low",
    "ci_high",
    "latency_mean_ms",
    "latency_p50_ms",
    "latency_p95_ms",
    "msgs_per_txn",
    "model_p_succ",
    "model_expected_replies",
    "model_lower_bound",
    "switch_to_tcp",
]

CONFIDENCE = 0.95


class SweepRow(BaseModel):
    scenario_id: str
    axis_name: str
    axis_value: Optional[float] = None
    packet_loss_effective: Optional[float] = None
    success_rate: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    latency_mean_ms: Optional[float] = None
    latency_p50_ms: Optional[float] = None
    latency_p95_ms: Optional[float] = None
    msgs_per_txn: Optional[float] = None
    model_p_succ: Optional[float] = None
    model_expected_replies: Optional[float] = None
    model_lower_bound: Optional[float] = None
    switch_to_tcp: Optional[bool] = None
    # not part of the CSV
    successes: int = 0
    trials: int = 0
    error: Optional[str] = None


class ScenarioResult(BaseModel):
    scenario_id: str
    axis_name: str
    rows: list[SweepRow] = []


def wilson_interval(successes: int, trials: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    """Wilson score interval of a binomial proportion; (nan, nan) without trials."""
    if trials <= 0:
        return math.nan, math.nan
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


# --- CSV ---


def _format_axis_value(value: Optional[float]) -> str:
    if value is None or math.isnan(value):
        return ""
    return np.format_float_positional(value, trim="-")


def result_frame(result: ScenarioResult) -> pd.DataFrame:
    records = []
    for row in result.rows:
        record = {column: getattr(row, column) for column in CSV_COLUMNS}
        record["axis_value"] = _format_axis_value(row.axis_value)
        record["switch_to_tcp"] = None if row.switch_to_tcp is None else int(row.switch_to_tcp)
        records.append(record)
    frame = pd.DataFrame.from_records(records, columns=CSV_COLUMNS)
    frame["switch_to_tcp"] = frame["switch_to_tcp"].astype("Int64")
    return frame


def emit_csv(result: ScenarioResult, destination: Union[str, Path, IO[str], None] = None) -> bytes:
    """Write the CSV to `destination` (path or text handle) and return its bytes."""
    text = result_frame(result).to_csv(index=False, float_format="%.6f", lineterminator="\n")
    if isinstance(destination, (str, Path)):
        path = Path(destination)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fp:
            fp.write(text)
        logger.info(f"Wrote {len(result.rows)} rows to {path}")
    elif destination is not None:
        destination.write(text)
    return text.encode("utf-8")


def _optional(value) -> Optional[float]:
    if value is None or pd.isna(value):
        return None
    return float(value)


def load_csv(source: Union[str, Path, IO[str], bytes]) -> ScenarioResult:
    """Parse an emitted CSV back into a ScenarioResult (simulation counts are not stored)."""
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    frame = pd.read_csv(source, dtype={"scenario_id": str, "axis_name": str}, keep_default_na=True)
    missing = [column for column in CSV_COLUMNS if column not in frame.columns]
    if missing:
        raise ValueError(f"CSV is missing columns: {', '.join(missing)}")

    rows = []
    for record in frame.to_dict(orient="records"):
        switch = record["switch_to_tcp"]
        row = SweepRow(
            scenario_id=record["scenario_id"],
            axis_name=record["axis_name"],
            switch_to_tcp=None if pd.isna(switch) else bool(int(switch)),
            **{column: _optional(record[column]) for column in CSV_COLUMNS[2:-1]},
        )
        if row.success_rate is None and row.model_p_succ is None:
            row = row.model_copy(update={"error": "not evaluated"})
        rows.append(row)

    scenario_id = rows[0].scenario_id if rows else ""
    axis_name = rows[0].axis_name if rows else ""
    return ScenarioResult(scenario_id=scenario_id, axis_name=axis_name, rows=rows)
