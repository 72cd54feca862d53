"""Model-versus-simulation verdicts for a sweep result."""

from __future__ import annotations

import logging
from typing import Optional

from pydantic import BaseModel

from experiments.report import ScenarioResult

logger = logging.getLogger(__name__)

DEFAULT_MIN_FRACTION = 0.9


class RowVerdict(BaseModel):
    scenario_id: str
    axis_value: Optional[float]
    success_rate: float
    model_p_succ: float
    abs_error: float
    inside_ci: bool


class Comparison(BaseModel):
    scenario_id: str
    rows: list[RowVerdict]
    fraction_inside: float
    min_fraction: float = DEFAULT_MIN_FRACTION

    @property
    def passed(self) -> bool:
        return self.fraction_inside >= self.min_fraction


def compare(result: ScenarioResult, min_fraction: float = DEFAULT_MIN_FRACTION) -> Comparison:
    """Per row: distance between simulated and predicted success, and whether the prediction sits in the CI.

    Rows without both a simulated and a model value are left out. With no
    comparable rows the fraction is 1.0 (nothing contradicts the model).
    """
    verdicts = []
    for row in result.rows:
        if row.error or row.success_rate is None or row.model_p_succ is None:
            continue
        low = row.ci_low if row.ci_low is not None else row.success_rate
        high = row.ci_high if row.ci_high is not None else row.success_rate
        verdicts.append(
            RowVerdict(
                scenario_id=row.scenario_id,
                axis_value=row.axis_value,
                success_rate=row.success_rate,
                model_p_succ=row.model_p_succ,
                abs_error=abs(row.success_rate - row.model_p_succ),
                # CSV values carry 6 decimals
                inside_ci=low - 1e-6 <= row.model_p_succ <= high + 1e-6,
            )
        )
    fraction = sum(v.inside_ci for v in verdicts) / len(verdicts) if verdicts else 1.0
    logger.info(f"{result.scenario_id}: {fraction:.1%} of {len(verdicts)} rows inside the CI")
    return Comparison(scenario_id=result.scenario_id, rows=verdicts, fraction_inside=fraction, min_fraction=min_fraction)
