"""
HTTP surface of the PBFT performance toolkit.

Exposes the closed-form model and single-scenario simulation as JSON
endpoints. Start it with `python run.py`.
"""

import logging
from typing import Any, Dict, Literal, Optional

from fastapi import FastAPI, HTTPException
from fastapi.concurrency import run_in_threadpool
from pydantic import BaseModel, Field

from core import __version__, settings
from core.errors import InvalidConfig, PerfModelError
from core.scenario import validate
from experiments.sweep import evaluate_point, model_columns, model_scenario
from services.analytic import message_model_for, required_retransmissions

# ====================================================
# Application setup
# ====================================================

settings.configure_logging()
logger = logging.getLogger("app")

app = FastAPI(
    title="PBFT Performance API",
    description="Transaction-success model and discrete-event simulator for PBFT over lossy channels",
    version=__version__,
)


@app.on_event("startup")
async def startup_event():
    logger.info("Starting PBFT performance API")


@app.on_event("shutdown")
async def shutdown_event():
    logger.info("Shutting down PBFT performance API")


def _raise_http(exc: PerfModelError) -> None:
    if isinstance(exc, InvalidConfig):
        raise HTTPException(status_code=422, detail=exc.violations) from exc
    raise HTTPException(status_code=400, detail=str(exc)) from exc


# ====================================================
# Request schemas
# ====================================================


class ModelEvalRequest(BaseModel):
    n: int
    f: int
    p: Optional[float] = Field(default=None, description="End-to-end packet success probability")
    ber: Optional[float] = Field(default=None, description="Bit error rate per link")
    payload_bytes: int = 128
    reply_threshold: Optional[int] = None
    transport: Literal["udp", "tcp"] = "udp"
    repeats: int = 1
    repeats_preprepare: Optional[int] = None
    max_retx: int = 12


class RequiredRetxRequest(BaseModel):
    n: int
    f: int
    u: int = 1
    p: float
    udp: bool = False


# ====================================================
# Endpoints
# ====================================================


@app.get("/healthz")
async def healthz():
    """Health check endpoint for uptime checks."""
    return {"status": "ok"}


@app.post("/model/eval")
async def model_eval(req: ModelEvalRequest) -> Dict[str, Any]:
    """P_succ, expected replies, the fast bound and the switch recommendation."""
    try:
        spec = model_scenario(**req.model_dump())
        columns = model_columns(spec)
        return {
            "p_msg": message_model_for(spec).p_msg,
            "p_succ": columns["model_p_succ"],
            "expected_replies": columns["model_expected_replies"],
            "lower_bound": columns["model_lower_bound"],
            "switch_to_tcp": columns["switch_to_tcp"],
        }
    except PerfModelError as e:
        _raise_http(e)


@app.post("/model/required-retx")
async def model_required_retx(req: RequiredRetxRequest) -> Dict[str, int]:
    try:
        return {"r": required_retransmissions(req.n, req.f, req.u, req.p, udp=req.udp)}
    except PerfModelError as e:
        _raise_http(e)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@app.post("/sim/run")
async def sim_run(scenario: Dict[str, Any]) -> Dict[str, Any]:
    """Simulate one scenario (ScenarioSpec as JSON) and return its result row."""
    try:
        spec = validate(scenario)
        logger.info(f"Simulating {spec.scenario_id} ({spec.repetitions}x{spec.requests} transactions)")
        row = await run_in_threadpool(evaluate_point, spec)
        return row.model_dump(exclude={"error"})
    except PerfModelError as e:
        logger.error(f"Simulation request rejected: {e}")
        _raise_http(e)
