"""FastAPI application exposing the smoothed model checking pipeline.

Estimation runs synchronously inside the request, which suits the intended
grid sizes (seconds to a few minutes); put a job queue in front for anything
larger.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..errors import (FormulaSyntaxError, InferenceError, ModelSyntaxError,
                      ModelValidationError, MonitorError, SimulationError, SmoothMcError)
from . import schemas as sc
from .handlers import (estimate_handler, parse_formula_handler, smc_handler,
                       validate_model_handler)

app = FastAPI(title="smoothmc", version="0.1.0",
              description="Satisfaction-function estimation for uncertain CTMCs")


def _status_for(err: Exception) -> int:
    if isinstance(err, (ModelSyntaxError, FormulaSyntaxError, ModelValidationError,
                        MonitorError, ValueError)):
        return 400
    if isinstance(err, (SimulationError, InferenceError)):
        return 422
    return 500


def _run(fn, *args):
    try:
        return fn(*args)
    except (SmoothMcError, ValueError) as err:
        raise HTTPException(status_code=_status_for(err), detail=str(err)) from err


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/model/validate", response_model=sc.ModelInfo)
def validate_model(req: sc.ModelRequest) -> sc.ModelInfo:
    return _run(validate_model_handler, req)


@app.post("/formula/parse", response_model=sc.FormulaInfo)
def parse_formula(req: sc.FormulaRequest) -> sc.FormulaInfo:
    return _run(parse_formula_handler, req)


@app.post("/smc/estimate", response_model=sc.SmcResponse)
def smc_estimate(req: sc.SmcRequest) -> sc.SmcResponse:
    return _run(smc_handler, req)


@app.post("/smoothed/estimate", response_model=sc.EstimateResponse)
def smoothed_estimate(req: sc.EstimateRequest) -> sc.EstimateResponse:
    return _run(estimate_handler, req)
