"""HTTP service exposing the scenario runner.

Three endpoints: ``POST /run`` executes any configured task, ``POST
/validate`` runs the consistency suite regardless of the configured task,
``GET /health`` reports liveness. Malformed or semantically invalid
configurations come back as 422; numerical failures on valid input come
back as 200 with ``status: computation_failed`` so clients can distinguish
the two.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__
from .errors import ConfigInvalid
from .models import RunResponse, ScenarioConfig
from .scenarios import run_scenario

app = FastAPI(title="voldist", version=__version__,
              description="volume distance and affine normal-form "
                          "measurements on convex bodies")


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/run", response_model=RunResponse)
def run(config: ScenarioConfig) -> RunResponse:
    try:
        return run_scenario(config)
    except ConfigInvalid as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.post("/validate", response_model=RunResponse)
def validate(config: ScenarioConfig) -> RunResponse:
    forced = config.model_copy(update={"task": "validate"})
    try:
        return run_scenario(forced)
    except ConfigInvalid as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
