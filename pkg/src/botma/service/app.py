"""HTTP front end: ``uvicorn botma.service.app:app`` or ``botma serve``."""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from . import handlers, schemas

app = FastAPI(title="botma", version=__version__)


@app.exception_handler(handlers.RequestError)
async def _request_error(request: Request, exc: handlers.RequestError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.get("/health", response_model=schemas.Health)
def health():
    return handlers.health()


@app.get("/presets", response_model=schemas.PresetList)
def presets():
    return handlers.presets()


@app.get("/presets/{name}", response_model=schemas.ScenarioModel)
def preset(name: str):
    return handlers.preset(name)


@app.post("/simulate", response_model=schemas.SimulateResponse)
def simulate(req: schemas.SimulateRequest):
    return handlers.simulate(req)


@app.post("/solve", response_model=schemas.SolveResponse)
def solve(req: schemas.SolveRequest, volume: bool = False):
    return handlers.solve(req, keep_volume=volume)


@app.post("/mc", response_model=schemas.MonteCarloResponse)
def monte_carlo(req: schemas.MonteCarloRequest):
    return handlers.monte_carlo(req)


@app.post("/sweep", response_model=schemas.SweepResponse)
def sweep(req: schemas.SweepRequest):
    return handlers.sweep(req)


@app.post("/compare", response_model=schemas.CompareResponse)
def compare(req: schemas.CompareRequest):
    return handlers.compare(req)
