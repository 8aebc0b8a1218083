"""Request and response bodies for the HTTP service."""
from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PointModel(BaseModel):
    x: float
    y: float


class LegModel(BaseModel):
    course: float
    speed: float = Field(ge=0)
    duration: float = Field(gt=0)


class TruthModel(BaseModel):
    r0: float = Field(gt=0)
    b0: float
    course: float
    speed: float = Field(ge=0)


class ScenarioModel(BaseModel):
    name: str = ""
    observer_start: PointModel
    legs: list[LegModel]
    truth: TruthModel
    dt: float = Field(gt=0)
    n_samples: int = Field(ge=2)
    noise_sigma: float = Field(ge=0)
    seed: int = Field(ge=0)
    observable: bool = True


class ScenarioRef(BaseModel):
    """Either a preset name or an inline scenario."""

    preset: Optional[str] = None
    scenario: Optional[ScenarioModel] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.preset is None) == (self.scenario is None):
            raise ValueError("give exactly one of 'preset' or 'scenario'")
        return self


class SolverSpec(BaseModel):
    """``kind`` plus any solver fields, checked by the core config parser."""

    model_config = ConfigDict(extra="allow")
    kind: Literal["ga", "cma", "grid"]


class CandidateModel(BaseModel):
    r0: float
    course: float
    speed: float


class SimulateRequest(ScenarioRef):
    pass


class SimulateResponse(BaseModel):
    scenario: ScenarioModel
    times: list[float]
    observer: list[tuple[float, float]]
    target: list[tuple[float, float]]
    clean: list[float]
    noisy: list[float]


class SolveRequest(ScenarioRef):
    solver: SolverSpec
    master_seed: int = Field(0, ge=0)
    jobs: int = Field(1, ge=1)
    trace: bool = False
    confirm_large_grid: bool = False


class GaRunRow(BaseModel):
    run: int
    x0: float
    y0: float
    course: float
    speed: float
    cost: float
    fevals: int


class SolveResponse(BaseModel):
    solver: str
    estimate: CandidateModel
    cost: float
    fevals: int
    details: dict[str, Any] = {}
    trace: list[tuple[int, float, float, float, float, float]] = []
    ga_runs: list[GaRunRow] = []


class RunRecordModel(BaseModel):
    run: int
    r: float
    course: float
    speed: float
    cost: float
    fevals: int


class SummaryModel(BaseModel):
    solver: str
    noise_sigma: float
    truth: CandidateModel
    mean: CandidateModel
    std: CandidateModel
    abs_dev: CandidateModel
    runs: int
    total_fevals: int
    records: list[RunRecordModel] = []


class MonteCarloRequest(ScenarioRef):
    solver: SolverSpec
    M: int = Field(100, ge=1)
    master_seed: int = Field(0, ge=0)
    jobs: int = Field(1, ge=1)
    thresholds: dict[str, Any] = {}


class MonteCarloResponse(BaseModel):
    summary: SummaryModel
    violations: list[str] = []


class SweepRequest(MonteCarloRequest):
    sigmas: list[float] = Field(min_length=1)


class SweepResponse(BaseModel):
    rows: list[SummaryModel]
    violations: list[str] = []


class CompareRequest(ScenarioRef):
    solvers: dict[str, SolverSpec] = Field(min_length=2)
    M: int = Field(1, ge=1)
    master_seed: int = Field(0, ge=0)
    jobs: int = Field(1, ge=1)


class CompareRow(BaseModel):
    label: str
    summary: SummaryModel


class CompareResponse(BaseModel):
    rows: list[CompareRow]
    fevals: dict[str, int]


class PresetList(BaseModel):
    presets: list[str]


class Health(BaseModel):
    status: str = "ok"
    version: str
