"""Request/response models for the simulation service.

The scenario payload mirrors the YAML scenario schema one-to-one; clients
inline the drive-cycle CSV so the service never reads client paths.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class ScenarioModel(BaseModel):
    name: str = "scenario"
    seed: int = 0
    duration: float | None = None
    radar_delay: float = 0.0
    cycle: dict
    timing: dict = Field(default_factory=dict)
    initial: dict = Field(default_factory=dict)
    env: dict = Field(default_factory=dict)
    plant: dict
    nominal_errors: dict = Field(default_factory=dict)
    uncertain_bounds: dict = Field(default_factory=dict)
    controller: dict = Field(default_factory=dict)
    excitation: dict = Field(default_factory=dict)
    param_step: dict | None = None

    def to_config_dict(self) -> dict:
        data = self.model_dump()
        if data["duration"] is None:
            data.pop("duration")
        if data["param_step"] is None:
            data.pop("param_step")
        return data


class MetricsModel(BaseModel):
    mode: str
    energy_cost: float
    fuel_used: float
    soc_delta: float
    ep_rms: float
    ev_rms: float
    constraint_violations: int
    max_ep_excursion: float
    solve_time_p50: float
    solve_time_p95: float
    solve_time_max: float
    duration: float
    diverged: bool = False


class RunRequest(BaseModel):
    scenario: ScenarioModel
    mode: str | None = None
    seed: int | None = None
    collect_estimators: bool = False


class RunResponse(BaseModel):
    metrics: MetricsModel
    trace_csv: str
    timing_csv: str
    estimator_csv: str | None = None


class CompareEntry(MetricsModel):
    energy_cost_delta_pct: float


class CompareRequest(BaseModel):
    scenario: ScenarioModel
    modes: list[str]
    seed: int | None = None


class CompareResponse(BaseModel):
    scenario: str
    reference_mode: str
    rows: list[CompareEntry]


class TubeRequest(BaseModel):
    scenario: ScenarioModel


class TubeResponse(BaseModel):
    report: dict
    text: str


class EstimateRequest(BaseModel):
    scenario: ScenarioModel
    seed: int | None = None


class EstimateResponse(BaseModel):
    metrics: MetricsModel
    estimator_csv: str


class CycleValidateRequest(BaseModel):
    csv_text: str
    name: str = "cycle"


class CycleValidateResponse(BaseModel):
    ok: bool
    rows: int = 0
    duration_s: float = 0.0
    v_max_mps: float = 0.0
    message: str = ""


class ErrorDetail(BaseModel):
    code: str
    exit_code: int
    message: str
