"""FastAPI service wrapping the closed-loop simulator."""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI, HTTPException

from .. import __version__, harness
from ..errors import (ConfigError, DivergenceError, EcoAccError,
                      InfeasibleTighteningError)
from . import schemas

_ERROR_CODES = {
    ConfigError: "config-error",
    InfeasibleTighteningError: "infeasible-tightening",
    DivergenceError: "divergence",
}


def _http_error(exc: EcoAccError) -> HTTPException:
    code = _ERROR_CODES.get(type(exc), "error")
    detail = schemas.ErrorDetail(code=code, exit_code=exc.exit_code,
                                 message=str(exc)).model_dump()
    return HTTPException(status_code=400, detail=detail)


def _scenario(model: schemas.ScenarioModel, seed: int | None = None):
    cfg = harness.scenario_from_dict(model.to_config_dict())
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    return cfg


def _metrics_model(metrics: harness.RunMetrics) -> schemas.MetricsModel:
    return schemas.MetricsModel(**metrics.as_dict())


def create_app() -> FastAPI:
    app = FastAPI(title="ecoacc simulation service", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/run", response_model=schemas.RunResponse)
    def run(req: schemas.RunRequest):
        try:
            cfg = _scenario(req.scenario, req.seed)
            result = harness.run_scenario(cfg, mode=req.mode,
                                          collect_estimators=req.collect_estimators)
        except EcoAccError as exc:
            raise _http_error(exc) from exc
        estimator_csv = None
        if req.collect_estimators and result.estimator_rows:
            estimator_csv = harness.rows_to_csv(result.estimator_columns,
                                                result.estimator_rows)
        return schemas.RunResponse(
            metrics=_metrics_model(result.metrics),
            trace_csv=harness.rows_to_csv(result.trace_columns, result.trace_rows),
            timing_csv=harness.rows_to_csv(["t", "solve_time"], result.timing_rows),
            estimator_csv=estimator_csv,
        )

    @app.post("/compare", response_model=schemas.CompareResponse)
    def compare(req: schemas.CompareRequest):
        try:
            cfg = _scenario(req.scenario, req.seed)
            table = harness.compare_modes(cfg, req.modes)
        except EcoAccError as exc:
            raise _http_error(exc) from exc
        return schemas.CompareResponse(
            scenario=table["scenario"],
            reference_mode=table["reference_mode"],
            rows=[schemas.CompareEntry(**row) for row in table["rows"]],
        )

    @app.post("/tube", response_model=schemas.TubeResponse)
    def tube(req: schemas.TubeRequest):
        try:
            cfg = _scenario(req.scenario)
            report = harness.tube_report(cfg)
        except EcoAccError as exc:
            raise _http_error(exc) from exc
        return schemas.TubeResponse(report=report,
                                    text=harness.format_tube_report(report))

    @app.post("/estimate", response_model=schemas.EstimateResponse)
    def estimate(req: schemas.EstimateRequest):
        try:
            cfg = _scenario(req.scenario, req.seed)
            mode = cfg.controller.mode
            if mode not in ("at-nmpc", "nonrobust-nmpc"):
                mode = "at-nmpc"  # estimator traces need adaptation enabled
            result = harness.run_scenario(cfg, mode=mode, collect_estimators=True)
        except EcoAccError as exc:
            raise _http_error(exc) from exc
        return schemas.EstimateResponse(
            metrics=_metrics_model(result.metrics),
            estimator_csv=harness.rows_to_csv(result.estimator_columns,
                                              result.estimator_rows),
        )

    @app.post("/cycle/validate", response_model=schemas.CycleValidateResponse)
    def cycle_validate(req: schemas.CycleValidateRequest):
        try:
            cycle = harness.parse_drive_cycle(req.csv_text, name=req.name)
        except ConfigError as exc:
            return schemas.CycleValidateResponse(ok=False, message=str(exc))
        return schemas.CycleValidateResponse(
            ok=True, rows=int(cycle.t.size), duration_s=cycle.duration,
            v_max_mps=float(cycle.v.max()),
            message=f"cycle {cycle.name!r} valid")

    return app


app = create_app()
