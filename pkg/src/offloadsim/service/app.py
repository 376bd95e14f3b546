"""HTTP service wrapping the simulator and analysis harnesses.

The CLI and this service call the same library functions; the service exists
so sweeps and comparisons can be driven remotely or by several clients.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, analysis
from ..core import ConfigError, ExperimentConfig
from ..simulator import run
from ..solver import SolverParams
from ..workload import TablePredictor, Trace, TraceError, TraceRow, generate_trace
from .schemas import (CompareRequest, ComparePredictorsRequest, ConfigEnvelope,
                      GenerateTraceRequest, GenerateTraceResponse,
                      HealthResponse, OracleCheckRequest, OracleCheckResponse,
                      RunRequest, RunResponse, StabilityRequest, SweepRequest,
                      TableResponse, TraceRowModel, ValidateResponse)


def _parse_config(doc: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.from_dict(doc)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="offloadsim", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/config/validate", response_model=ValidateResponse)
    def validate(request: ConfigEnvelope):
        try:
            ExperimentConfig.from_dict(request.config)
        except ConfigError as exc:
            return ValidateResponse(ok=False, errors=[str(exc)])
        return ValidateResponse(ok=True, errors=[])

    @app.post("/trace/generate", response_model=GenerateTraceResponse)
    def trace_generate(request: GenerateTraceRequest):
        config = _parse_config(request.config)
        trace = generate_trace(config, seed=request.seed)
        rows = [TraceRowModel(**vars(row)) for row in trace.rows]
        return GenerateTraceResponse(count=len(rows), rows=rows)

    @app.post("/runs", response_model=RunResponse)
    def runs(request: RunRequest):
        config = _parse_config(request.config)
        trace = None
        if request.trace_rows is not None:
            rows = sorted((TraceRow(**r.model_dump()) for r in request.trace_rows),
                          key=lambda r: r.slot)
            try:
                trace = Trace(rows=list(rows), source="request")
            except TraceError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
        predictor = None
        if request.predictions is not None:
            predictor = TablePredictor(request.predictions, source="request")
        try:
            report = run(config, trace=trace, predictor=predictor)
        except TraceError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        slots = [r.to_dict() for r in report.records] if request.include_slots else None
        return RunResponse(summary=report.summary_dict(), slots=slots)

    @app.post("/sweeps/tradeoff", response_model=TableResponse)
    def sweep_tradeoff(request: SweepRequest):
        config = _parse_config(request.config)
        return TableResponse(rows=analysis.v_sweep(config, request.v_list, request.seeds))

    @app.post("/stability", response_model=TableResponse)
    def stability(request: StabilityRequest):
        config = _parse_config(request.config)
        if request.slack is not None:
            config = analysis.make_slack_config(config, slack=request.slack)
        return TableResponse(rows=analysis.stability_check(config, request.t_list))

    @app.post("/oracle/check", response_model=OracleCheckResponse)
    def oracle_check(request: OracleCheckRequest):
        try:
            # empty solver_params selects the harness's longer price schedule
            params = (SolverParams.from_dict(request.solver_params)
                      if request.solver_params else None)
            summary = analysis.oracle_gap_check(
                num_instances=request.instances, seed=request.seed,
                num_tasks=request.tasks, num_servers=request.servers, params=params)
        except analysis.OracleSizeError as exc:
            raise HTTPException(status_code=413, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return OracleCheckResponse(**summary)

    @app.post("/policies/compare", response_model=TableResponse)
    def policies_compare(request: CompareRequest):
        config = _parse_config(request.config)
        try:
            rows = analysis.compare_policies(config, request.policies, request.seeds)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return TableResponse(rows=rows)

    @app.post("/predictors/compare", response_model=TableResponse)
    def predictors_compare(request: ComparePredictorsRequest):
        config = _parse_config(request.config)
        try:
            rows = analysis.compare_predictors(config, request.predictors, request.seeds)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return TableResponse(rows=rows)

    return app


app = create_app()
