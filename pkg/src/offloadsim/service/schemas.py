"""Pydantic request/response models for the HTTP service.

Experiment configs travel as the same versioned JSON document the config
files use; the service validates them with the core parser.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class ConfigEnvelope(BaseModel):
    """Any request that carries an experiment config document."""
    config: Dict[str, Any]


class ValidateResponse(BaseModel):
    ok: bool
    errors: List[str] = []


class GenerateTraceRequest(ConfigEnvelope):
    seed: Optional[int] = None


class TraceRowModel(BaseModel):
    slot: int
    client: int
    task_type: int
    prompt_tokens: int
    output_tokens: int
    data_size: float


class GenerateTraceResponse(BaseModel):
    count: int
    rows: List[TraceRowModel]


class RunRequest(ConfigEnvelope):
    include_slots: bool = False
    # optional replay inputs: a fixed trace and/or a prediction table keyed
    # by task id (overrides the config's predictor selection)
    trace_rows: Optional[List[TraceRowModel]] = None
    predictions: Optional[Dict[int, int]] = None


class RunResponse(BaseModel):
    summary: Dict[str, Any]
    slots: Optional[List[Dict[str, Any]]] = None


class SweepRequest(ConfigEnvelope):
    v_list: List[float]
    seeds: Optional[List[int]] = None


class TableResponse(BaseModel):
    rows: List[Dict[str, Any]]


class StabilityRequest(ConfigEnvelope):
    t_list: List[int]
    slack: Optional[float] = None


class OracleCheckRequest(BaseModel):
    instances: int = 100
    tasks: int = Field(default=6, ge=1)
    servers: int = Field(default=3, ge=1)
    seed: int = 42
    solver_params: Dict[str, Any] = {}


class OracleCheckResponse(BaseModel):
    num_instances: int
    within_10pct: float
    max_gap: float
    min_margin: float
    instances: List[Dict[str, Any]]


class CompareRequest(ConfigEnvelope):
    policies: List[str]
    seeds: List[int]


class ComparePredictorsRequest(ConfigEnvelope):
    predictors: List[str]
    seeds: List[int]
