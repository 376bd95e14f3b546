"""Task streams: trace files, synthetic generation, the token-based workload
model and pluggable output-length predictors.

Trace files are CSV with header ``slot,client,task_type,prompt_tokens,
output_tokens,data_size``, one row per task, sorted by slot.  Task ids are the
0-based row index, which is also the key used by prediction files
(``task_id,predicted_tokens``).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import erf, log, sqrt
from typing import Iterable, Optional

import numpy as np

from .core import ConfigError, ExperimentConfig, Task

TRACE_HEADER = ["slot", "client", "task_type", "prompt_tokens", "output_tokens", "data_size"]
PREDICTIONS_HEADER = ["task_id", "predicted_tokens"]


class TraceError(ValueError):
    """Malformed or invalid trace/predictions file."""


@dataclass(frozen=True)
class TraceRow:
    slot: int
    client: int
    task_type: int
    prompt_tokens: int
    output_tokens: int
    data_size: float


@dataclass
class Trace:
    rows: list[TraceRow]
    source: str = "synthetic"
    seed: Optional[int] = None
    _by_slot: dict[int, list[int]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        last_slot = -1
        for i, row in enumerate(self.rows):
            if row.slot < last_slot:
                raise TraceError(f"row {i}: slots must be non-decreasing")
            last_slot = row.slot
            self._by_slot.setdefault(row.slot, []).append(i)

    def __len__(self) -> int:
        return len(self.rows)

    def max_slot(self) -> int:
        return self.rows[-1].slot if self.rows else -1

    def tasks_for_slot(self, slot: int, alpha: np.ndarray, beta: np.ndarray) -> list[Task]:
        """Materialize Task objects for one slot.  Sensitivities are looked up
        by task type; intra-slot rank follows row order (arrival order)."""
        tasks = []
        for rank, idx in enumerate(self._by_slot.get(slot, [])):
            row = self.rows[idx]
            tasks.append(Task(
                id=idx,
                client=row.client,
                type=row.task_type,
                arrival_slot=row.slot,
                intra_slot_rank=rank,
                data_size=row.data_size,
                prompt_tokens=row.prompt_tokens,
                true_output_tokens=row.output_tokens,
                delay_sensitivity=float(alpha[row.task_type]),
                accuracy_sensitivity=float(beta[row.task_type]),
            ))
        return tasks


def _validate_row(row: TraceRow, line_no: int, num_clients: int | None, num_types: int | None):
    if row.slot < 0:
        raise TraceError(f"line {line_no}: slot must be non-negative")
    if row.client < 0 or (num_clients is not None and row.client >= num_clients):
        raise TraceError(f"line {line_no}: client index {row.client} out of range")
    if row.task_type < 0 or (num_types is not None and row.task_type >= num_types):
        raise TraceError(f"line {line_no}: task type {row.task_type} out of range")
    if row.prompt_tokens < 0 or row.output_tokens < 0:
        raise TraceError(f"line {line_no}: token counts must be non-negative")
    if row.data_size <= 0:
        raise TraceError(f"line {line_no}: data size must be positive")


def load_trace(path: str, num_clients: int | None = None, num_types: int | None = None) -> Trace:
    """Parse and validate a trace file; errors carry the offending line number."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceError("empty file: missing header") from None
        if [h.strip() for h in header] != TRACE_HEADER:
            raise TraceError(f"unexpected header {header!r}, expected {TRACE_HEADER!r}")
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(TRACE_HEADER):
                raise TraceError(f"line {line_no}: expected {len(TRACE_HEADER)} fields, got {len(record)}")
            try:
                row = TraceRow(
                    slot=int(record[0]),
                    client=int(record[1]),
                    task_type=int(record[2]),
                    prompt_tokens=int(record[3]),
                    output_tokens=int(record[4]),
                    data_size=float(record[5]),
                )
            except ValueError as exc:
                raise TraceError(f"line {line_no}: {exc}") from exc
            _validate_row(row, line_no, num_clients, num_types)
            rows.append(row)
    rows.sort(key=lambda r: r.slot)   # stable: preserves arrival order within a slot
    return Trace(rows=rows, source=str(path))


def save_trace(trace: Trace, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for row in trace.rows:
            writer.writerow([row.slot, row.client, row.task_type,
                             row.prompt_tokens, row.output_tokens, repr(row.data_size)])


def generate_trace(config: ExperimentConfig, seed: int | None = None) -> Trace:
    """Synthesize a trace: independent Poisson arrivals per client per slot,
    heavy-tailed (discretized lognormal, clipped) token lengths, data size
    proportional to the prompt.  Pure function of (config, seed).
    """
    if seed is None:
        seed = config.system.rng_seed
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    sys = config.system
    lo, hi = config.token_clip
    rows = []
    for slot in range(sys.horizon):
        for client in range(sys.num_clients):
            n = rng.poisson(config.arrival_rate)
            for _ in range(n):
                task_type = int(rng.integers(0, sys.num_task_types))
                prompt = int(np.clip(round(rng.lognormal(*config.prompt_lognorm)), lo, hi))
                output = int(np.clip(round(rng.lognormal(*config.output_lognorm)), lo, hi))
                rows.append(TraceRow(
                    slot=slot,
                    client=client,
                    task_type=task_type,
                    prompt_tokens=prompt,
                    output_tokens=output,
                    data_size=prompt * config.data_per_prompt_token,
                ))
    return Trace(rows=rows, source="synthetic", seed=seed)


# ---------------------------------------------------------------------------
# Workload model


@dataclass(frozen=True)
class WorkloadModel:
    """Compute cost of one query in workload-units.

    ``per_token`` charges the prefill unit per prompt token and the decode
    unit per output token; ``flat_stage`` charges each stage once regardless
    of length.
    """

    prefill_unit: float
    decode_unit: float
    mode: str = "per_token"            # "per_token" | "flat_stage"
    scale: str = "custom"

    def __post_init__(self):
        if self.prefill_unit <= 0 or self.decode_unit <= 0:
            raise ValueError("stage units must be positive")
        if self.mode not in ("per_token", "flat_stage"):
            raise ValueError(f"unknown workload mode {self.mode!r}")

    @staticmethod
    def small(mode: str = "per_token") -> "WorkloadModel":
        return WorkloadModel(prefill_unit=2.0, decode_unit=1.0, mode=mode, scale="small")

    @staticmethod
    def large(mode: str = "per_token") -> "WorkloadModel":
        return WorkloadModel(prefill_unit=8.0, decode_unit=4.0, mode=mode, scale="large")

    @staticmethod
    def from_config(config: ExperimentConfig) -> "WorkloadModel":
        return WorkloadModel(prefill_unit=config.prefill_unit,
                             decode_unit=config.decode_unit,
                             mode=config.workload_mode)


def workload_units(task: Task, model: WorkloadModel, use_predicted: bool = False) -> float:
    """Workload of one task.  The planner passes use_predicted=True; realized
    delays always use the true output length."""
    if model.mode == "flat_stage":
        return model.prefill_unit + model.decode_unit
    if use_predicted:
        if task.predicted_output_tokens is None:
            raise ValueError(f"task {task.id}: predicted output length not set")
        output = task.predicted_output_tokens
    else:
        output = task.true_output_tokens
    return model.prefill_unit * task.prompt_tokens + model.decode_unit * output


# ---------------------------------------------------------------------------
# Output-length predictors


class Predictor:
    """Fills task.predicted_output_tokens before the policy decides."""

    name = "base"

    def predict(self, task: Task) -> int:
        raise NotImplementedError

    def apply(self, tasks: Iterable[Task]) -> None:
        for task in tasks:
            value = int(self.predict(task))
            if value < 0:
                raise ValueError(f"predictor {self.name} produced a negative length")
            task.predicted_output_tokens = value


class OraclePredictor(Predictor):
    name = "oracle"

    def predict(self, task: Task) -> int:
        return task.true_output_tokens


class ConstantPredictor(Predictor):
    name = "constant"

    def __init__(self, mean: float):
        if mean < 0:
            raise ValueError("constant prediction must be non-negative")
        self.mean = float(mean)

    def predict(self, task: Task) -> int:
        return int(round(self.mean))


class NoisyPredictor(Predictor):
    """Truth corrupted by seeded zero-mean relative noise."""

    name = "noisy"

    def __init__(self, rel_stddev: float, seed: int = 0):
        if rel_stddev < 0:
            raise ValueError("relative stddev must be non-negative")
        self.rel_stddev = float(rel_stddev)
        self._rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2,)))

    def predict(self, task: Task) -> int:
        eps = self._rng.normal(0.0, self.rel_stddev) if self.rel_stddev > 0 else 0.0
        return max(0, int(round(task.true_output_tokens * (1.0 + eps))))


class TablePredictor(Predictor):
    """Predictions produced elsewhere (e.g. by the length-predictor package),
    keyed by task id."""

    name = "from_table"

    def __init__(self, table: dict[int, int], source: str = "table"):
        self.table = dict(table)
        self.source = source

    def predict(self, task: Task) -> int:
        try:
            return self.table[task.id]
        except KeyError:
            raise TraceError(f"predictions {self.source} has no entry for task {task.id}") from None


class FilePredictor(TablePredictor):
    """TablePredictor loaded from a ``task_id,predicted_tokens`` file."""

    name = "from_file"

    def __init__(self, path: str):
        super().__init__(load_predictions(path), source=f"file {path}")
        self.path = str(path)


def load_predictions(path: str) -> dict[int, int]:
    table: dict[int, int] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceError("empty predictions file: missing header") from None
        if [h.strip() for h in header] != PREDICTIONS_HEADER:
            raise TraceError(f"unexpected header {header!r}, expected {PREDICTIONS_HEADER!r}")
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            try:
                task_id, tokens = int(record[0]), int(record[1])
            except (ValueError, IndexError) as exc:
                raise TraceError(f"line {line_no}: {exc}") from exc
            if tokens < 0:
                raise TraceError(f"line {line_no}: predicted length must be non-negative")
            table[task_id] = tokens
    return table


def save_predictions(table: dict[int, int], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREDICTIONS_HEADER)
        for task_id in sorted(table):
            writer.writerow([task_id, table[task_id]])


def expected_output_tokens(config: ExperimentConfig) -> float:
    """Analytic mean of the clipped, discretized lognormal output length.

    Used to give the constant predictor a fair mean without peeking at any
    particular trace.  Computed by quadrature over the underlying density.
    """
    mu, sigma = config.output_lognorm
    lo, hi = config.token_clip
    # E[clip(round(X), lo, hi)] for X ~ LogNormal(mu, sigma): sum of
    # k * P(round(X) = k) over the clip range, via the Gaussian CDF.

    def cdf(x: float) -> float:
        if x <= 0:
            return 0.0
        return 0.5 * (1.0 + erf((log(x) - mu) / (sigma * sqrt(2.0))))

    total = lo * cdf(lo + 0.5)
    for k in range(lo + 1, hi):
        total += k * (cdf(k + 0.5) - cdf(k - 0.5))
    total += hi * (1.0 - cdf(hi - 0.5))
    return total


def make_predictor(config: ExperimentConfig) -> Predictor:
    name = config.predictor
    params = config.predictor_params
    if name == "oracle":
        return OraclePredictor()
    if name == "constant":
        mean = params.get("mean")
        if mean is None:
            mean = expected_output_tokens(config)
        return ConstantPredictor(float(mean))
    if name == "noisy":
        return NoisyPredictor(float(params.get("rel_stddev", 0.3)), seed=config.system.rng_seed)
    if name == "from_file":
        path = params.get("path")
        if not path:
            raise ConfigError("from_file predictor requires a 'path' parameter")
        return FilePredictor(path)
    raise ConfigError(f"unknown predictor {name!r}")
