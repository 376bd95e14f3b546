"""Domain types and system configuration shared by every other module.

Index conventions: server ids are 1-based, with ids 1..N on the edge tier and
N+1..N+U on the cloud tier.  Clients and task types are 0-based indices, which
is also how they appear in trace files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Optional

import numpy as np

CONFIG_SCHEMA_VERSION = 1


class Tier(str, Enum):
    EDGE = "edge"
    CLOUD = "cloud"


@dataclass(frozen=True)
class SystemConfig:
    """Static system-level parameters of one experiment."""

    num_edge: int
    num_cloud: int
    num_clients: int
    num_task_types: int
    horizon: int                      # number of slots
    tradeoff_v: float                 # weight of the QoE cost vs queue drift
    accuracy_weight: float            # weight of the accuracy reward inside the QoE cost
    min_rate: float                   # link feasibility threshold (data-units/time)
    rng_seed: int
    slot_duration: float = 1.0

    @property
    def num_servers(self) -> int:
        return self.num_edge + self.num_cloud


@dataclass(frozen=True)
class SamplingRanges:
    """Ranges the environment sampler draws static server/link parameters from.

    Edge/cloud tiers get separate ranges: edge servers are slower, less
    accurate and closer to the clients; cloud servers are the opposite.
    """

    edge_capacity: tuple[float, float] = (2.5, 5.0)
    cloud_capacity: tuple[float, float] = (5.0, 7.5)
    edge_budget: tuple[float, float] = (0.3, 0.6)     # per-slot compute-time budget
    cloud_budget: tuple[float, float] = (0.3, 0.6)
    edge_accuracy: tuple[float, float] = (0.1, 0.5)
    cloud_accuracy: tuple[float, float] = (0.6, 1.0)
    edge_base_delay: tuple[float, float] = (0.02, 0.1)   # propagation/protocol delay
    cloud_base_delay: tuple[float, float] = (0.15, 0.4)
    edge_rate: tuple[float, float] = (4.0, 10.0)      # per-slot link rate draws
    cloud_rate: tuple[float, float] = (1.5, 6.0)
    alpha: tuple[float, float] = (0.5, 1.0)           # per-type delay sensitivity
    beta: tuple[float, float] = (0.5, 1.0)            # per-type accuracy sensitivity


@dataclass
class Server:
    """One compute device.  Everything is fixed except the physical backlog."""

    id: int                            # 1-based, edge first
    tier: Tier
    capacity: float                    # workload-units per time-unit
    budget: float                      # time-averaged compute-time allowance per slot
    eta: np.ndarray                    # per-client propagation delay, shape (M,)
    accuracy: np.ndarray               # per-task-type accuracy, shape (K,)
    backlog: float = 0.0               # unfinished workload-units, mutated by the simulator


@dataclass
class Task:
    """One query: token counts, sensitivities and derived bookkeeping."""

    id: int
    client: int
    type: int
    arrival_slot: int
    intra_slot_rank: int
    data_size: float
    prompt_tokens: int
    true_output_tokens: int
    predicted_output_tokens: Optional[int] = None
    delay_sensitivity: float = 1.0
    accuracy_sensitivity: float = 1.0


@dataclass
class LinkState:
    """Realized link conditions for one slot."""

    rate: np.ndarray                   # shape (M, J), data-units per time-unit
    eta: np.ndarray                    # shape (M, J), fixed propagation delay

    def feasible(self, client: int, server_index: int, min_rate: float) -> bool:
        # Feasibility requires the rate to strictly exceed the threshold.
        return float(self.rate[client, server_index]) > min_rate


@dataclass
class Assignment:
    """Per-slot mapping of tasks to servers, with drops for infeasible tasks."""

    server_of: dict[int, int] = field(default_factory=dict)   # task id -> server id (1-based)
    dropped: set[int] = field(default_factory=set)

    def is_dropped(self, task_id: int) -> bool:
        return task_id in self.dropped

    def check(self, task_ids: list[int]) -> None:
        """Every task is either dropped or mapped to exactly one server."""
        for tid in task_ids:
            placed = tid in self.server_of
            if placed == (tid in self.dropped):
                raise ValueError(f"task {tid} must be either placed or dropped, not both/neither")


def validate_config(config: SystemConfig) -> list[str]:
    """Return every violated invariant; an empty list means the config is valid."""
    errors = []
    if config.num_edge < 0 or config.num_cloud < 0:
        errors.append("server counts must be non-negative")
    if config.num_edge + config.num_cloud < 1:
        errors.append("at least one server is required")
    if config.num_clients < 1:
        errors.append("at least one client is required")
    if config.num_task_types < 1:
        errors.append("at least one task type is required")
    if config.horizon < 1:
        errors.append("horizon must be >= 1")
    if config.tradeoff_v < 0:
        errors.append("tradeoff weight V must be non-negative")
    if config.accuracy_weight < 0:
        errors.append("accuracy weight must be non-negative")
    if config.min_rate < 0:
        errors.append("minimum rate must be non-negative")
    if config.slot_duration <= 0:
        errors.append("slot duration must be positive")
    return errors


def validate_servers(servers: list[Server]) -> list[str]:
    errors = []
    for s in servers:
        if s.capacity <= 0:
            errors.append(f"server {s.id}: capacity must be positive")
        if s.budget < 0:
            errors.append(f"server {s.id}: budget must be non-negative")
        if np.any(s.accuracy < 0) or np.any(s.accuracy > 1):
            errors.append(f"server {s.id}: accuracy values must lie in [0, 1]")
        if s.backlog < 0:
            errors.append(f"server {s.id}: backlog must be non-negative")
    return errors


class ConfigError(ValueError):
    """Raised when a config file is malformed or violates an invariant."""


def _as_range(value, name: str) -> tuple[float, float]:
    try:
        lo, hi = float(value[0]), float(value[1])
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"{name}: expected a [low, high] pair, got {value!r}") from exc
    if hi < lo:
        raise ConfigError(f"{name}: low bound exceeds high bound")
    return (lo, hi)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one run: system, sampling, workload,
    policy and predictor selection.  Serializes to a versioned JSON document.
    """

    system: SystemConfig
    sampling: SamplingRanges = field(default_factory=SamplingRanges)
    # Workload model / synthetic trace generation parameters.
    prefill_unit: float = 2.0          # workload-units per prompt token (small model scale)
    decode_unit: float = 1.0           # workload-units per output token
    workload_mode: str = "per_token"   # "per_token" | "flat_stage"
    arrival_rate: float = 0.10         # tasks per client per slot
    prompt_lognorm: tuple[float, float] = (2.3, 0.6)   # (mu, sigma) of log token count
    output_lognorm: tuple[float, float] = (2.1, 1.0)
    token_clip: tuple[int, int] = (1, 1024)
    data_per_prompt_token: float = 0.5
    # Policy / predictor selection.
    policy: str = "iterative"
    policy_params: dict = field(default_factory=dict)
    predictor: str = "oracle"
    predictor_params: dict = field(default_factory=dict)
    drop_penalty_delay: float = 1000.0  # delay charged for a task with no feasible link

    def to_dict(self) -> dict:
        doc = {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "system": asdict(self.system),
            "sampling": {k: list(v) for k, v in asdict(self.sampling).items()},
            "workload": {
                "prefill_unit": self.prefill_unit,
                "decode_unit": self.decode_unit,
                "mode": self.workload_mode,
                "arrival_rate": self.arrival_rate,
                "prompt_lognorm": list(self.prompt_lognorm),
                "output_lognorm": list(self.output_lognorm),
                "token_clip": list(self.token_clip),
                "data_per_prompt_token": self.data_per_prompt_token,
            },
            "policy": {"name": self.policy, "params": dict(self.policy_params)},
            "predictor": {"name": self.predictor, "params": dict(self.predictor_params)},
            "drop_penalty_delay": self.drop_penalty_delay,
        }
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        version = doc.get("schema_version")
        if version != CONFIG_SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema version: {version!r}")
        try:
            sys_doc = doc["system"]
            system = SystemConfig(
                num_edge=int(sys_doc["num_edge"]),
                num_cloud=int(sys_doc["num_cloud"]),
                num_clients=int(sys_doc["num_clients"]),
                num_task_types=int(sys_doc["num_task_types"]),
                horizon=int(sys_doc["horizon"]),
                tradeoff_v=float(sys_doc["tradeoff_v"]),
                accuracy_weight=float(sys_doc["accuracy_weight"]),
                min_rate=float(sys_doc["min_rate"]),
                rng_seed=int(sys_doc["rng_seed"]),
                slot_duration=float(sys_doc.get("slot_duration", 1.0)),
            )
        except KeyError as exc:
            raise ConfigError(f"missing system field: {exc}") from exc
        sampling_doc = doc.get("sampling", {})
        sampling = SamplingRanges(
            **{k: _as_range(v, f"sampling.{k}") for k, v in sampling_doc.items()}
        )
        wl = doc.get("workload", {})
        policy_doc = doc.get("policy", {})
        predictor_doc = doc.get("predictor", {})
        config = ExperimentConfig(
            system=system,
            sampling=sampling,
            prefill_unit=float(wl.get("prefill_unit", 2.0)),
            decode_unit=float(wl.get("decode_unit", 1.0)),
            workload_mode=str(wl.get("mode", "per_token")),
            arrival_rate=float(wl.get("arrival_rate", 0.10)),
            prompt_lognorm=tuple(float(x) for x in wl.get("prompt_lognorm", (2.3, 0.6))),
            output_lognorm=tuple(float(x) for x in wl.get("output_lognorm", (2.1, 1.0))),
            token_clip=tuple(int(x) for x in wl.get("token_clip", (1, 1024))),
            data_per_prompt_token=float(wl.get("data_per_prompt_token", 0.5)),
            policy=str(policy_doc.get("name", "iterative")),
            policy_params=dict(policy_doc.get("params", {})),
            predictor=str(predictor_doc.get("name", "oracle")),
            predictor_params=dict(predictor_doc.get("params", {})),
            drop_penalty_delay=float(doc.get("drop_penalty_delay", 1000.0)),
        )
        errors = config.validate()
        if errors:
            raise ConfigError("; ".join(errors))
        return config

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return ExperimentConfig.from_dict(doc)

    def validate(self) -> list[str]:
        errors = validate_config(self.system)
        if self.prefill_unit <= 0 or self.decode_unit <= 0:
            errors.append("prefill/decode units must be positive")
        if self.workload_mode not in ("per_token", "flat_stage"):
            errors.append(f"unknown workload mode {self.workload_mode!r}")
        if self.arrival_rate < 0:
            errors.append("arrival rate must be non-negative")
        if self.token_clip[0] < 1 or self.token_clip[1] < self.token_clip[0]:
            errors.append("token clip range must satisfy 1 <= low <= high")
        if self.data_per_prompt_token <= 0:
            errors.append("data size per prompt token must be positive")
        if self.drop_penalty_delay < 0:
            errors.append("drop penalty delay must be non-negative")
        return errors

    def replace(self, **kwargs) -> "ExperimentConfig":
        """Functional update; system-level fields may be passed directly."""
        sys_fields = {f for f in SystemConfig.__dataclass_fields__}
        sys_updates = {k: v for k, v in kwargs.items() if k in sys_fields}
        rest = {k: v for k, v in kwargs.items() if k not in sys_fields}
        doc = self.to_dict()
        doc["system"].update(sys_updates)
        for key, value in rest.items():
            if key in ("policy", "predictor"):
                doc[key]["name"] = value
            elif key == "policy_params":
                doc["policy"]["params"] = value
            elif key == "predictor_params":
                doc["predictor"]["params"] = value
            elif key in doc["workload"]:
                doc["workload"][key] = value
            elif key == "workload_mode":
                doc["workload"]["mode"] = value
            elif key == "sampling":
                doc["sampling"] = {k: list(v) for k, v in asdict(value).items()}
            elif key in doc:
                doc[key] = value
            else:
                raise KeyError(f"unknown config field {key!r}")
        return ExperimentConfig.from_dict(doc)


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentConfig.from_json(fh.read())


def save_config(config: ExperimentConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config.to_json())


def default_config(seed: int = 0, **overrides) -> ExperimentConfig:
    """Default synthetic setup: 4 edge + 6 cloud servers, 5 clients, 3 task
    types, 100 slots.  Capacity, accuracy and sensitivity ranges follow the
    standard heterogeneous edge-cloud setting; arrival and token-length
    parameters are sized so the system runs near (but below) saturation.
    """
    system = SystemConfig(
        num_edge=4,
        num_cloud=6,
        num_clients=5,
        num_task_types=3,
        horizon=100,
        tradeoff_v=10.0,
        accuracy_weight=20.0,
        min_rate=1.0,
        rng_seed=seed,
    )
    config = ExperimentConfig(system=system)
    if overrides:
        config = config.replace(**overrides)
    return config
