"""Time-slotted engine: arrivals, link realization, prediction, policy
decision, delay/accuracy realization, backlog and virtual-queue evolution,
and full per-slot telemetry.

Each slot record stores the realized inputs of every formula it reports
(link rate, workloads, sensitivities, backlogs), so recomputing the delays,
the QoE cost and the budget excesses from the record reproduces the stored
scalars bit-exactly.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (ExperimentConfig, LinkState, Server, Task, Tier, ConfigError)
from .delays import comm_delay, comp_delay
from .lyapunov import (VirtualQueueBank, drift_plus_penalty, excess,
                       slot_cost_zeta, update_queues)
from .policies import Policy, SlotState, make_policy
from .workload import (Predictor, Trace, WorkloadModel, generate_trace,
                       make_predictor, workload_units)

REPORT_SCHEMA_VERSION = 1


@dataclass
class Environment:
    """Static draw of the heterogeneous system: server parameters, per-type
    sensitivities, per-(client, server) propagation delays."""

    servers: list[Server]
    alpha: np.ndarray          # per-type delay sensitivity, shape (K,)
    beta: np.ndarray           # per-type accuracy sensitivity, shape (K,)
    eta: np.ndarray            # propagation delay, shape (M, J)

    def to_dict(self) -> dict:
        return {
            "servers": [{
                "id": s.id,
                "tier": s.tier.value,
                "capacity": s.capacity,
                "budget": s.budget,
                "accuracy": [float(a) for a in s.accuracy],
            } for s in self.servers],
            "alpha": [float(a) for a in self.alpha],
            "beta": [float(b) for b in self.beta],
            "eta": [[float(x) for x in row] for row in self.eta],
        }


def sample_environment(config: ExperimentConfig) -> Environment:
    """Draw the static system from the config's sampling ranges.  Server ids
    are 1-based with the edge tier first."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=config.system.rng_seed,
                                                       spawn_key=(0,)))
    sys = config.system
    s = config.sampling
    num_servers = sys.num_servers
    eta = np.empty((sys.num_clients, num_servers))
    servers = []
    for j in range(num_servers):
        is_edge = j < sys.num_edge
        cap_range = s.edge_capacity if is_edge else s.cloud_capacity
        budget_range = s.edge_budget if is_edge else s.cloud_budget
        acc_range = s.edge_accuracy if is_edge else s.cloud_accuracy
        delay_range = s.edge_base_delay if is_edge else s.cloud_base_delay
        capacity = float(rng.uniform(*cap_range))
        budget = float(rng.uniform(*budget_range))
        accuracy = rng.uniform(acc_range[0], acc_range[1], size=sys.num_task_types)
        eta[:, j] = rng.uniform(delay_range[0], delay_range[1], size=sys.num_clients)
        servers.append(Server(
            id=j + 1,
            tier=Tier.EDGE if is_edge else Tier.CLOUD,
            capacity=capacity,
            budget=budget,
            eta=eta[:, j].copy(),
            accuracy=accuracy,
        ))
    alpha = rng.uniform(s.alpha[0], s.alpha[1], size=sys.num_task_types)
    beta = rng.uniform(s.beta[0], s.beta[1], size=sys.num_task_types)
    return Environment(servers=servers, alpha=alpha, beta=beta, eta=eta)


class LinkRealizer:
    """Per-slot link rate draws; propagation delays stay fixed."""

    def __init__(self, config: ExperimentConfig, env: Environment):
        self._rng = np.random.default_rng(np.random.SeedSequence(entropy=config.system.rng_seed,
                                                                 spawn_key=(3,)))
        self._config = config
        self._env = env

    def realize(self) -> LinkState:
        sys = self._config.system
        s = self._config.sampling
        rate = np.empty((sys.num_clients, sys.num_servers))
        if sys.num_edge:
            rate[:, :sys.num_edge] = self._rng.uniform(
                s.edge_rate[0], s.edge_rate[1], size=(sys.num_clients, sys.num_edge))
        if sys.num_cloud:
            rate[:, sys.num_edge:] = self._rng.uniform(
                s.cloud_rate[0], s.cloud_rate[1], size=(sys.num_clients, sys.num_cloud))
        return LinkState(rate=rate, eta=self._env.eta)


@dataclass
class TaskRecord:
    task_id: int
    client: int
    type: int
    rank: int
    server: Optional[int]          # 1-based server id, None if dropped
    dropped: bool
    kappa: Optional[float]
    tau: Optional[float]
    accuracy: Optional[float]
    q_hat: float                   # planned workload (predicted tokens)
    q_real: float                  # realized workload (true tokens)
    alpha: float
    beta: float
    data_size: float
    rate: Optional[float]          # realized link rate to the chosen server
    eta: Optional[float]
    prompt_tokens: int
    true_output_tokens: int
    predicted_output_tokens: int


@dataclass
class ServerRecord:
    server_id: int
    assigned_workload: float       # realized workload placed this slot
    backlog_before: float
    backlog_after: float
    y: float                       # realized budget excess
    q_after: float                 # virtual queue after the update


@dataclass
class SlotRecord:
    slot: int
    tasks: list[TaskRecord]
    servers: list[ServerRecord]
    zeta: float
    dpp: float                     # V*zeta + sum_j Q_j(t)*y_j(t)
    solver_iterations: Optional[int]
    solver_converged: Optional[bool]
    workload_abs_error: float      # sum |q_hat - q_real| over placed tasks

    def to_dict(self) -> dict:
        return {
            "slot": self.slot,
            "zeta": self.zeta,
            "dpp": self.dpp,
            "solver_iterations": self.solver_iterations,
            "solver_converged": self.solver_converged,
            "workload_abs_error": self.workload_abs_error,
            "tasks": [vars(t).copy() for t in self.tasks],
            "servers": [vars(s).copy() for s in self.servers],
        }

    @staticmethod
    def from_dict(doc: dict) -> "SlotRecord":
        return SlotRecord(
            slot=doc["slot"],
            zeta=doc["zeta"],
            dpp=doc["dpp"],
            solver_iterations=doc["solver_iterations"],
            solver_converged=doc["solver_converged"],
            workload_abs_error=doc["workload_abs_error"],
            tasks=[TaskRecord(**t) for t in doc["tasks"]],
            servers=[ServerRecord(**s) for s in doc["servers"]],
        )


@dataclass
class RunState:
    config: ExperimentConfig
    env: Environment
    bank: VirtualQueueBank
    links: LinkRealizer
    policy: Policy
    predictor: Predictor
    model: WorkloadModel


def step(state: RunState, slot: int, tasks: list[Task]) -> SlotRecord:
    """Advance one slot: realize links, predict lengths, decide, realize
    delays and costs, evolve backlogs and virtual queues, emit the record."""
    config = state.config
    sys = config.system
    servers = state.env.servers
    link = state.links.realize()
    state.predictor.apply(tasks)
    queues_before = state.bank.snapshot()

    slot_state = SlotState(
        slot=slot, tasks=tasks, servers=servers, link=link,
        queues=queues_before, tradeoff_v=sys.tradeoff_v, delta=sys.accuracy_weight,
        model=state.model, min_rate=sys.min_rate,
    )
    assignment = state.policy.decide(slot_state)
    assignment.check([t.id for t in tasks])
    info = state.policy.last_info

    backlog_before = {s.id: s.backlog for s in servers}
    index_of = {s.id: j for j, s in enumerate(servers)}
    predecessors: dict[int, list[float]] = {s.id: [] for s in servers}
    workload_sums = np.zeros(len(servers))
    task_records = []
    zeta_terms = []
    abs_error = 0.0
    for task in tasks:                         # intra-slot arrival order
        q_hat = workload_units(task, state.model, use_predicted=True)
        q_real = workload_units(task, state.model, use_predicted=False)
        if assignment.is_dropped(task.id):
            task_records.append(TaskRecord(
                task_id=task.id, client=task.client, type=task.type,
                rank=task.intra_slot_rank, server=None, dropped=True,
                kappa=None, tau=None, accuracy=None,
                q_hat=q_hat, q_real=q_real,
                alpha=task.delay_sensitivity, beta=task.accuracy_sensitivity,
                data_size=task.data_size, rate=None, eta=None,
                prompt_tokens=task.prompt_tokens,
                true_output_tokens=task.true_output_tokens,
                predicted_output_tokens=task.predicted_output_tokens,
            ))
            zeta_terms.append((task.delay_sensitivity, task.accuracy_sensitivity,
                               0.0, 0.0, True))
            continue
        server_id = assignment.server_of[task.id]
        j = index_of[server_id]
        server = servers[j]
        rate = float(link.rate[task.client, j])
        eta = float(link.eta[task.client, j])
        kappa = comm_delay(task.data_size, rate, eta)
        tau = comp_delay(server.capacity, backlog_before[server_id],
                         predecessors[server_id], q_real)
        predecessors[server_id].append(q_real)
        workload_sums[j] += q_real
        accuracy = float(server.accuracy[task.type])
        abs_error += abs(q_hat - q_real)
        task_records.append(TaskRecord(
            task_id=task.id, client=task.client, type=task.type,
            rank=task.intra_slot_rank, server=server_id, dropped=False,
            kappa=kappa, tau=tau, accuracy=accuracy,
            q_hat=q_hat, q_real=q_real,
            alpha=task.delay_sensitivity, beta=task.accuracy_sensitivity,
            data_size=task.data_size, rate=rate, eta=eta,
            prompt_tokens=task.prompt_tokens,
            true_output_tokens=task.true_output_tokens,
            predicted_output_tokens=task.predicted_output_tokens,
        ))
        zeta_terms.append((task.delay_sensitivity, task.accuracy_sensitivity,
                           tau, accuracy, False))

    zeta = slot_cost_zeta(zeta_terms, sys.accuracy_weight, config.drop_penalty_delay)
    y = excess(workload_sums, servers)
    dpp = drift_plus_penalty(zeta, y, queues_before, sys.tradeoff_v)

    # Backlogs: gain this slot's workload, drain up to capacity * slot length.
    for j, server in enumerate(servers):
        server.backlog = max(server.backlog + float(workload_sums[j])
                             - server.capacity * sys.slot_duration, 0.0)
    q_after = update_queues(state.bank, y)

    server_records = [ServerRecord(
        server_id=server.id,
        assigned_workload=float(workload_sums[j]),
        backlog_before=backlog_before[server.id],
        backlog_after=server.backlog,
        y=float(y[j]),
        q_after=float(q_after[j]),
    ) for j, server in enumerate(servers)]

    return SlotRecord(
        slot=slot, tasks=task_records, servers=server_records,
        zeta=zeta, dpp=dpp,
        solver_iterations=info.get("iterations"),
        solver_converged=info.get("converged"),
        workload_abs_error=abs_error,
    )


@dataclass
class RunReport:
    config: ExperimentConfig
    env: Environment
    records: list[SlotRecord]
    policy_name: str
    predictor_name: str

    # -- aggregates -------------------------------------------------------
    @property
    def horizon(self) -> int:
        return len(self.records)

    @property
    def time_avg_zeta(self) -> float:
        return sum(r.zeta for r in self.records) / self.horizon

    @property
    def lyapunov_reward(self) -> float:
        """Negated accumulated drift-plus-penalty; higher is better."""
        return -sum(r.dpp for r in self.records)

    @property
    def final_queues(self) -> list[float]:
        return [s.q_after for s in self.records[-1].servers]

    @property
    def drop_count(self) -> int:
        return sum(1 for r in self.records for t in r.tasks if t.dropped)

    @property
    def time_avg_queue_sum(self) -> float:
        return sum(sum(s.q_after for s in r.servers) for r in self.records) / self.horizon

    def budget_usage(self) -> list[dict]:
        """Per-server time-averaged compute time per slot next to its budget."""
        usage = []
        for j, server in enumerate(self.env.servers):
            mean_time = sum(r.servers[j].assigned_workload for r in self.records) \
                / (self.horizon * server.capacity)
            usage.append({"server_id": server.id, "mean_compute_time": mean_time,
                          "budget": server.budget})
        return usage

    def summary_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "environment": self.env.to_dict(),
            "policy": self.policy_name,
            "predictor": self.predictor_name,
            "aggregates": {
                "horizon": self.horizon,
                "time_avg_zeta": self.time_avg_zeta,
                "time_avg_queue_sum": self.time_avg_queue_sum,
                "lyapunov_reward": self.lyapunov_reward,
                "final_queues": self.final_queues,
                "drop_count": self.drop_count,
                "budget_usage": self.budget_usage(),
                "total_tasks": sum(len(r.tasks) for r in self.records),
            },
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary_dict(), indent=2, sort_keys=True) + "\n"

    def slot_lines(self) -> str:
        """Per-slot records as line-delimited JSON."""
        return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in self.records)


def run(config: ExperimentConfig, trace: Trace | None = None,
        policy: Policy | None = None, predictor: Predictor | None = None) -> RunReport:
    """Execute one full horizon.  Deterministic: identical (config, trace)
    produce byte-identical reports."""
    errors = config.validate()
    if errors:
        raise ConfigError("; ".join(errors))
    env = sample_environment(config)
    if trace is None:
        trace = generate_trace(config)
    if trace.max_slot() >= config.system.horizon:
        warnings.warn(f"trace has slots beyond the horizon {config.system.horizon}; "
                      "they are ignored", stacklevel=2)
    if policy is None:
        policy = make_policy(config.policy, config.policy_params, seed=config.system.rng_seed)
    if predictor is None:
        predictor = make_predictor(config)
    model = WorkloadModel.from_config(config)
    state = RunState(config=config, env=env,
                     bank=VirtualQueueBank(config.system.num_servers),
                     links=LinkRealizer(config, env), policy=policy,
                     predictor=predictor, model=model)
    records = []
    for slot in range(config.system.horizon):
        tasks = trace.tasks_for_slot(slot, env.alpha, env.beta)
        records.append(step(state, slot, tasks))
    return RunReport(config=config, env=env, records=records,
                     policy_name=policy.name, predictor_name=predictor.name)
