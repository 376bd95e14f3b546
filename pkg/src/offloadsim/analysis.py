"""Experiment harnesses: the exhaustive per-slot oracle, tradeoff sweeps,
queue-stability checks and paired policy/predictor comparisons.

Everything here is a pure function of (config, seeds); rerunning reproduces
tables bit-exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import (ExperimentConfig, LinkState, Server, Task, Tier,
                   default_config as default_experiment_base)
from .lyapunov import drift_plus_penalty, slot_cost_zeta
from .policies import make_policy
from .simulator import RunReport, run
from .solver import SolverParams, solve
from .workload import (Predictor, Trace, WorkloadModel, generate_trace,
                       make_predictor, workload_units)


class OracleSizeError(ValueError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True)
class SweepSpec:
    """A parameter grid of independent simulation cells.  Every combination
    of the listed axes is run `repetitions` times with consecutive seeds."""

    v_values: tuple = (10.0,)
    num_edge_values: tuple = ()       # empty = keep the base config's value
    num_cloud_values: tuple = ()
    policies: tuple = ("iterative",)
    predictors: tuple = ("oracle",)
    seeds: tuple = (0,)
    repetitions: int = 1

    def __post_init__(self):
        for name in ("v_values", "policies", "predictors", "seeds"):
            if not getattr(self, name):
                raise ValueError(f"sweep axis {name} must be non-empty")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    def cells(self, base_config: ExperimentConfig):
        """Yield (label dict, config) per grid cell; every cell validates."""
        edges = self.num_edge_values or (base_config.system.num_edge,)
        clouds = self.num_cloud_values or (base_config.system.num_cloud,)
        for v in self.v_values:
            for n in edges:
                for u in clouds:
                    for policy in self.policies:
                        for predictor in self.predictors:
                            for seed in self.seeds:
                                for rep in range(self.repetitions):
                                    config = base_config.replace(
                                        tradeoff_v=float(v), num_edge=int(n),
                                        num_cloud=int(u), policy=policy,
                                        predictor=predictor,
                                        rng_seed=int(seed) + rep)
                                    label = {"tradeoff_v": float(v),
                                             "num_edge": int(n),
                                             "num_cloud": int(u),
                                             "policy": policy,
                                             "predictor": predictor,
                                             "seed": int(seed) + rep}
                                    yield label, config


def run_grid(base_config: ExperimentConfig, spec: SweepSpec) -> list[dict]:
    """Run every cell of the grid; one long-form row per run."""
    rows = []
    for label, config in spec.cells(base_config):
        report = run(config)
        row = dict(label)
        row.update({
            "lyapunov_reward": report.lyapunov_reward,
            "time_avg_zeta": report.time_avg_zeta,
            "time_avg_queue_sum": report.time_avg_queue_sum,
            "drop_count": report.drop_count,
        })
        rows.append(row)
    return rows


def evaluate_slot_objective(choice: np.ndarray, tasks: list[Task], q_hats: list[float],
                            servers: list[Server], queues: np.ndarray,
                            tradeoff_v: float, delta: float,
                            drop_penalty_delay: float) -> float:
    """Exact per-slot drift-plus-penalty value of one assignment (planning
    view): V * zeta + sum_j Q_j * y_j, where each task's delay includes the
    server backlog and every same-slot task placed earlier on that server.
    """
    predecessors = {j: 0.0 for j in range(len(servers))}
    workload_sums = np.zeros(len(servers))
    terms = []
    for i, task in enumerate(tasks):
        j = int(choice[i])
        if j < 0:
            terms.append((task.delay_sensitivity, task.accuracy_sensitivity, 0.0, 0.0, True))
            continue
        server = servers[j]
        tau = (server.backlog + predecessors[j] + q_hats[i]) / server.capacity
        predecessors[j] += q_hats[i]
        workload_sums[j] += q_hats[i]
        accuracy = float(server.accuracy[task.type])
        terms.append((task.delay_sensitivity, task.accuracy_sensitivity, tau, accuracy, False))
    zeta = slot_cost_zeta(terms, delta, drop_penalty_delay)
    y = np.array([workload_sums[j] / servers[j].capacity - servers[j].budget
                  for j in range(len(servers))])
    return drift_plus_penalty(zeta, y, queues, tradeoff_v)


def brute_force_slot(tasks: list[Task], servers: list[Server], queues: np.ndarray,
                     link: LinkState, tradeoff_v: float, delta: float,
                     model: WorkloadModel, min_rate: float,
                     drop_penalty_delay: float = 0.0,
                     max_tasks: int = 8, max_servers: int = 4) -> tuple[np.ndarray, float]:
    """Exhaustively enumerate every feasible assignment of one slot and
    return the exact minimizer of the per-slot objective (lexicographically
    first among ties).  Refuses instances beyond (max_tasks, max_servers).
    """
    if len(tasks) > max_tasks or len(servers) > max_servers:
        raise OracleSizeError(
            f"instance has {len(tasks)} tasks x {len(servers)} servers; the oracle "
            f"enumerates at most {max_servers}^{max_tasks} assignments "
            f"(limits: tasks <= {max_tasks}, servers <= {max_servers})")
    q_hats = [workload_units(t, model, use_predicted=True) for t in tasks]
    options = []
    for task in tasks:
        feasible = [j for j in range(len(servers))
                    if link.feasible(task.client, j, min_rate)]
        options.append(feasible if feasible else [-1])   # forced drop
    best_choice, best_value = None, None
    for combo in itertools.product(*options):
        choice = np.array(combo, dtype=int)
        value = evaluate_slot_objective(choice, tasks, q_hats, servers, queues,
                                        tradeoff_v, delta, drop_penalty_delay)
        if best_value is None or value < best_value:
            best_choice, best_value = choice, value
    return best_choice, float(best_value)


# ---------------------------------------------------------------------------
# Randomized small instances for the oracle-gap check


@dataclass
class SlotInstance:
    tasks: list[Task]
    servers: list[Server]
    queues: np.ndarray
    link: LinkState
    tradeoff_v: float
    delta: float
    model: WorkloadModel
    min_rate: float


def random_slot_instance(seed: int, num_tasks: int = 6, num_servers: int = 3,
                         tradeoff_v: float = 10.0, delta: float = 2.0) -> SlotInstance:
    """One random planning instance with heavy contention: several tasks on
    few servers, nonzero queues and backlogs, occasional infeasible links.
    Transfers are small relative to compute so the objective is dominated by
    the queueing interactions the solver has to untangle."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(7,)))
    num_types = 3
    num_clients = 3
    servers = []
    for j in range(num_servers):
        servers.append(Server(
            id=j + 1,
            tier=Tier.EDGE if j < num_servers // 2 else Tier.CLOUD,
            capacity=float(rng.uniform(2.5, 7.5)),
            budget=float(rng.uniform(1.0, 3.0)),
            eta=rng.uniform(0.01, 0.1, size=num_clients),
            accuracy=rng.uniform(0.1, 1.0, size=num_types),
            backlog=float(rng.uniform(0.0, 10.0)),
        ))
    eta = np.stack([s.eta for s in servers], axis=1)
    rate = rng.uniform(0.8, 10.0, size=(num_clients, num_servers))
    link = LinkState(rate=rate, eta=eta)
    tasks = []
    for i in range(num_tasks):
        prompt = int(rng.integers(1, 12))
        output = int(rng.integers(1, 12))
        tasks.append(Task(
            id=i,
            client=int(rng.integers(0, num_clients)),
            type=int(rng.integers(0, num_types)),
            arrival_slot=0,
            intra_slot_rank=i,
            data_size=float(rng.uniform(0.1, 1.0)),
            prompt_tokens=prompt,
            true_output_tokens=output,
            predicted_output_tokens=output,
            delay_sensitivity=float(rng.uniform(0.5, 1.0)),
            accuracy_sensitivity=float(rng.uniform(0.5, 1.0)),
        ))
    queues = rng.uniform(0.0, 8.0, size=num_servers)
    return SlotInstance(tasks=tasks, servers=servers, queues=queues, link=link,
                        tradeoff_v=tradeoff_v, delta=delta,
                        model=WorkloadModel.small(), min_rate=1.0)


ORACLE_CHECK_PARAMS = SolverParams(max_iters=80, damping=0.1, ramp_iters=20)


def oracle_gap_check(num_instances: int = 100, seed: int = 42,
                     num_tasks: int = 6, num_servers: int = 3,
                     params: SolverParams | None = None) -> dict:
    """Compare the iterative solver against the exhaustive oracle on seeded
    random instances.  Reports per-instance objective values and the relative
    gap (solver minus optimum, normalized by |optimum|).  The default solver
    parameters use a longer, more damped price schedule than the per-slot
    defaults: these instances are far more contested than a typical slot."""
    params = params or ORACLE_CHECK_PARAMS
    instances = []
    for k in range(num_instances):
        inst = random_slot_instance(seed + k, num_tasks=num_tasks, num_servers=num_servers)
        q_hats = [workload_units(t, inst.model, use_predicted=True) for t in inst.tasks]
        _, opt_value = brute_force_slot(inst.tasks, inst.servers, inst.queues, inst.link,
                                        inst.tradeoff_v, inst.delta, inst.model,
                                        inst.min_rate)
        result = solve(inst.tasks, inst.servers, inst.queues, inst.link, params,
                       inst.tradeoff_v, inst.delta, inst.model, inst.min_rate)
        solver_value = evaluate_slot_objective(result.choice, inst.tasks, q_hats,
                                               inst.servers, inst.queues,
                                               inst.tradeoff_v, inst.delta, 0.0)
        gap = (solver_value - opt_value) / max(abs(opt_value), 1e-9)
        instances.append({"seed": seed + k, "optimum": opt_value,
                          "solver": solver_value, "relative_gap": gap,
                          "iterations": result.iterations,
                          "converged": result.converged})
    gaps = [r["relative_gap"] for r in instances]
    return {
        "num_instances": num_instances,
        "within_10pct": sum(1 for g in gaps if g <= 0.10) / num_instances,
        "max_gap": max(gaps),
        "min_margin": min(r["solver"] - r["optimum"] for r in instances),
        "instances": instances,
    }


# ---------------------------------------------------------------------------
# Sweeps and stability


def v_sweep(base_config: ExperimentConfig, v_list: list[float],
            seeds: list[int] | None = None) -> list[dict]:
    """Sweep the tradeoff weight V with everything else (trace, environment,
    links) held fixed per seed.  Returns one row per V, averaged over seeds,
    sorted by V."""
    seeds = seeds or [base_config.system.rng_seed]
    rows = []
    for v in sorted(v_list):
        zetas, queue_sums, final_rates = [], [], []
        for seed in seeds:
            config = base_config.replace(rng_seed=seed, tradeoff_v=float(v))
            report = run(config)
            zetas.append(report.time_avg_zeta)
            queue_sums.append(report.time_avg_queue_sum)
            horizon = report.horizon
            final_rates.append(max(report.final_queues) / horizon)
        rows.append({
            "tradeoff_v": float(v),
            "time_avg_zeta": float(np.mean(zetas)),
            "time_avg_queue_sum": float(np.mean(queue_sums)),
            "max_final_queue_rate": float(np.mean(final_rates)),
        })
    return rows


def mean_slot_workload(config: ExperimentConfig, trace: Trace | None = None) -> float:
    """Mean realized workload arriving per slot under the config's trace."""
    if trace is None:
        trace = generate_trace(config)
    model = WorkloadModel.from_config(config)
    total = 0.0
    for row in trace.rows:
        total += (model.prefill_unit + model.decode_unit if model.mode == "flat_stage"
                  else model.prefill_unit * row.prompt_tokens + model.decode_unit * row.output_tokens)
    return total / config.system.horizon


def make_slack_config(base_config: ExperimentConfig, slack: float = 1.5) -> ExperimentConfig:
    """Pin every server's compute-time budget to ``slack`` times the mean
    per-server load (computed against the slowest capacity of its tier), so a
    uniform spread keeps every budget strictly slack."""
    load = mean_slot_workload(base_config)
    per_server = load / base_config.system.num_servers
    sampling = base_config.sampling
    edge_budget = slack * per_server / sampling.edge_capacity[0]
    cloud_budget = slack * per_server / sampling.cloud_capacity[0]
    doc = base_config.to_dict()
    doc["sampling"]["edge_budget"] = [edge_budget, edge_budget]
    doc["sampling"]["cloud_budget"] = [cloud_budget, cloud_budget]
    return ExperimentConfig.from_dict(doc)


def stability_check(config: ExperimentConfig, t_list: list[int]) -> list[dict]:
    """Track max_j Q_j(T) / T at several horizons from a single run at the
    largest horizon (prefixes of a run are identical by determinism)."""
    t_list = sorted(t_list)
    horizon = t_list[-1]
    report = run(config.replace(horizon=horizon))
    rows = []
    for t in t_list:
        max_q = max(s.q_after for s in report.records[t - 1].servers)
        rows.append({"horizon": t, "max_queue_rate": max_q / t, "max_queue": max_q})
    return rows


# ---------------------------------------------------------------------------
# Paired comparisons


def _paired_run(config: ExperimentConfig, seed: int, policy_name: str,
                predictor: Predictor | None = None) -> RunReport:
    cfg = config.replace(rng_seed=seed, policy=policy_name)
    policy = make_policy(policy_name, cfg.policy_params, seed=seed)
    return run(cfg, policy=policy, predictor=predictor)


def compare_policies(config: ExperimentConfig, policy_names: list[str],
                     seeds: list[int]) -> list[dict]:
    """Run each policy on identical traces per seed; rank by mean reward."""
    rows = []
    for name in policy_names:
        rewards, zetas, drops, usage_ratios = [], [], [], []
        for seed in seeds:
            report = _paired_run(config, seed, name)
            rewards.append(report.lyapunov_reward)
            zetas.append(report.time_avg_zeta)
            drops.append(report.drop_count)
            usage_ratios.append(max(
                (u["mean_compute_time"] / u["budget"]) if u["budget"] > 0 else np.inf
                for u in report.budget_usage()))
        rows.append({
            "policy": name,
            "mean_reward": float(np.mean(rewards)),
            "std_reward": float(np.std(rewards)),
            "rewards": [float(r) for r in rewards],
            "mean_time_avg_zeta": float(np.mean(zetas)),
            "total_drops": int(np.sum(drops)),
            "max_budget_usage": float(np.max(usage_ratios)),
        })
    rows.sort(key=lambda r: -r["mean_reward"])
    return rows


def predictor_ablation_config(num_cloud: int = 6, seed: int = 0,
                              horizon: int = 300) -> ExperimentConfig:
    """Config for the length-predictor ablation: workloads are almost pure
    decode (one-token prompts), so the planned workload is exactly what the
    predictor estimates; the accuracy weight is kept small so placement is
    delay-driven; compute budgets are loose so the reward reduces to its QoE
    component.  (With active virtual queues the queue term of the reward
    mechanically credits excess variance, which drowns the prediction
    signal.)"""
    config = default_experiment_base(seed).replace(
        num_cloud=num_cloud,
        horizon=horizon,
        arrival_rate=0.3,
        accuracy_weight=5.0,
        prompt_lognorm=(0.0, 0.3),
        output_lognorm=(2.5, 1.1),
        token_clip=(1, 256),
    )
    doc = config.to_dict()
    doc["sampling"]["edge_budget"] = [50.0, 60.0]
    doc["sampling"]["cloud_budget"] = [50.0, 60.0]
    return ExperimentConfig.from_dict(doc)


def compare_predictors(config: ExperimentConfig, predictor_names: list[str],
                       seeds: list[int]) -> list[dict]:
    """Same paired design, ablating the length predictor under one policy."""
    rows = []
    for name in predictor_names:
        rewards, errors = [], []
        for seed in seeds:
            cfg = config.replace(rng_seed=seed, predictor=name)
            report = run(cfg)
            rewards.append(report.lyapunov_reward)
            errors.append(float(np.mean([r.workload_abs_error for r in report.records])))
        rows.append({
            "predictor": name,
            "mean_reward": float(np.mean(rewards)),
            "std_reward": float(np.std(rewards)),
            "rewards": [float(r) for r in rewards],
            "mean_workload_abs_error": float(np.mean(errors)),
        })
    rows.sort(key=lambda r: -r["mean_reward"])
    return rows
