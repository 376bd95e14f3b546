"""Offloading policies: the iterative drift-plus-penalty solver and the
greedy baselines.  Every policy maps one slot's state to an assignment that
places each task on a feasible server or drops it when none exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Assignment, ConfigError, LinkState, Server, Task
from .delays import comm_delay
from .solver import SolverParams, solve
from .workload import WorkloadModel, workload_units


@dataclass
class SlotState:
    """Everything a policy may look at when deciding one slot."""

    slot: int
    tasks: list[Task]                  # in intra-slot arrival order
    servers: list[Server]
    link: LinkState
    queues: np.ndarray                 # virtual queue values Q_j(t)
    tradeoff_v: float
    delta: float
    model: WorkloadModel
    min_rate: float

    def feasible_indices(self, task: Task) -> list[int]:
        return [j for j in range(len(self.servers))
                if self.link.feasible(task.client, j, self.min_rate)]


class Policy:
    name = "base"

    def __init__(self):
        # Telemetry from the most recent decide() call (solver rounds etc.).
        self.last_info: dict = {}

    def decide(self, state: SlotState) -> Assignment:
        raise NotImplementedError


def _place(assignment: Assignment, task: Task, server: Server | None) -> None:
    if server is None:
        assignment.dropped.add(task.id)
    else:
        assignment.server_of[task.id] = server.id


class IterativePolicy(Policy):
    """Minimizes the per-slot drift-plus-penalty objective with the iterative
    congestion-priced assignment solver."""

    name = "iterative"

    def __init__(self, params: SolverParams | None = None):
        super().__init__()
        self.params = params or SolverParams()

    def decide(self, state: SlotState) -> Assignment:
        result = solve(state.tasks, state.servers, state.queues, state.link,
                       self.params, state.tradeoff_v, state.delta,
                       state.model, state.min_rate)
        assignment = Assignment()
        for task, j in zip(state.tasks, result.choice):
            _place(assignment, task, state.servers[j] if j >= 0 else None)
        self.last_info = {
            "iterations": result.iterations,
            "converged": result.converged,
            "loads": result.loads.tolist(),
        }
        return assignment


class GreedyAccuracy(Policy):
    """Each task goes to the feasible server with the highest accuracy for
    its type; ties break to the lowest server index."""

    name = "greedy-accuracy"

    def decide(self, state: SlotState) -> Assignment:
        assignment = Assignment()
        for task in state.tasks:
            candidates = state.feasible_indices(task)
            if not candidates:
                _place(assignment, task, None)
                continue
            best = max(candidates, key=lambda j: (float(state.servers[j].accuracy[task.type]), -j))
            _place(assignment, task, state.servers[best])
        return assignment


class GreedyCompute(Policy):
    """Each task goes to the feasible server with the largest capacity."""

    name = "greedy-compute"

    def decide(self, state: SlotState) -> Assignment:
        assignment = Assignment()
        for task in state.tasks:
            candidates = state.feasible_indices(task)
            if not candidates:
                _place(assignment, task, None)
                continue
            best = max(candidates, key=lambda j: (state.servers[j].capacity, -j))
            _place(assignment, task, state.servers[best])
        return assignment


class GreedyDelay(Policy):
    """Each task picks the feasible server with the smallest immediate delay
    estimate (upload plus backlog-plus-own compute time).  Placements within
    the slot are accounted for sequentially: a chosen server's working
    backlog grows before the next task decides."""

    name = "greedy-delay"

    def decide(self, state: SlotState) -> Assignment:
        assignment = Assignment()
        working = [s.backlog for s in state.servers]
        for task in state.tasks:
            q_hat = workload_units(task, state.model, use_predicted=True)
            best_j, best_cost = None, None
            for j in state.feasible_indices(task):
                server = state.servers[j]
                kappa = comm_delay(task.data_size,
                                   float(state.link.rate[task.client, j]),
                                   float(state.link.eta[task.client, j]))
                cost = kappa + (working[j] + q_hat) / server.capacity
                if best_cost is None or cost < best_cost:
                    best_j, best_cost = j, cost
            if best_j is None:
                _place(assignment, task, None)
            else:
                working[best_j] += q_hat
                _place(assignment, task, state.servers[best_j])
        return assignment


class RandomPolicy(Policy):
    """Uniform choice over the feasible servers, with an owned seeded RNG."""

    name = "random"

    def __init__(self, seed: int = 0):
        super().__init__()
        self._rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(4,)))

    def decide(self, state: SlotState) -> Assignment:
        assignment = Assignment()
        for task in state.tasks:
            candidates = state.feasible_indices(task)
            if not candidates:
                _place(assignment, task, None)
                continue
            j = candidates[int(self._rng.integers(0, len(candidates)))]
            _place(assignment, task, state.servers[j])
        return assignment


POLICY_NAMES = ("iterative", "greedy-accuracy", "greedy-compute", "greedy-delay", "random")


def make_policy(name: str, params: dict | None = None, seed: int = 0) -> Policy:
    params = params or {}
    if name == "iterative":
        return IterativePolicy(SolverParams.from_dict(params))
    if name == "greedy-accuracy":
        return GreedyAccuracy()
    if name == "greedy-compute":
        return GreedyCompute()
    if name == "greedy-delay":
        return GreedyDelay()
    if name == "random":
        return RandomPolicy(seed=seed)
    raise ConfigError(f"unknown policy {name!r}; known: {', '.join(POLICY_NAMES)}")
