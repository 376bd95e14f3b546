"""Per-slot solver: iterative assignment with congestion pricing and damped
perceived-load updates.

The per-slot problem is nonseparable: a task's queueing delay depends on
which same-slot tasks landed on its server earlier.  The solver linearizes
it with a price loop.  Each round builds a cost matrix consisting of the
separable part of the objective (base cost) plus a congestion surcharge
derived from the damped placements of the previous rounds, solves the
decoupled assignment exactly (row-wise argmin), then folds the new
assignment into the perceived placements.

The congestion surcharge prices the queueing interaction both ways: a task
pays for the perceived workload of earlier-ranked tasks on the server (its
own extra delay) and for the delay its own workload inflicts on later-ranked
tasks perceived there.  At full price a unilateral move changes a task's row
cost by exactly the change of the slot objective, so converged assignments
are single-move local optima of the exact objective.  The price is ramped in
linearly over the first ramp_iters rounds, which anneals the assignment from
the myopic solution toward the congestion-aware one and avoids the herd
oscillations a fixed price produces.

The iteration stops when the assignment map repeats at full price, or after
max_iters rounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LinkState, Server, Task
from .delays import comm_delay
from .workload import WorkloadModel, workload_units

INFEASIBLE = np.inf


@dataclass(frozen=True)
class SolverParams:
    max_iters: int = 20
    damping: float = 0.5               # weight of the newest assignment in the perceived state
    congestion_weight: float = 1.0     # 1.0 = exact marginal-cost pricing of queueing
    ramp_iters: int = 10               # rounds to reach the full congestion price

    def __post_init__(self):
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.congestion_weight < 0:
            raise ValueError("congestion weight must be non-negative")
        if self.ramp_iters < 1:
            raise ValueError("ramp_iters must be >= 1")

    @staticmethod
    def from_dict(doc: dict) -> "SolverParams":
        return SolverParams(
            max_iters=int(doc.get("max_iters", 20)),
            damping=float(doc.get("damping", 0.5)),
            congestion_weight=float(doc.get("congestion_weight", 1.0)),
            ramp_iters=int(doc.get("ramp_iters", 10)),
        )


@dataclass
class SolveResult:
    choice: np.ndarray            # per task: 0-based server index, -1 = dropped
    iterations: int
    converged: bool
    loads: np.ndarray             # final perceived per-server load (workload-units)
    base_costs: np.ndarray        # (tasks x servers) separable costs, inf = infeasible


def base_cost(task: Task, server: Server, server_index: int, q_hat: float,
              queue: float, link: LinkState, min_rate: float,
              tradeoff_v: float, delta: float) -> float:
    """Separable cost of placing one task on one server: the V-weighted QoE
    terms (upload delay, backlog-plus-own compute delay, accuracy reward)
    plus the virtual-queue pressure on that server's compute budget.
    Infeasible links cost +inf.
    """
    if not link.feasible(task.client, server_index, min_rate):
        return INFEASIBLE
    kappa = comm_delay(task.data_size,
                       float(link.rate[task.client, server_index]),
                       float(link.eta[task.client, server_index]))
    accuracy = float(server.accuracy[task.type])
    delay = kappa + (server.backlog + q_hat) / server.capacity
    qoe = task.delay_sensitivity * delay - delta * task.accuracy_sensitivity * accuracy
    return tradeoff_v * qoe + queue * (q_hat / server.capacity)


def congestion_penalty(load: float, capacity: float, weight: float) -> float:
    """Capacity-normalized congestion surcharge for one server, strictly
    increasing in the perceived load when the weight is positive."""
    return weight * load / capacity


def base_cost_matrix(tasks: list[Task], q_hats: list[float], servers: list[Server],
                     queues: np.ndarray, link: LinkState, min_rate: float,
                     tradeoff_v: float, delta: float) -> np.ndarray:
    cost = np.empty((len(tasks), len(servers)))
    for i, task in enumerate(tasks):
        for j, server in enumerate(servers):
            cost[i, j] = base_cost(task, server, j, q_hats[i], float(queues[j]),
                                   link, min_rate, tradeoff_v, delta)
    return cost


def congestion_matrix(placements: np.ndarray, q_hats: np.ndarray, alphas: np.ndarray,
                      capacities: np.ndarray, weight: float) -> np.ndarray:
    """Per-cell congestion surcharge from perceived placements.

    placements[i, j] is how strongly task i is perceived on server j (damped
    history of past rounds).  Cell (i, j) charges, normalized by capacity:

    - the perceived workload of lower-ranked tasks on j, weighted by the
      task's own delay sensitivity (what the queue would cost this task);
    - the perceived delay-sensitivity mass of higher-ranked tasks on j,
      weighted by the task's own workload (what this task would cost them).

    Rows must be ordered by intra-slot rank.
    """
    weighted_loads = placements * q_hats[:, None]
    weighted_alphas = placements * alphas[:, None]
    preds = np.cumsum(weighted_loads, axis=0) - weighted_loads
    succs = np.sum(weighted_alphas, axis=0)[None, :] - np.cumsum(weighted_alphas, axis=0)
    return weight * (alphas[:, None] * preds + q_hats[:, None] * succs) / capacities[None, :]


def solve_assignment(cost: np.ndarray) -> np.ndarray:
    """Exact minimizer of the decoupled assignment: each row independently
    takes its cheapest server (ties break to the lowest index); a row with no
    finite cell is dropped (-1)."""
    n = cost.shape[0]
    choice = np.full(n, -1, dtype=int)
    for i in range(n):
        j = int(np.argmin(cost[i]))
        if np.isfinite(cost[i, j]):
            choice[i] = j
    return choice


def damped_load_update(prev: np.ndarray, choice: np.ndarray, q_hats: list[float],
                       damping: float) -> np.ndarray:
    """Convex combination of the previous perceived load and the load implied
    by the current assignment (sum of planned workloads per server)."""
    new = np.zeros_like(prev)
    for i, j in enumerate(choice):
        if j >= 0:
            new[j] += q_hats[i]
    return (1.0 - damping) * prev + damping * new


def solve(tasks: list[Task], servers: list[Server], queues: np.ndarray,
          link: LinkState, params: SolverParams, tradeoff_v: float, delta: float,
          model: WorkloadModel, min_rate: float) -> SolveResult:
    """Run the price loop on one slot's planning view (predicted workloads).

    Convergence means the assignment repeated between two consecutive rounds
    while the full congestion price was in effect (a repeat under a still
    rising price, or with a zero surcharge, is accepted immediately since the
    costs can no longer change the argmin).
    """
    num_servers = len(servers)
    order = sorted(range(len(tasks)), key=lambda i: tasks[i].intra_slot_rank)
    tasks = [tasks[i] for i in order]
    q_hats = np.array([workload_units(t, model, use_predicted=True) for t in tasks])
    alphas = np.array([t.delay_sensitivity for t in tasks])
    base = base_cost_matrix(tasks, list(q_hats), servers, queues, link, min_rate,
                            tradeoff_v, delta)
    if len(tasks) == 0:
        return SolveResult(choice=np.empty(0, dtype=int), iterations=1, converged=True,
                           loads=np.zeros(num_servers), base_costs=base)

    capacities = np.array([s.capacity for s in servers])
    full_weight = params.congestion_weight * tradeoff_v
    placements = np.zeros((len(tasks), num_servers))
    prev_choice = None
    converged = False
    iterations = 0
    choice = np.full(len(tasks), -1, dtype=int)
    for k in range(params.max_iters):
        iterations += 1
        weight = full_weight * min(1.0, (k + 1) / params.ramp_iters)
        penalty = congestion_matrix(placements, q_hats, alphas, capacities, weight)
        choice = solve_assignment(base + penalty)
        at_full_price = weight == full_weight or not penalty.any()
        if prev_choice is not None and at_full_price and np.array_equal(choice, prev_choice):
            converged = True
            break
        a = np.zeros_like(placements)
        for i, j in enumerate(choice):
            if j >= 0:
                a[i, j] = 1.0
        placements = (1.0 - params.damping) * placements + params.damping * a
        prev_choice = choice
    loads = placements.T @ q_hats     # equals the damped update of per-server loads
    unordered = np.full(len(order), -1, dtype=int)
    base_unordered = np.empty_like(base)
    for pos, i in enumerate(order):
        unordered[i] = choice[pos]
        base_unordered[i] = base[pos]
    return SolveResult(choice=unordered, iterations=iterations, converged=converged,
                       loads=loads, base_costs=base_unordered)
