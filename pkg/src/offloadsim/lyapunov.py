"""Virtual-queue machinery and the per-slot drift-plus-penalty objective.

Each server carries one virtual queue that accumulates how far the slot's
compute-time usage exceeded its long-term budget.  The controller minimizes
``V * zeta(t) + sum_j Q_j(t) * y_j(t)`` every slot, which trades the
immediate QoE cost against queue growth; bounded queues certify that the
long-term budgets are met on time average.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Server


@dataclass
class VirtualQueueBank:
    """Per-server virtual queues plus the history needed for diagnostics.

    q[j] is the accumulated budget violation of server j (compute-time
    units); it starts at zero and can never go negative.
    """

    num_servers: int
    q: np.ndarray = field(init=False)
    q_history: list[np.ndarray] = field(init=False)     # Q(0), Q(1), ... snapshots
    y_history: list[np.ndarray] = field(init=False)     # excess recorded per slot

    def __post_init__(self):
        self.q = np.zeros(self.num_servers)
        self.q_history = [self.q.copy()]
        self.y_history = []

    def snapshot(self) -> np.ndarray:
        return self.q.copy()


def excess(per_server_workload: np.ndarray, servers: list[Server]) -> np.ndarray:
    """Per-server budget excess for one slot:
    y_j = (total workload assigned to j) / f_j - budget_j.
    May be negative; the sum over assigned tasks is taken before dividing.
    """
    y = np.empty(len(servers))
    for i, server in enumerate(servers):
        y[i] = per_server_workload[i] / server.capacity - server.budget
    return y


def update_queues(bank: VirtualQueueBank, y: np.ndarray) -> np.ndarray:
    """Q_j <- max(Q_j + y_j, 0); appends to history and returns the new vector."""
    if len(y) != bank.num_servers:
        raise ValueError("excess vector length does not match the queue bank")
    bank.q = np.maximum(bank.q + y, 0.0)
    bank.y_history.append(np.asarray(y, dtype=float).copy())
    bank.q_history.append(bank.q.copy())
    return bank.q


def slot_cost_zeta(task_terms: list[tuple[float, float, float, float, bool]],
                   delta: float, drop_penalty_delay: float = 0.0) -> float:
    """QoE cost of one slot: sum over tasks of
    alpha * tau - delta * beta * accuracy,
    with a dropped task charged alpha * drop_penalty_delay and no accuracy
    reward.  ``task_terms`` rows are (alpha, beta, tau, accuracy, dropped),
    summed in task order so replays reproduce the value exactly.
    """
    total = 0.0
    for alpha, beta, tau, accuracy, dropped in task_terms:
        if dropped:
            total += alpha * drop_penalty_delay
        else:
            total += alpha * tau - delta * beta * accuracy
    return total


def drift_plus_penalty(zeta: float, y: np.ndarray, q: np.ndarray, tradeoff_v: float) -> float:
    """Per-slot surrogate objective V * zeta + sum_j Q_j * y_j (the constant
    drift bound is omitted: it does not depend on the decision)."""
    return tradeoff_v * zeta + float(np.dot(q, y))


@dataclass(frozen=True)
class SlotObjective:
    """Objective components of one slot, kept together so the recorded
    penalty always equals its definition."""

    zeta: float
    y: np.ndarray
    q: np.ndarray              # queue values the decision saw (before update)
    tradeoff_v: float

    @property
    def penalty(self) -> float:
        return drift_plus_penalty(self.zeta, self.y, self.q, self.tradeoff_v)


def lyapunov_function(q: np.ndarray) -> float:
    """Quadratic queue energy 0.5 * sum_j Q_j^2."""
    return 0.5 * float(np.dot(q, q))


def diagnostics(bank: VirtualQueueBank) -> dict:
    """Stability diagnostics computed from stored history:

    - energy series L(t) = 0.5 * sum Q_j(t)^2
    - drift series L(t+1) - L(t)
    - empirical bound estimate: running max of 0.5 * sum_j y_j(t)^2
    - per-server mean-rate series Q_j(t) / t, plus its max over servers
    """
    if not bank.y_history:
        raise ValueError("no slots recorded yet")
    energy = [lyapunov_function(q) for q in bank.q_history]
    drift = [energy[t + 1] - energy[t] for t in range(len(energy) - 1)]
    running_max = []
    best = 0.0
    for y in bank.y_history:
        best = max(best, 0.5 * float(np.dot(y, y)))
        running_max.append(best)
    mean_rate = [bank.q_history[t] / t for t in range(1, len(bank.q_history))]
    return {
        "energy": energy,
        "drift": drift,
        "bound_estimate": running_max,
        "mean_rate": mean_rate,
        "max_mean_rate": [float(np.max(r)) for r in mean_rate],
    }
