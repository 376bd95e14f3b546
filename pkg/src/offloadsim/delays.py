"""Closed-form delay formulas shared by the simulator and the solvers."""

from __future__ import annotations

from typing import Iterable


def comm_delay(data_size: float, rate: float, eta: float) -> float:
    """Upload delay: data size over link rate plus propagation delay."""
    if rate <= 0:
        raise ValueError("link rate must be positive for a placed task")
    return data_size / rate + eta


def comp_delay(capacity: float, backlog: float,
               predecessor_workloads: Iterable[float], workload: float) -> float:
    """Queueing-plus-service delay at a server: the pre-existing backlog, the
    same-slot tasks that arrived earlier on this server, and the task itself,
    all divided by the server's capacity.  Terms are accumulated in arrival
    order so a replay reproduces the value bit-exactly.
    """
    total = backlog
    for q in predecessor_workloads:
        total += q
    total += workload
    return total / capacity
