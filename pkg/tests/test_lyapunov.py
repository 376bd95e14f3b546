"""Virtual queue dynamics and the drift-plus-penalty objective."""

import numpy as np
import pytest

from offloadsim.core import Server, Tier
from offloadsim.lyapunov import (SlotObjective, VirtualQueueBank, diagnostics,
                                 drift_plus_penalty, excess, lyapunov_function,
                                 slot_cost_zeta, update_queues)


def make_server(capacity=5.0, budget=2.0, sid=1):
    return Server(id=sid, tier=Tier.EDGE, capacity=capacity, budget=budget,
                  eta=np.zeros(1), accuracy=np.ones(1))


class TestExcess:
    def test_direct_formula(self):
        # workloads {10, 5} on f=5 with budget 2: 15/5 - 2 = 1
        y = excess(np.array([15.0]), [make_server()])
        assert y[0] == pytest.approx(1.0)

    def test_empty_sum(self):
        y = excess(np.array([0.0]), [make_server()])
        assert y[0] == pytest.approx(-2.0)

    def test_boundary_zero(self):
        y = excess(np.array([10.0]), [make_server()])
        assert y[0] == pytest.approx(0.0)


class TestUpdateQueues:
    def test_clamps_at_zero(self):
        bank = VirtualQueueBank(1)
        update_queues(bank, np.array([-5.0]))
        assert bank.q[0] == 0.0

    def test_direct(self):
        bank = VirtualQueueBank(1)
        update_queues(bank, np.array([3.0]))
        update_queues(bank, np.array([2.0]))
        assert bank.q[0] == 5.0

    def test_boundary(self):
        bank = VirtualQueueBank(1)
        update_queues(bank, np.array([3.0]))
        update_queues(bank, np.array([-3.0]))
        assert bank.q[0] == 0.0

    def test_never_negative_under_random_updates(self):
        rng = np.random.default_rng(5)
        bank = VirtualQueueBank(4)
        for _ in range(500):
            update_queues(bank, rng.normal(0, 3, size=4))
            assert (bank.q >= 0).all()

    def test_starts_at_zero(self):
        assert (VirtualQueueBank(3).q == 0).all()

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            update_queues(VirtualQueueBank(2), np.array([1.0]))


class TestSlotCostZeta:
    def test_single_task(self):
        # alpha=1, tau=2, beta=1, phi=0.8, delta=0.5: 2 - 0.4
        value = slot_cost_zeta([(1.0, 1.0, 2.0, 0.8, False)], delta=0.5)
        assert value == pytest.approx(1.6)

    def test_empty(self):
        assert slot_cost_zeta([], delta=0.5) == 0.0

    def test_additive(self):
        a = (1.0, 1.0, 2.0, 0.8, False)
        b = (0.5, 0.7, 3.0, 0.4, False)
        total = slot_cost_zeta([a, b], delta=0.5)
        assert total == pytest.approx(slot_cost_zeta([a], 0.5) + slot_cost_zeta([b], 0.5))

    def test_drop_penalty(self):
        value = slot_cost_zeta([(0.8, 1.0, 0.0, 0.0, True)], delta=0.5,
                               drop_penalty_delay=100.0)
        assert value == pytest.approx(80.0)


class TestDriftPlusPenalty:
    def test_degenerate(self):
        assert drift_plus_penalty(3.7, np.array([1.0]), np.array([0.0]), 0.0) == 0.0

    def test_direct(self):
        value = drift_plus_penalty(1.6, np.array([1.0]), np.array([5.0]), 10.0)
        assert value == pytest.approx(21.0)

    def test_queue_free(self):
        value = drift_plus_penalty(1.6, np.array([4.0, -2.0]), np.zeros(2), 10.0)
        assert value == pytest.approx(16.0)


class TestSlotObjective:
    def test_penalty_equals_definition(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            obj = SlotObjective(zeta=float(rng.normal()),
                                y=rng.normal(size=4),
                                q=rng.uniform(0, 5, size=4),
                                tradeoff_v=float(rng.uniform(0, 100)))
            assert obj.penalty == drift_plus_penalty(obj.zeta, obj.y, obj.q,
                                                     obj.tradeoff_v)


class TestDiagnostics:
    def test_energy_example(self):
        assert lyapunov_function(np.array([3.0, 4.0])) == pytest.approx(12.5)

    def test_telescoping_exact(self):
        rng = np.random.default_rng(3)
        bank = VirtualQueueBank(3)
        for _ in range(300):
            update_queues(bank, rng.normal(0, 2, size=3))
        diag = diagnostics(bank)
        total_drift = sum(diag["drift"])
        assert total_drift == diag["energy"][-1] - diag["energy"][0]

    def test_queue_bound(self):
        # sum_t y_j(t) <= Q_j(T) for every prefix (queue update clamps at 0)
        rng = np.random.default_rng(7)
        bank = VirtualQueueBank(2)
        partial = np.zeros(2)
        for _ in range(200):
            y = rng.normal(0, 2, size=2)
            update_queues(bank, y)
            partial += y
            assert (partial <= bank.q + 1e-12).all()

    def test_constant_queue_zero_drift(self):
        bank = VirtualQueueBank(2)
        update_queues(bank, np.array([2.0, 1.0]))
        for _ in range(5):
            update_queues(bank, np.array([0.0, 0.0]))
        diag = diagnostics(bank)
        assert diag["drift"][1:] == pytest.approx([0.0] * 5)

    def test_mean_rate_decreases_for_fixed_queue(self):
        bank = VirtualQueueBank(1)
        update_queues(bank, np.array([4.0]))
        for _ in range(20):
            update_queues(bank, np.array([0.0]))
        rates = [float(r[0]) for r in diagnostics(bank)["mean_rate"]]
        assert rates == sorted(rates, reverse=True)
        assert rates[-1] == pytest.approx(4.0 / 21)

    def test_mean_rate_is_per_server(self):
        bank = VirtualQueueBank(2)
        update_queues(bank, np.array([4.0, 1.0]))
        diag = diagnostics(bank)
        assert diag["mean_rate"][0] == pytest.approx([4.0, 1.0])
        assert diag["max_mean_rate"][0] == pytest.approx(4.0)

    def test_bound_estimate_is_running_max(self):
        bank = VirtualQueueBank(1)
        for y in [1.0, -3.0, 2.0]:
            update_queues(bank, np.array([y]))
        # 0.5 * y^2 per slot: 0.5, 4.5, 2.0 -> running max 0.5, 4.5, 4.5
        assert diagnostics(bank)["bound_estimate"] == pytest.approx([0.5, 4.5, 4.5])

    def test_requires_history(self):
        with pytest.raises(ValueError):
            diagnostics(VirtualQueueBank(1))
