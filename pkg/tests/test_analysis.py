"""Brute-force oracle, sweeps, stability and paired comparisons."""

import itertools

import numpy as np
import pytest

from offloadsim.analysis import (OracleSizeError, SweepSpec, brute_force_slot,
                                 compare_policies, compare_predictors,
                                 evaluate_slot_objective, make_slack_config,
                                 mean_slot_workload, oracle_gap_check,
                                 predictor_ablation_config, random_slot_instance,
                                 run_grid, stability_check, v_sweep)
from offloadsim.core import ExperimentConfig, LinkState, Server, Task, Tier, default_config
from offloadsim.solver import SolverParams, solve_assignment, base_cost_matrix
from offloadsim.workload import WorkloadModel, workload_units


def make_server(sid, capacity=5.0, budget=2.0, backlog=0.0, accuracy=0.5, clients=1):
    return Server(id=sid, tier=Tier.EDGE, capacity=capacity, budget=budget,
                  eta=np.zeros(clients), accuracy=np.full(3, accuracy),
                  backlog=backlog)


def make_task(i, output=3, alpha=1.0):
    return Task(id=i, client=0, type=0, arrival_slot=0, intra_slot_rank=i,
                data_size=1.0, prompt_tokens=1, true_output_tokens=output,
                predicted_output_tokens=output, delay_sensitivity=alpha,
                accuracy_sensitivity=1.0)


def make_link(num_servers, rate=6.0):
    return LinkState(rate=np.full((1, num_servers), rate),
                     eta=np.zeros((1, num_servers)))


class TestBruteForce:
    def test_single_task_matches_exact_argmin(self):
        tasks = [make_task(0)]
        servers = [make_server(1, capacity=3.0, backlog=4.0),
                   make_server(2, capacity=7.0)]
        link = make_link(2)
        queues = np.array([1.0, 2.0])
        q_hats = [workload_units(tasks[0], WorkloadModel.small(), True)]
        choice, value = brute_force_slot(tasks, servers, queues, link, 10.0, 1.0,
                                         WorkloadModel.small(), 1.0)
        best = min(range(2), key=lambda j: evaluate_slot_objective(
            np.array([j]), tasks, q_hats, servers, queues, 10.0, 1.0, 0.0))
        assert choice.tolist() == [best]

    def test_coupling_splits_identical_tasks(self):
        # Hand enumeration with q=5, f=5, alpha=1, one idle twin pair and
        # zero queues: co-located costs tau1+tau2 = 1+2 = 3; split costs
        # 1+1 = 2.  The optimum must use both servers.
        tasks = [make_task(0), make_task(1)]
        servers = [make_server(1), make_server(2)]
        link = make_link(2)
        choice, value = brute_force_slot(tasks, servers, np.zeros(2), link,
                                         1.0, 0.0, WorkloadModel.small(), 1.0)
        assert sorted(choice.tolist()) == [0, 1]
        assert value == pytest.approx(2.0)

    def test_lexicographic_tie_break(self):
        # Both splits cost the same; enumeration order must pick (0, 1).
        tasks = [make_task(0), make_task(1)]
        servers = [make_server(1), make_server(2)]
        choice, _ = brute_force_slot(tasks, servers, np.zeros(2), make_link(2),
                                     1.0, 0.0, WorkloadModel.small(), 1.0)
        assert choice.tolist() == [0, 1]

    def test_refuses_oversized_instance(self):
        tasks = [make_task(i) for i in range(9)]
        servers = [make_server(1)]
        with pytest.raises(OracleSizeError, match="tasks <= 8"):
            brute_force_slot(tasks, servers, np.zeros(1), make_link(1),
                             1.0, 0.0, WorkloadModel.small(), 1.0)

    def test_infeasible_task_forced_drop(self):
        tasks = [make_task(0)]
        servers = [make_server(1)]
        link = make_link(1, rate=0.5)
        choice, value = brute_force_slot(tasks, servers, np.zeros(1), link,
                                         1.0, 0.0, WorkloadModel.small(), 1.0,
                                         drop_penalty_delay=50.0)
        assert choice.tolist() == [-1]
        assert value == pytest.approx(50.0)

    def test_value_matches_full_enumeration(self):
        inst = random_slot_instance(3, num_tasks=4, num_servers=3)
        q_hats = [workload_units(t, inst.model, True) for t in inst.tasks]
        _, value = brute_force_slot(inst.tasks, inst.servers, inst.queues,
                                    inst.link, inst.tradeoff_v, inst.delta,
                                    inst.model, inst.min_rate)
        options = []
        for t in inst.tasks:
            feas = [j for j in range(3) if inst.link.feasible(t.client, j, 1.0)]
            options.append(feas or [-1])
        values = [evaluate_slot_objective(np.array(c), inst.tasks, q_hats,
                                          inst.servers, inst.queues,
                                          inst.tradeoff_v, inst.delta, 0.0)
                  for c in itertools.product(*options)]
        assert value == pytest.approx(min(values))


class TestOracleGap:
    def test_solver_never_beats_oracle(self):
        result = oracle_gap_check(num_instances=25, seed=7)
        assert result["min_margin"] >= -1e-9

    def test_deterministic(self):
        a = oracle_gap_check(num_instances=10, seed=3)
        b = oracle_gap_check(num_instances=10, seed=3)
        assert a == b


class TestVSweep:
    def test_single_v_single_row(self):
        rows = v_sweep(default_config(seed=0, horizon=10), [25.0])
        assert len(rows) == 1 and rows[0]["tradeoff_v"] == 25.0

    def test_sorted_by_v(self):
        rows = v_sweep(default_config(seed=0, horizon=10), [100.0, 1.0])
        assert [r["tradeoff_v"] for r in rows] == [1.0, 100.0]

    def test_rerun_reproduces_rows(self):
        config = default_config(seed=1, horizon=15)
        assert v_sweep(config, [1.0, 10.0]) == v_sweep(config, [1.0, 10.0])


class TestStability:
    def test_huge_budgets_zero_series(self):
        config = default_config(seed=0)
        doc = config.to_dict()
        doc["sampling"]["edge_budget"] = [1e6, 1e6]
        doc["sampling"]["cloud_budget"] = [1e6, 1e6]
        rows = stability_check(ExperimentConfig.from_dict(doc), [20, 50])
        assert all(r["max_queue_rate"] == 0.0 for r in rows)

    def test_zero_budget_grows_linearly(self):
        # With a zero compute budget and positive load, y_j > 0 whenever
        # anything is assigned, so Q/T stays near the mean excess.
        config = default_config(seed=0, arrival_rate=0.5)
        doc = config.to_dict()
        doc["sampling"]["edge_budget"] = [0.0, 0.0]
        doc["sampling"]["cloud_budget"] = [0.0, 0.0]
        rows = stability_check(ExperimentConfig.from_dict(doc), [50, 100])
        assert all(r["max_queue_rate"] > 0.1 for r in rows)

    def test_slack_config_rate_series_decreases(self):
        config = make_slack_config(default_config(seed=0), slack=1.5)
        rows = stability_check(config, [100, 500, 2000])
        rates = [r["max_queue_rate"] for r in rows]
        assert rates[2] < rates[1] < rates[0]

    def test_slack_config_budgets(self):
        config = default_config(seed=0)
        slack_config = make_slack_config(config, slack=1.5)
        load = mean_slot_workload(config)
        per_server = load / config.system.num_servers
        from offloadsim.simulator import sample_environment
        env = sample_environment(slack_config)
        for server in env.servers:
            assert server.budget * server.capacity >= 1.5 * per_server - 1e-9


class TestSweepSpec:
    def test_rejects_empty_axis(self):
        with pytest.raises(ValueError):
            SweepSpec(v_values=())

    def test_grid_expansion(self):
        spec = SweepSpec(v_values=(1.0, 10.0), num_cloud_values=(6, 8),
                         policies=("iterative", "greedy-delay"), seeds=(0,))
        cells = list(spec.cells(default_config(seed=0)))
        assert len(cells) == 2 * 2 * 2
        for label, config in cells:
            assert config.system.tradeoff_v == label["tradeoff_v"]
            assert config.system.num_cloud == label["num_cloud"]
            assert config.validate() == []

    def test_run_grid_long_form(self):
        spec = SweepSpec(v_values=(10.0,), policies=("greedy-delay",),
                         seeds=(0, 1))
        rows = run_grid(default_config(seed=0, horizon=10), spec)
        assert len(rows) == 2
        assert {r["seed"] for r in rows} == {0, 1}
        assert all("lyapunov_reward" in r for r in rows)

    def test_repetitions_shift_seeds(self):
        spec = SweepSpec(seeds=(5,), repetitions=3)
        labels = [label for label, _ in spec.cells(default_config(seed=0))]
        assert [l["seed"] for l in labels] == [5, 6, 7]


class TestComparisons:
    def test_single_policy_table(self):
        rows = compare_policies(default_config(seed=0, horizon=10),
                                ["greedy-delay"], seeds=[0])
        assert len(rows) == 1 and rows[0]["policy"] == "greedy-delay"

    def test_rows_sorted_by_reward(self):
        rows = compare_policies(default_config(seed=0, horizon=20),
                                ["iterative", "greedy-compute"], seeds=[0, 1])
        assert rows[0]["mean_reward"] >= rows[1]["mean_reward"]

    def test_predictor_comparison_shape(self):
        config = predictor_ablation_config(num_cloud=6, horizon=20)
        rows = compare_predictors(config, ["oracle", "constant"], seeds=[0])
        assert {r["predictor"] for r in rows} == {"oracle", "constant"}
        oracle_row = next(r for r in rows if r["predictor"] == "oracle")
        assert oracle_row["mean_workload_abs_error"] == 0.0
