"""Acceptance suite: every criterion at its stated tolerance, one printed
pass/fail line each.  Run with `pytest tests/test_acceptance.py -v -s`.
"""

import time

import numpy as np

from offloadsim.analysis import (compare_policies, compare_predictors,
                                 make_slack_config, oracle_gap_check,
                                 predictor_ablation_config, stability_check,
                                 v_sweep)
from offloadsim.core import default_config
from offloadsim.delays import comm_delay, comp_delay
from offloadsim.lyapunov import drift_plus_penalty, excess, slot_cost_zeta
from offloadsim.simulator import run


def report(criterion, passed, detail):
    status = "PASS" if passed else "FAIL"
    print(f"[{status}] criterion {criterion}: {detail}")
    assert passed, f"criterion {criterion}: {detail}"


class TestAcceptance:
    def test_01_oracle_gap(self):
        t0 = time.time()
        result = oracle_gap_check(num_instances=100, seed=42,
                                  num_tasks=6, num_servers=3)
        elapsed = time.time() - t0
        ok = (result["within_10pct"] >= 0.90
              and result["min_margin"] >= -1e-9
              and elapsed < 60.0)
        report(1, ok,
               f"oracle gap: {result['within_10pct']:.0%} of 100 instances within "
               f"10% (need >= 90%), min margin {result['min_margin']:.2e} (never "
               f"below), {elapsed:.1f}s (< 60s)")

    def test_02_queue_stability(self):
        t0 = time.time()
        config = make_slack_config(default_config(seed=0), slack=1.5)
        rows = {r["horizon"]: r["max_queue_rate"]
                for r in stability_check(config, [100, 2000])}
        elapsed = time.time() - t0
        rate_100, rate_2000 = rows[100], rows[2000]
        ok = rate_2000 <= 0.10 * rate_100 and elapsed < 120.0
        report(2, ok,
               f"mean-rate stability: max_j Q_j(T)/T fell from {rate_100:.4f} at "
               f"T=100 to {rate_2000:.4f} at T=2000 "
               f"(ratio {rate_2000 / rate_100 if rate_100 else 0.0:.3f}, need <= 0.10), "
               f"{elapsed:.1f}s (< 120s)")

    def test_03_tradeoff_curve(self):
        rows = v_sweep(default_config(seed=0), [1.0, 10.0, 100.0, 1000.0], seeds=[0])
        zetas = [r["time_avg_zeta"] for r in rows]
        queues = [r["time_avg_queue_sum"] for r in rows]
        z_tol = 0.02 * (max(zetas) - min(zetas))
        q_tol = 0.02 * (max(queues) - min(queues))
        z_ok = all(zetas[i + 1] <= zetas[i] + z_tol for i in range(len(zetas) - 1))
        q_ok = all(queues[i + 1] >= queues[i] - q_tol for i in range(len(queues) - 1))
        report(3, z_ok and q_ok,
               f"V sweep on fixed seeded trace: avg zeta {[round(z, 3) for z in zetas]} "
               f"non-increasing={z_ok}, avg queue sum {[round(q, 1) for q in queues]} "
               f"non-decreasing={q_ok} (2% of range tolerance)")

    def test_04_policy_ordering(self):
        config = default_config(seed=0)
        rows = compare_policies(
            config,
            ["iterative", "greedy-accuracy", "greedy-compute", "greedy-delay"],
            seeds=[0, 1, 2, 3, 4])
        rewards = {r["policy"]: r["mean_reward"] for r in rows}
        ours = rewards["iterative"]
        greedy_best = max(v for k, v in rewards.items() if k != "iterative")
        ok = all(ours > rewards[g] for g in
                 ("greedy-accuracy", "greedy-compute", "greedy-delay"))
        report(4, ok,
               f"policy ordering over 5 paired seeds: iterative {ours:.0f} vs best "
               f"greedy {greedy_best:.0f} "
               f"(accuracy {rewards['greedy-accuracy']:.0f}, "
               f"compute {rewards['greedy-compute']:.0f}, "
               f"delay {rewards['greedy-delay']:.0f})")

    def test_05_predictor_ablation_direction(self):
        margins = {}
        ok = True
        for num_cloud in (6, 8, 10):
            config = predictor_ablation_config(num_cloud=num_cloud)
            rows = compare_predictors(config, ["oracle", "constant"],
                                      seeds=[0, 1, 2, 3, 4])
            rewards = {r["predictor"]: r["mean_reward"] for r in rows}
            margins[num_cloud] = rewards["oracle"] - rewards["constant"]
            ok = ok and rewards["oracle"] > rewards["constant"]
        report(5, ok,
               "oracle beats constant-mean predictor on mean reward over 5 paired "
               "seeds at U=6/8/10; margins "
               + ", ".join(f"U={u}: {m:+.0f}" for u, m in margins.items()))

    def test_06_solver_convergence(self):
        config = default_config(seed=0, policy_params={
            "damping": 0.5, "max_iters": 20})
        rep = run(config)
        converged = [r.solver_converged for r in rep.records]
        frac = sum(converged) / len(converged)

        config_fast = default_config(seed=0, policy_params={
            "damping": 1.0, "congestion_weight": 0.0, "max_iters": 20})
        rep_fast = run(config_fast)
        iters = [r.solver_iterations for r in rep_fast.records]
        fast_ok = all(i <= 2 for i in iters)
        ok = frac >= 0.95 and fast_ok
        report(6, ok,
               f"convergence: damping=0.5/K=20 converged on {frac:.0%} of slots "
               f"(need >= 95%); damping=1/weight=0 max iterations "
               f"{max(iters)} (need <= 2 on 100%)")

    def test_07_formula_replays(self):
        rep = run(default_config(seed=0))
        checked = 0
        queues_before = np.zeros(len(rep.env.servers))
        for record in rep.records:
            zeta_terms = []
            per_server = {s.server_id: [] for s in record.servers}
            running = np.zeros(len(record.servers))
            index_of = {s.server_id: j for j, s in enumerate(record.servers)}
            backlog_of = {s.server_id: s.backlog_before for s in record.servers}
            for t in record.tasks:
                if t.dropped:
                    zeta_terms.append((t.alpha, t.beta, 0.0, 0.0, True))
                    continue
                kappa = comm_delay(t.data_size, t.rate, t.eta)
                tau = comp_delay(rep.env.servers[t.server - 1].capacity,
                                 backlog_of[t.server], per_server[t.server],
                                 t.q_real)
                assert kappa == t.kappa and tau == t.tau
                per_server[t.server].append(t.q_real)
                running[index_of[t.server]] += t.q_real
                zeta_terms.append((t.alpha, t.beta, tau, t.accuracy, False))
                checked += 1
            zeta = slot_cost_zeta(zeta_terms, rep.config.system.accuracy_weight,
                                  rep.config.drop_penalty_delay)
            y = excess(running, rep.env.servers)
            dpp = drift_plus_penalty(zeta, y, queues_before,
                                     rep.config.system.tradeoff_v)
            assert zeta == record.zeta
            assert all(float(y[j]) == s.y for j, s in enumerate(record.servers))
            assert dpp == record.dpp
            queues_before = np.array([s.q_after for s in record.servers])
        report(7, True,
               f"formula replays: zeta/y/kappa/tau recomputed bit-exactly for "
               f"{len(rep.records)} slots ({checked} placed tasks)")

    def test_08_determinism(self):
        config = default_config(seed=0)
        a, b = run(config), run(config)
        summary_same = a.summary_json() == b.summary_json()
        slots_same = a.slot_lines() == b.slot_lines()
        ok = summary_same and slots_same
        report(8, ok,
               f"determinism: repeated runs byte-identical "
               f"(summary={summary_same}, per-slot stream={slots_same})")
