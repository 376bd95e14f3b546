"""Command-line front end.  Thin: parses flags, loads the config, calls the
same library functions the HTTP service exposes, writes batch artifacts.

Exit codes: 0 success, 1 config error, 2 runtime error, 3 oracle-size refusal.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import analysis
from .core import ConfigError, ExperimentConfig, default_config, load_config
from .simulator import run
from .workload import TraceError, generate_trace, load_trace, save_trace

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_ORACLE_SIZE = 3


def _load(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else default_config()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["rng_seed"] = args.seed
    if getattr(args, "policy", None):
        overrides["policy"] = args.policy
    if getattr(args, "predictor", None):
        overrides["predictor"] = args.predictor
    if getattr(args, "predictions", None):
        overrides["predictor"] = "from_file"
        overrides["predictor_params"] = {"path": args.predictions}
    if getattr(args, "tradeoff_v", None) is not None:
        overrides["tradeoff_v"] = args.tradeoff_v
    if getattr(args, "horizon", None) is not None:
        overrides["horizon"] = args.horizon
    if overrides:
        config = config.replace(**overrides)
    return config


def _outdir(args) -> Path:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("", encoding="utf-8")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def cmd_gen_trace(args) -> int:
    config = _load(args)
    trace = generate_trace(config, seed=args.seed)
    save_trace(trace, args.out)
    print(f"wrote {len(trace)} tasks over {config.system.horizon} slots to {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _load(args)
    trace = None
    if args.trace:
        trace = load_trace(args.trace, num_clients=config.system.num_clients,
                           num_types=config.system.num_task_types)
    report = run(config, trace=trace)
    out = _outdir(args)
    (out / "summary.json").write_text(report.summary_json(), encoding="utf-8")
    (out / "slots.jsonl").write_text(report.slot_lines(), encoding="utf-8")
    agg = report.summary_dict()["aggregates"]
    print(f"policy={report.policy_name} predictor={report.predictor_name} "
          f"reward={agg['lyapunov_reward']:.3f} avg_zeta={agg['time_avg_zeta']:.4f} "
          f"drops={agg['drop_count']}")
    print(f"wrote {out / 'summary.json'} and {out / 'slots.jsonl'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load(args)
    v_list = [float(v) for v in args.v_list.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else None
    rows = analysis.v_sweep(config, v_list, seeds)
    out = _outdir(args)
    _write_csv(out / "v_sweep.csv", rows)
    if args.emit_series:
        series = [{"tradeoff_v": r["tradeoff_v"], "time_avg_zeta": r["time_avg_zeta"]}
                  for r in rows]
        _write_csv(out / "series_v_vs_zeta.csv", series)
    for r in rows:
        print(f"V={r['tradeoff_v']:<8g} avg_zeta={r['time_avg_zeta']:.4f} "
              f"avg_queue_sum={r['time_avg_queue_sum']:.4f}")
    return EXIT_OK


def cmd_stability(args) -> int:
    config = _load(args)
    if args.slack is not None:
        config = analysis.make_slack_config(config, slack=args.slack)
    t_list = [int(t) for t in args.t_list.split(",")]
    rows = analysis.stability_check(config, t_list)
    out = _outdir(args)
    _write_csv(out / "stability.csv", rows)
    if args.emit_series:
        series = [{"horizon": r["horizon"], "max_queue_rate": r["max_queue_rate"]}
                  for r in rows]
        _write_csv(out / "series_t_vs_queue_rate.csv", series)
    for r in rows:
        print(f"T={r['horizon']:<6d} max_j Q_j(T)/T = {r['max_queue_rate']:.6f}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    summary = analysis.oracle_gap_check(num_instances=args.instances, seed=args.seed,
                                        num_tasks=args.tasks, num_servers=args.servers)
    out = _outdir(args)
    (out / "oracle_check.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"instances={summary['num_instances']} "
          f"within_10pct={summary['within_10pct']:.2%} "
          f"max_gap={summary['max_gap']:.4f} min_margin={summary['min_margin']:.3e}")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _load(args)
    policies = args.policies.split(",")
    seeds = [int(s) for s in args.seeds.split(",")]
    rows = analysis.compare_policies(config, policies, seeds)
    out = _outdir(args)
    csv_rows = [{k: v for k, v in r.items() if k != "rewards"} for r in rows]
    _write_csv(out / "policy_comparison.csv", csv_rows)
    for r in rows:
        print(f"{r['policy']:<18s} reward={r['mean_reward']:>14.2f} "
              f"(+/- {r['std_reward']:.2f}) drops={r['total_drops']}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="offloadsim",
        description="Simulate and optimize token-aware task offloading across "
                    "edge and cloud servers.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, outdir=True):
        p.add_argument("--config", help="config file (JSON); defaults to the built-in config")
        p.add_argument("--seed", type=int, help="override the RNG seed")
        if outdir:
            p.add_argument("--outdir", default="out", help="output directory")

    p = sub.add_parser("gen-trace", help="generate a synthetic trace file")
    common(p, outdir=False)
    p.add_argument("--out", required=True, help="trace file to write")
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("run", help="run one simulation and write its report")
    common(p)
    p.add_argument("--trace", help="replay this trace file instead of generating one")
    p.add_argument("--policy", help="override the policy name")
    p.add_argument("--predictor", help="override the predictor name")
    p.add_argument("--predictions", help="predictions file (switches predictor to from_file)")
    p.add_argument("--tradeoff-v", type=float, dest="tradeoff_v")
    p.add_argument("--horizon", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep the tradeoff weight V")
    common(p)
    p.add_argument("--v-list", default="1,10,100,1000")
    p.add_argument("--seeds", help="comma-separated seeds (default: config seed)")
    p.add_argument("--emit-series", action="store_true",
                   help="also write plot-ready series files")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stability", help="queue stability across horizons")
    common(p)
    p.add_argument("--t-list", default="100,500,2000")
    p.add_argument("--slack", type=float,
                   help="pin budgets to SLACK x mean per-server load first")
    p.add_argument("--emit-series", action="store_true")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("oracle-check", help="compare the solver to the exhaustive oracle")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--tasks", type=int, default=6)
    p.add_argument("--servers", type=int, default=3)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--outdir", default="out")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("compare", help="paired policy comparison on shared traces")
    common(p)
    p.add_argument("--policies",
                   default="iterative,greedy-accuracy,greedy-compute,greedy-delay")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except analysis.OracleSizeError as exc:
        print(f"oracle refusal: {exc}", file=sys.stderr)
        return EXIT_ORACLE_SIZE
    except (ConfigError, TraceError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:   # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
