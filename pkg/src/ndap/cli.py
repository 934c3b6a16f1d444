"""Command-line front end.

    python -m ndap build-dc --n 72 --df 2 --out dc.json
    python -m ndap run --scenario group --algos ndap,nva,ffd --n 144 --reps 10 --seed 7 --out results
    python -m ndap sweep --param df --values 2,4,8,16 --reps 20 --out df_sweep
    python -m ndap oracle-check --instances 200

Exit status: 0 on success, 2 for usage or configuration errors, 1 when a run
fails (for example an audit violation).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import sim
from .placement.oracle import oracle_check
from .topology import TopologyError, build_topology
from .workload import DemandParams

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# flag name -> DemandParams field
PARAM_FLAGS = {
    "mean_com": "mean_com", "mean_str": "mean_str", "mean_vlbw": "mean_vlbw",
    "sd": "sd", "sd_com_str": "sd_com_str", "sd_vlbw": "sd_vlbw",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_scenario_flags(p: argparse.ArgumentParser, scenario=True):
    p.add_argument("--config", help="JSON file with scenario settings; flags override it")
    if scenario:
        p.add_argument("--scenario", choices=sim.SCENARIOS)
    p.add_argument("--algos", help="comma separated, e.g. ndap,nva,ffd")
    p.add_argument("--n", type=int)
    p.add_argument("--df", type=float)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-events", type=int)
    for flag in PARAM_FLAGS:
        p.add_argument("--" + flag.replace("_", "-"), type=float, dest=flag)
    p.add_argument("--no-audit", action="store_true", help="skip the per-event constraint audit")
    p.add_argument("--out", help="output path prefix; writes PREFIX.csv and PREFIX.json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ndap", description="Network- and data-aware AE placement experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-dc", help="generate a data center and print its node counts")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--df", type=float, default=2.0)
    p.add_argument("--out", help="write the topology as JSON")

    p = sub.add_parser("run", help="run the group or individual scenario")
    _add_scenario_flags(p)
    p.add_argument("--trace-out", help="write NDAP decision steps of repetition 0 as JSON lines")

    p = sub.add_parser("sweep", help="run a scenario for each value of one parameter")
    _add_scenario_flags(p)
    p.add_argument("--param", required=True, help="one of: " + ", ".join(sim.SWEEP_PARAMS))
    p.add_argument("--values", required=True, help="comma separated values")

    p = sub.add_parser("oracle-check", help="compare NDAP with brute force on toy instances")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    return parser


def load_config(args) -> sim.ScenarioConfig:
    """File values first, then command-line flags on top."""
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
    params = dict(data.pop("params", {}) or {})
    for flag, fieldname in PARAM_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            params[fieldname] = v
    overrides = {
        "scenario": getattr(args, "scenario", None),
        "n": args.n, "df": args.df, "reps": args.reps, "seed": args.seed,
        "max_events": args.max_events,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.algos:
        data["algorithms"] = [a.strip() for a in args.algos.split(",") if a.strip()]
    if args.no_audit:
        data["audit"] = False
    known = set(sim.ScenarioConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    try:
        data["params"] = DemandParams(**params)
        config = sim.ScenarioConfig.from_dict(data)
    except (TypeError, ValueError) as e:
        raise UsageError(f"invalid configuration: {e}") from None
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    try:
        config.validate()
    except sim.ConfigError as e:
        raise UsageError(str(e)) from None
    if config.seed is None:
        config.seed = sim.new_seed()
        print(f"seed: {config.seed}", file=sys.stderr)
    return config


def _write_outputs(args, rows, results, param=""):
    text = sim.to_csv(rows, seed=results[0][1].seed)
    if args.out:
        prefix = Path(args.out)
        if prefix.suffix in (".csv", ".json"):
            prefix = prefix.with_suffix("")
        prefix.parent.mkdir(parents=True, exist_ok=True)
        prefix.with_suffix(".csv").write_text(text)
        prefix.with_suffix(".json").write_text(sim.to_json(results, param))
        print(f"wrote {prefix.with_suffix('.csv')} and {prefix.with_suffix('.json')}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _print_summary(summary: sim.MetricsSummary, label=""):
    for a, s in summary.algorithms.items():
        line = (f"{label}{a:5s} avg_cost={s.avg_cost['mean']:.4f} "
                f"deploys={s.deploy_count['mean']:.2f} decision={s.decision_time_mean * 1e3:.3f}ms")
        if s.utilization:
            line += " util " + " ".join(f"{k}={v['mean']:.3f}" for k, v in s.utilization.items())
        print(line, file=sys.stderr)


def cmd_build_dc(args) -> int:
    try:
        dc = build_topology(args.n, args.df)
    except TopologyError as e:
        raise UsageError(str(e)) from None
    for k, v in dc.summary().items():
        print(f"{k}: {v}")
    if args.out:
        Path(args.out).write_text(dc.to_json(indent=1))
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config(args)
    decisions = [] if args.trace_out else None
    summary = sim.run(config, jobs=args.jobs, decision_trace=decisions)
    _print_summary(summary)
    _write_outputs(args, sim.csv_rows(summary), [("", summary)])
    if decisions is not None:
        Path(args.trace_out).write_text("".join(json.dumps(d) + "\n" for d in decisions))
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args)
    try:
        values = [sim.parse_value(args.param, v) for v in args.values.split(",") if v.strip()]
        if not values:
            raise sim.ConfigError("--values is empty")
        results = sim.sweep(config, args.param, values, jobs=args.jobs)
    except sim.ConfigError as e:
        raise UsageError(str(e)) from None
    except ValueError as e:
        raise UsageError(f"bad value for {args.param}: {e}") from None
    rows = []
    for v, summary in results:
        _print_summary(summary, f"{args.param}={v} ")
        rows.extend(sim.csv_rows(summary, args.param, v))
    _write_outputs(args, rows, results, args.param)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if args.instances < 1:
        raise UsageError("--instances must be >= 1")
    report = oracle_check(args.instances, args.seed)
    print("\n".join(report.lines()))
    return EXIT_OK if report.ok else EXIT_FAIL


COMMANDS = {
    "build-dc": cmd_build_dc,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except sim.AuditError as e:
        print(f"audit failure: {e}", file=sys.stderr)
        for p in e.problems:
            print("  " + p, file=sys.stderr)
        return EXIT_FAIL
    except Exception as e:  # anything else is a runtime failure, not a usage error
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
