"""Command-line entry points: generate, validate, calibrate, plan, replay,
bench, serve.

Exit codes: 0 ok, 1 validation failure, 2 usage error, 3 I/O error.
Config handling: --config loads a file, individual flags override its fields.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from .aog import (
    generate_linear_assembly,
    graph_from_dict,
    graph_to_dict,
    load_graph,
    save_graph,
    validate,
)
from .calibration import (
    CalibrationError,
    estimate_action_model,
    load_calibration,
    save_calibration,
    trial_from_dict,
)
from .ergo import (
    DEFAULT_CAPACITY,
    JOINTS,
    CostConfig,
    WearVector,
    config_from_dict,
    config_to_dict,
    load_config,
)
from .planner import plan_to_dict
from .session import (
    export_log,
    offline_allocation,
    run_scenario,
    start_session,
)
from .calibration import models_from_dict

CONFIG_FLAGS = (
    "gamma_low",
    "gamma_med",
    "gamma_high",
    "v_th1",
    "v_th2",
    "robot_cost",
    "recovery_rate",
    "capacity",
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="config file (cost + bands)")
    for name in CONFIG_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", type=float, default=None)


def _resolve_config(args) -> CostConfig:
    if args.config is not None:
        config, _ = load_config(args.config)
        data = config_to_dict(config)
    else:
        data = config_to_dict(CostConfig())
    for name in CONFIG_FLAGS:
        value = getattr(args, name)
        if value is not None:
            data[name] = value
    return config_from_dict(data)


def _write_json(path: Path | None, payload) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _parse_range(spec: str) -> list:
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in spec.split(",")]


def cmd_generate(args) -> int:
    graph = generate_linear_assembly(args.pieces, args.workers)
    if args.out is None:
        _write_json(None, graph_to_dict(graph))
    else:
        save_graph(graph, args.out)
        print(f"wrote {args.out}: {len(graph.nodes)} nodes, {len(graph.arcs)} hyper-arcs")
    return 0


def cmd_validate(args) -> int:
    graph = load_graph(args.graph)
    violations = validate(graph)
    if not violations:
        print(f"{args.graph}: valid ({len(graph.nodes)} nodes, {len(graph.arcs)} hyper-arcs)")
        return 0
    for v in violations:
        print(f"{args.graph}: {v.rule}: {v.subject}: {v.detail}", file=sys.stderr)
    return 1


def cmd_calibrate(args) -> int:
    data = json.loads(Path(args.trials).read_text())
    if data.get("v") != 1:
        print(f"{args.trials}: unsupported trials version {data.get('v')!r}", file=sys.stderr)
        return 1
    capacity_ = float(data.get("capacity", args.capacity or DEFAULT_CAPACITY))
    by_action: dict[str, list] = {}
    for i, rec in enumerate(data["trials"]):
        try:
            trial = trial_from_dict(rec)
        except (KeyError, CalibrationError) as exc:
            print(f"{args.trials}: trial {i}: {exc}", file=sys.stderr)
            return 1
        by_action.setdefault(trial.action, []).append(trial)
    models = {
        action: estimate_action_model(trials, capacity_, robust=args.robust)
        for action, trials in sorted(by_action.items())
    }
    save_calibration(models, capacity_, args.out)
    print(f"wrote {args.out}: {len(models)} actions, capacity {capacity_:.2f}")
    return 0


def _load_session_inputs(args):
    graph = load_graph(args.graph)
    models, calib_capacity = load_calibration(args.calibration)
    config = _resolve_config(args)
    if args.config is None and args.capacity is None:
        config = config_from_dict({**config_to_dict(config), "capacity": calib_capacity})
    if args.wear is not None:
        values = [float(x) for x in args.wear.split(",")]
        wear = WearVector(values=tuple(values))
    else:
        wear = WearVector(values=(0.0,) * len(JOINTS))
    return graph, models, config, wear


def cmd_plan(args) -> int:
    graph, models, config, wear = _load_session_inputs(args)
    session = start_session(graph, models, config, wear)
    if session.is_complete:
        payload = {"total_cost": 0.0, "steps": [], "assignment": []}
    else:
        assignment = offline_allocation(session)
        from .planner import optimal_plan
        from .session import recost

        plan = optimal_plan(graph, session.progress, recost(session))
        payload = plan_to_dict(plan)
        payload["assignment"] = [{"action": a, "worker": w} for a, w in assignment]
    _write_json(args.out, payload)
    for step in payload["assignment"]:
        print(f"{step['action']}\t{step['worker']}")
    return 0


def cmd_replay(args) -> int:
    if (args.scenario is None) == (args.log is None):
        print("replay needs exactly one of --scenario or --log", file=sys.stderr)
        return 2

    if args.log is not None:
        from .session import replay_log

        session = replay_log(Path(args.log).read_text())
        print("step\taction\tworker\tt_s")
        for i, h in enumerate(session.progress.history, start=1):
            print(f"{i}\t{h.action}\t{h.worker}\t{h.t:g}")
        print(
            "replayed:\t"
            + " ".join(f"{h.action}={h.worker}" for h in session.progress.history)
        )
        if args.out is not None:
            Path(args.out).write_text(export_log(session))
            print(f"wrote {args.out}")
        return 0

    scenario = json.loads(Path(args.scenario).read_text())
    session, rows = run_scenario(scenario)

    offline_rows = []
    fresh = start_session(
        graph=graph_from_dict(scenario["graph"]),
        models=models_from_dict(scenario["calibration"]["actions"]),
        config=config_from_dict(scenario.get("config", {})),
        initial_wear=WearVector.from_mapping(scenario["initial_wear"]),
        robot_durations=scenario.get("robot_durations", {}),
    )
    if not fresh.is_complete:
        offline_rows = list(offline_allocation(fresh))

    print("step\taction\tworker\tplan_cost")
    for r in rows:
        print(f"{r.step}\t{r.action}\t{r.worker}\t{r.plan_cost:g}")
    print("online :\t" + " ".join(f"{a}={w}" for a, w in ((r.action, r.worker) for r in rows)))
    print("offline:\t" + " ".join(f"{a}={w}" for a, w in offline_rows))
    if args.out is not None:
        Path(args.out).write_text(export_log(session))
        print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    pieces = _parse_range(args.pieces)
    workers = _parse_range(args.workers)
    if args.mode == "scaling":
        rows = bench_mod.run_scaling(pieces, workers, repetitions=args.reps, cost_seed=args.seed)
        bench_mod.emit_table(rows, args.out, fmt=args.format, cost_seed=args.seed)
    else:
        if len(pieces) != 1 or len(workers) != 1:
            raise bench_mod.BenchError("shrinking mode takes a single pieces/workers value")
        rows = bench_mod.run_shrinking(
            pieces[0], workers[0], repetitions=args.reps, cost_seed=args.seed
        )
        lines = ["step,solved_count,t_median_us"] + [
            f"{r.step},{r.solved_count},{r.t_median_us}" for r in rows
        ]
        Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {args.out}: {len(rows)} rows")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergoalloc",
        description="Online human-robot role allocation for assembly tasks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a chain-interconnection graph as JSON")
    p.add_argument("--pieces", type=int, required=True, help="number of atomic pieces")
    p.add_argument("--workers", type=int, required=True, help="number of workers (first is human)")
    p.add_argument("--out", type=Path, default=None, help="output file (stdout if omitted)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check a graph file against all invariants")
    p.add_argument("graph", type=Path, help="graph JSON file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("calibrate", help="estimate action models from trial records")
    p.add_argument("--trials", type=Path, required=True, help="trials JSON (traces or endpoints)")
    p.add_argument("--out", type=Path, required=True, help="calibration file to write")
    p.add_argument("--capacity", type=float, default=None, help="override the endurance capacity")
    p.add_argument("--robust", action="store_true", help="median instead of mean")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("plan", help="one-shot offline allocation for a graph")
    p.add_argument("--graph", type=Path, required=True, help="graph JSON file")
    p.add_argument("--calibration", type=Path, required=True, help="calibration file")
    p.add_argument("--wear", type=str, default=None, help="comma list: shoulder,elbow,wrist,trunk,neck")
    p.add_argument("--out", type=Path, default=None, help="plan JSON output (stdout if omitted)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("replay", help="drive a session from a scenario file or an event log")
    p.add_argument("--scenario", type=Path, default=None, help="scenario JSON to execute")
    p.add_argument("--log", type=Path, default=None, help="re-execute an exported event log")
    p.add_argument("--out", type=Path, default=None, help="write the resulting event log here")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("bench", help="search-time scaling measurements")
    p.add_argument("--pieces", type=str, required=True, help="N, N:M or comma list")
    p.add_argument("--workers", type=str, required=True, help="N, N:M or comma list")
    p.add_argument("--mode", choices=("scaling", "shrinking"), default="scaling",
                   help="full-search sweep or per-step replanning")
    p.add_argument("--reps", type=int, default=9, help="timing repetitions per configuration")
    p.add_argument("--seed", type=int, default=0, help="cost randomization seed")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv", help="table format")
    p.add_argument("--out", type=Path, required=True, help="table file to write")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", type=str, default="127.0.0.1", help="bind address")
    p.add_argument("--port", type=int, default=8765, help="bind port")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"cannot read {exc.filename}: file not found", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    except json.JSONDecodeError as exc:
        print(f"malformed JSON: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
