"""Search-time scaling measurements on the chain-interconnection graph family.

Two protocols: `run_scaling` times a full search per (pieces, workers)
configuration with randomized integer costs, and `run_shrinking` times the
re-search after each simulated completion, which should trend downward as the
reduced graph shrinks.  Absolute times are machine-specific; consumers assert
on trends and on the structural columns only.
"""
from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .aog import AOG, apply_action, generate_linear_assembly, initial_state
from .planner import next_action, optimal_plan

MAX_PIECES = 20
MAX_WORKERS = 40

TABLE_COLUMNS = ("pieces", "workers", "nodes", "arcs", "t_median_us", "t_p10_us", "t_p90_us")


class BenchError(ValueError):
    pass


@dataclass(frozen=True)
class ScalingRow:
    pieces: int
    workers: int
    nodes: int
    arcs: int
    t_median_us: float
    t_p10_us: float
    t_p90_us: float


@dataclass(frozen=True)
class ShrinkRow:
    step: int
    solved_count: int
    t_median_us: float


def _check_ranges(pieces: Sequence[int], workers: Sequence[int], repetitions: int) -> None:
    if repetitions < 3:
        raise BenchError("need at least 3 repetitions")
    for n in pieces:
        if not 1 <= n <= MAX_PIECES:
            raise BenchError(f"piece count {n} outside [1, {MAX_PIECES}]")
    for w in workers:
        if not 1 <= w <= MAX_WORKERS:
            raise BenchError(f"worker count {w} outside [1, {MAX_WORKERS}]")


def _random_costs(graph: AOG, seed_key: tuple) -> dict:
    rng = random.Random(":".join(str(k) for k in seed_key))
    return {arc_id: float(rng.randint(1, 100)) for arc_id in graph.arcs}


def run_scaling(
    pieces_range: Sequence[int],
    workers_range: Sequence[int],
    repetitions: int = 9,
    cost_seed: int = 0,
) -> list:
    """Median/p10/p90 search wall time per configuration, microseconds.

    Repetitions are interleaved round-robin across configurations so a
    transient host slowdown degrades a few samples of many configurations
    instead of one configuration's whole block; medians absorb the rest.
    """
    _check_ranges(pieces_range, workers_range, repetitions)
    configs = []
    for n in pieces_range:
        for w in workers_range:
            graph = generate_linear_assembly(n, w)
            state = initial_state(graph)
            optimal_plan(graph, state, _random_costs(graph, (cost_seed, n, w, "warmup")))
            configs.append((n, w, graph, state, []))
    for rep in range(repetitions):
        for n, w, graph, state, samples in configs:
            costs = _random_costs(graph, (cost_seed, n, w, rep))
            t0 = time.perf_counter_ns()
            optimal_plan(graph, state, costs)
            samples.append((time.perf_counter_ns() - t0) / 1000.0)
    return [
        ScalingRow(
            pieces=n,
            workers=w,
            nodes=len(graph.nodes),
            arcs=len(graph.arcs),
            t_median_us=float(np.median(samples)),
            t_p10_us=float(np.percentile(samples, 10)),
            t_p90_us=float(np.percentile(samples, 90)),
        )
        for n, w, graph, state, samples in configs
    ]


def run_shrinking(
    pieces: int,
    workers: int,
    repetitions: int = 5,
    cost_seed: int = 0,
) -> list:
    """Re-search time after each completed action of a full run-through."""
    _check_ranges([pieces], [workers], repetitions)
    graph = generate_linear_assembly(pieces, workers)
    per_step: list[list[float]] = [[] for _ in range(max(0, pieces - 1))]
    solved_counts = [0] * max(0, pieces - 1)
    for rep in range(repetitions):
        costs = _random_costs(graph, (cost_seed, pieces, workers, rep))
        state = initial_state(graph)
        for step in range(pieces - 1):
            t0 = time.perf_counter_ns()
            plan = optimal_plan(graph, state, costs)
            per_step[step].append((time.perf_counter_ns() - t0) / 1000.0)
            solved_counts[step] = len(state.solved)
            action, worker = next_action(plan, state)
            state = apply_action(state, graph, action, worker)
    return [
        ShrinkRow(step=i + 1, solved_count=solved_counts[i], t_median_us=float(np.median(s)))
        for i, s in enumerate(per_step)
    ]


def emit_table(rows: Sequence, path, fmt: str = "csv", cost_seed: int | None = None) -> None:
    """Write scaling rows with a pinned column order (csv or jsonl)."""
    path = Path(path)
    if fmt == "csv":
        lines = []
        if cost_seed is not None:
            lines.append(f"# cost_seed={cost_seed}")
        lines.append(",".join(TABLE_COLUMNS))
        for r in rows:
            d = asdict(r)
            lines.append(",".join(str(d[c]) for c in TABLE_COLUMNS))
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "jsonl":
        lines = []
        for r in rows:
            d = asdict(r)
            if cost_seed is not None:
                d["cost_seed"] = cost_seed
            lines.append(json.dumps(d, sort_keys=True))
        path.write_text("\n".join(lines) + "\n")
    else:
        raise BenchError(f"unknown format {fmt!r}")


def log_time_fit_r2(rows: Sequence, min_pieces: int, max_pieces: int) -> float:
    """R^2 of a straight-line fit to log(median time) over a piece range."""
    xs = [r.pieces for r in rows if min_pieces <= r.pieces <= max_pieces]
    ys = [np.log(r.t_median_us) for r in rows if min_pieces <= r.pieces <= max_pieces]
    if len(xs) < 3:
        raise BenchError("not enough rows for a trend fit")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
