"""Minimum-cost decomposition search over an AND/OR graph.

The search covers every currently built sub-assembly: it decomposes the root
into exactly the solved set while minimizing the summed cost of the chosen
hyper-arcs.  Costs are additive and arc-local, so a memoized bottom-up pass
over the DAG (best(n) = min over incoming arcs of arc cost + best(children),
best(solved) = 0) yields the same optimum a top-down search would, with
determinism easy to pin down.

Replanning after a completed action is the same search: solved nodes cost
zero and are never expanded, so only the reduced graph above the current
state is visited.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .aog import AOG, ProgressState

INF = float("inf")


class PlanningError(ValueError):
    pass


@dataclass(frozen=True)
class PlanStep:
    action: str
    worker: str
    parent: str
    children: tuple
    cost: float
    arc_id: str


@dataclass(frozen=True)
class PlanTree:
    """One solution: a chosen hyper-arc per expanded node.

    `steps` lists the chosen arcs in deterministic execution order (cheapest
    enabled first, ties by action id then arc id).  `frontier` holds every
    graph arc executable right now that realizes a planned action with its
    planned worker -- actions the plan leaves order-free all appear here --
    sorted by (cost, action, arc id); `ordered_frontier` is its action view.
    """

    chosen: Mapping[str, str]
    total_cost: float
    steps: tuple
    frontier: tuple
    ordered_frontier: tuple


def _arc_cost(arc, costs) -> float:
    c = costs.get(arc.id) if costs is not None else None
    if c is None:
        c = arc.cost
    if c is None:
        raise PlanningError(f"hyper-arc {arc.id!r} has no cost set")
    if c < 0:
        raise PlanningError(f"hyper-arc {arc.id!r} has negative cost {c}")
    return float(c)


def optimal_plan(graph: AOG, state: ProgressState, costs: Mapping | None = None) -> PlanTree:
    """Cheapest decomposition of the root into the solved set.

    `costs` overlays per-arc costs by arc id; arcs missing from the overlay
    fall back to their stored cost.  Ties prefer the lower worker id, then the
    lower arc id.  A root that is already solved yields an empty plan.
    """
    root = graph.root_id
    if root in state.solved:
        return PlanTree(chosen={}, total_cost=0.0, steps=(), frontier=(), ordered_frontier=())

    # nodes strictly inside a built sub-assembly can never bottom out on the
    # solved set; skipping them keeps the search on the reduced graph, so
    # replanning gets cheaper as the assembly progresses
    solved_sets = [graph.nodes[nid].pieces for nid in state.solved if nid in graph.nodes]

    def below_frontier(pieces) -> bool:
        return any(pieces < s for s in solved_sets)

    best: dict[str, float] = {}
    pick: dict[str, str] = {}
    for node in sorted(graph.nodes.values(), key=lambda n: (len(n.pieces), n.id)):
        if node.id in state.solved:
            best[node.id] = 0.0
            continue
        if below_frontier(node.pieces):
            continue
        candidates = []
        for arc_id in graph.arcs_into(node.id):
            arc = graph.arcs[arc_id]
            sub = best.get(arc.children[0], INF) + best.get(arc.children[1], INF)
            candidates.append((_arc_cost(arc, costs) + sub, arc.worker, arc_id))
        if not candidates:
            best[node.id] = INF
            continue
        total, _, arc_id = min(candidates)
        best[node.id] = total
        if total < INF:
            pick[node.id] = arc_id

    if best[root] == INF:
        raise PlanningError("no decomposition exists from the root to the solved set")

    chosen: dict[str, str] = {}
    stack = [root]
    while stack:
        nid = stack.pop()
        if nid in state.solved:
            continue
        arc = graph.arcs[pick[nid]]
        chosen[nid] = arc.id
        stack.extend(arc.children)

    # execution-order steps along the chosen tree: cheapest enabled merge first
    solved = set(state.solved)
    remaining = set(chosen.values())
    steps: list[PlanStep] = []
    while remaining:
        enabled = []
        for arc_id in remaining:
            arc = graph.arcs[arc_id]
            if arc.children[0] in solved and arc.children[1] in solved:
                enabled.append((_arc_cost(arc, costs), arc.action, arc_id))
        if not enabled:
            raise PlanningError("plan extraction stalled; graph structure is inconsistent")
        cost, action, arc_id = min(enabled)
        arc = graph.arcs[arc_id]
        steps.append(
            PlanStep(
                action=action,
                worker=arc.worker,
                parent=arc.parent,
                children=arc.children,
                cost=cost,
                arc_id=arc_id,
            )
        )
        remaining.remove(arc_id)
        solved -= set(arc.children)
        solved.add(arc.parent)

    # graph-level frontier: the plan fixes a worker per action, but actions it
    # leaves order-free may be executable through arcs outside the chosen tree
    assignment: dict[str, tuple] = {}
    for arc_id in chosen.values():
        arc = graph.arcs[arc_id]
        key = (_arc_cost(arc, costs), arc.worker)
        if arc.action not in assignment or key < assignment[arc.action]:
            assignment[arc.action] = key
    entries = []
    for arc in graph.enabled_arcs(state.solved):
        planned = assignment.get(arc.action)
        if planned is not None and arc.worker == planned[1]:
            entries.append(
                PlanStep(
                    action=arc.action,
                    worker=arc.worker,
                    parent=arc.parent,
                    children=arc.children,
                    cost=_arc_cost(arc, costs),
                    arc_id=arc.id,
                )
            )
    entries.sort(key=lambda s: (s.cost, s.action, s.arc_id))

    return PlanTree(
        chosen=chosen,
        total_cost=best[root],
        steps=tuple(steps),
        frontier=tuple(entries),
        ordered_frontier=tuple(s.action for s in entries),
    )


def replan(graph: AOG, state: ProgressState, updated_costs: Mapping) -> PlanTree:
    """Re-search above the current state with refreshed costs.

    Completed merges sit below the solved frontier and are never revisited.
    """
    return optimal_plan(graph, state, costs=updated_costs)


def next_action(plan: PlanTree, state: ProgressState) -> tuple:
    """The (action, worker) to execute now: cheapest executable plan action,
    ties by action id."""
    if not plan.steps:
        raise PlanningError("plan is empty")
    for step in plan.frontier:
        if step.children[0] in state.solved and step.children[1] in state.solved:
            return step.action, step.worker
    # stale state relative to the plan: fall back to the chosen tree
    enabled = [
        (s.cost, s.action, s.arc_id, s)
        for s in plan.steps
        if s.children[0] in state.solved and s.children[1] in state.solved
    ]
    if not enabled:
        raise PlanningError("no enabled action: plan does not match the current state")
    _, _, _, step = min(enabled, key=lambda e: e[:3])
    return step.action, step.worker


def plan_to_dict(plan: PlanTree) -> dict:
    return {
        "total_cost": plan.total_cost,
        "steps": [
            {
                "action": s.action,
                "worker": s.worker,
                "parent": s.parent,
                "children": list(s.children),
                "cost": s.cost,
            }
            for s in plan.steps
        ],
    }
