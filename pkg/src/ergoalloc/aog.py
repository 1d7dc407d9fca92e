"""AND/OR graph model of cooperative assembly tasks.

A node is a sub-assembly identified by the set of atomic pieces it contains.
A hyper-arc joins exactly two disjoint child sub-assemblies into their union;
for every structural merge there is one arc per worker, so alternative workers
compete as alternative arcs into the same parent.  The root holds every piece,
leaves hold single pieces.

Graphs are immutable after construction.  Progress through an assembly is a
value (`ProgressState`); applying an action produces a new state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence


class GraphError(ValueError):
    """Construction or state-transition failure on an AND/OR graph."""


@dataclass(frozen=True)
class Worker:
    id: str
    kind: str  # "human" | "robot"

    def __post_init__(self):
        if self.kind not in ("human", "robot"):
            raise GraphError(f"worker {self.id!r} has unknown kind {self.kind!r}")


@dataclass(frozen=True)
class Node:
    id: str
    pieces: frozenset
    kind: str  # "leaf" | "internal" | "root"


@dataclass(frozen=True)
class HyperArc:
    """Two-to-one merge of `children` into `parent`, priced for one worker.

    `cost` is None until costed; the planner refuses to search un-costed arcs,
    so a forgotten costing pass cannot silently win with zero-cost paths.
    """

    id: str
    parent: str
    children: tuple
    action: str
    worker: str
    cost: float | None = None


def node_id_for(pieces: Iterable[str]) -> str:
    return "+".join(sorted(pieces))


@dataclass
class AOG:
    pieces: frozenset
    workers: tuple
    nodes: Mapping[str, Node]
    arcs: Mapping[str, HyperArc]

    def __post_init__(self):
        into: dict[str, list[str]] = {}
        for arc in self.arcs.values():
            into.setdefault(arc.parent, []).append(arc.id)
        self._arcs_into = {k: tuple(v) for k, v in into.items()}
        child_ids = {c for a in self.arcs.values() for c in a.children}
        self._root_candidates = tuple(n for n in self.nodes if n not in child_ids)
        self._workers_by_id = {w.id: w for w in self.workers}

    @property
    def root_id(self) -> str:
        if len(self._root_candidates) != 1:
            raise GraphError(
                f"graph has {len(self._root_candidates)} parentless nodes, expected exactly 1"
            )
        return self._root_candidates[0]

    @property
    def actions(self) -> frozenset:
        return frozenset(a.action for a in self.arcs.values())

    def leaves(self) -> tuple:
        return tuple(n.id for n in self.nodes.values() if len(n.pieces) == 1)

    def arcs_into(self, node_id: str) -> tuple:
        """Arc ids whose parent is `node_id` (the OR choices for that node)."""
        return self._arcs_into.get(node_id, ())

    def worker(self, worker_id: str) -> Worker:
        try:
            return self._workers_by_id[worker_id]
        except KeyError:
            raise GraphError(f"unknown worker {worker_id!r}") from None

    def human_worker_ids(self) -> tuple:
        return tuple(w.id for w in self.workers if w.kind == "human")

    def enabled_arcs(self, solved: frozenset) -> list:
        return [
            a
            for a in self.arcs.values()
            if a.children[0] in solved and a.children[1] in solved
        ]


@dataclass(frozen=True)
class HistoryEntry:
    action: str
    worker: str
    t: float


@dataclass(frozen=True)
class ProgressState:
    solved: frozenset
    history: tuple = ()


def initial_state(graph: AOG) -> ProgressState:
    return ProgressState(solved=frozenset(graph.leaves()))


def is_complete(graph: AOG, state: ProgressState) -> bool:
    return graph.root_id in state.solved


def apply_action(
    state: ProgressState,
    graph: AOG,
    action: str,
    worker: str,
    t: float | None = None,
) -> ProgressState:
    """Apply one enabled merge and return the successor state.

    The (action, worker) pair selects the hyper-arc whose two children are
    both solved; if several qualify the lowest arc id wins.
    """
    graph.worker(worker)
    if action not in graph.actions:
        raise GraphError(f"unknown action {action!r}")
    candidates = sorted(
        a.id
        for a in graph.arcs.values()
        if a.action == action
        and a.worker == worker
        and a.children[0] in state.solved
        and a.children[1] in state.solved
    )
    if not candidates:
        raise GraphError(f"action {action!r} by {worker!r} is not enabled")
    arc = graph.arcs[candidates[0]]
    if t is None:
        t = state.history[-1].t + 1.0 if state.history else 0.0
    solved = (state.solved - set(arc.children)) | {arc.parent}
    entry = HistoryEntry(action=action, worker=worker, t=float(t))
    return ProgressState(solved=frozenset(solved), history=state.history + (entry,))


# ---------------------------------------------------------------------------
# construction


def _bipartitions(pieces: frozenset):
    """All unordered two-way splits of `pieces`, each exactly once."""
    items = sorted(pieces)
    anchor = items[0]
    rest = items[1:]
    for mask in range(2 ** len(rest)):
        left = {anchor} | {p for i, p in enumerate(rest) if mask >> i & 1}
        right = pieces - left
        if right:
            yield frozenset(left), frozenset(right)


def build_graph(
    pieces: Iterable[str],
    feasible_splits: Callable[[frozenset, tuple], bool],
    workers: Sequence[Worker],
    action_namer: Callable[[frozenset, frozenset, frozenset], str] | None = None,
) -> AOG:
    """Expand every sub-assembly reachable from the full piece set.

    `feasible_splits(subset, (left, right))` admits or rejects a candidate
    merge; the pair is passed with left.id < right.id.  Only splits whose both
    sides can themselves be decomposed down to single pieces are kept, so the
    result never contains dead-end nodes.  Raises when the root cannot be
    fully decomposed, naming the smallest blocking sub-assembly.
    """
    piece_set = frozenset(pieces)
    if not piece_set:
        raise GraphError("piece set is empty")
    if not workers:
        raise GraphError("at least one worker is required")
    if len({w.id for w in workers}) != len(workers):
        raise GraphError("worker ids must be unique")

    splits: dict[frozenset, list] = {}
    dead: set[frozenset] = set()

    def decomposable(subset: frozenset) -> bool:
        if len(subset) == 1:
            return True
        if subset in splits:
            return True
        if subset in dead:
            return False
        good = []
        for left, right in _bipartitions(subset):
            a, b = sorted((left, right), key=node_id_for)
            if not feasible_splits(subset, (a, b)):
                continue
            if decomposable(a) and decomposable(b):
                good.append((a, b))
        if good:
            splits[subset] = sorted(good, key=lambda ab: (node_id_for(ab[0]), node_id_for(ab[1])))
            return True
        dead.add(subset)
        return False

    if not decomposable(piece_set):
        blockers = sorted(dead, key=lambda s: (len(s), node_id_for(s)))
        raise GraphError(
            f"no full decomposition exists: sub-assembly {node_id_for(blockers[0])!r} "
            "admits no feasible split"
        )

    # collect nodes reachable from the root through kept splits
    reachable: set[frozenset] = set()
    frontier = [piece_set]
    while frontier:
        subset = frontier.pop()
        if subset in reachable:
            continue
        reachable.add(subset)
        for a, b in splits.get(subset, ()):
            frontier.extend((a, b))

    nodes: dict[str, Node] = {}
    for subset in sorted(reachable, key=lambda s: (-len(s), node_id_for(s))):
        nid = node_id_for(subset)
        if subset == piece_set:
            kind = "root"
        elif len(subset) == 1:
            kind = "leaf"
        else:
            kind = "internal"
        nodes[nid] = Node(id=nid, pieces=subset, kind=kind)

    arcs: dict[str, HyperArc] = {}
    counter = 0
    for subset in sorted(reachable, key=lambda s: (-len(s), node_id_for(s))):
        for a, b in splits.get(subset, ()):
            if action_namer is not None:
                action = action_namer(subset, a, b)
            else:
                action = f"asm:{node_id_for(a)}|{node_id_for(b)}"
            for w in workers:
                arc_id = f"h{counter:05d}"
                counter += 1
                arcs[arc_id] = HyperArc(
                    id=arc_id,
                    parent=node_id_for(subset),
                    children=(node_id_for(a), node_id_for(b)),
                    action=action,
                    worker=w.id,
                )
    return AOG(pieces=piece_set, workers=tuple(workers), nodes=nodes, arcs=arcs)


def linear_workers(n_workers: int) -> tuple:
    """Worker roster for generated benchmark graphs: one human plus robots."""
    return tuple(
        Worker(id=f"w{i:02d}", kind="human" if i == 0 else "robot")
        for i in range(n_workers)
    )


def generate_linear_assembly(n_pieces: int, n_workers: int) -> AOG:
    """Chain-interconnection family: piece i mates only with piece i+1.

    Sub-assemblies are exactly the contiguous intervals, so a graph over n
    pieces has n(n+1)/2 nodes and, per worker, sum(m*(n-m) for m in 1..n-1)
    hyper-arcs.
    """
    if n_pieces < 1:
        raise GraphError("need at least one piece")
    if n_workers < 1:
        raise GraphError("need at least one worker")
    pieces = [f"p{i:02d}" for i in range(1, n_pieces + 1)]
    workers = linear_workers(n_workers)

    def interval_id(i: int, j: int) -> str:
        return node_id_for(pieces[i:j])

    nodes: dict[str, Node] = {}
    full = frozenset(pieces)
    for length in range(n_pieces, 0, -1):
        for i in range(0, n_pieces - length + 1):
            subset = frozenset(pieces[i : i + length])
            nid = interval_id(i, i + length)
            if length == n_pieces:
                kind = "root"
            elif length == 1:
                kind = "leaf"
            else:
                kind = "internal"
            nodes[nid] = Node(id=nid, pieces=subset, kind=kind)

    arcs: dict[str, HyperArc] = {}
    counter = 0
    for length in range(n_pieces, 1, -1):
        for i in range(0, n_pieces - length + 1):
            parent = interval_id(i, i + length)
            for k in range(i + 1, i + length):
                action = f"j{k:02d}"  # mate pieces k and k+1
                children = (interval_id(i, k), interval_id(k, i + length))
                for w in workers:
                    arc_id = f"h{counter:05d}"
                    counter += 1
                    arcs[arc_id] = HyperArc(
                        id=arc_id,
                        parent=parent,
                        children=children,
                        action=action,
                        worker=w.id,
                    )
    return AOG(pieces=full, workers=workers, nodes=nodes, arcs=arcs)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    rule: str
    subject: str
    detail: str


def validate(graph: AOG) -> list:
    """Report every invariant violation; an empty list means the graph is valid."""
    out: list[Violation] = []

    seen_pieces: dict[frozenset, str] = {}
    for node in graph.nodes.values():
        if not node.pieces:
            out.append(Violation("node-pieces-empty", node.id, "node has an empty piece set"))
        if not node.pieces <= graph.pieces:
            out.append(
                Violation("node-pieces-unknown", node.id, "node references pieces outside the graph")
            )
        if node.pieces in seen_pieces:
            out.append(
                Violation(
                    "node-pieces-duplicate",
                    node.id,
                    f"same piece set as node {seen_pieces[node.pieces]!r}",
                )
            )
        else:
            seen_pieces[node.pieces] = node.id

    roots = graph._root_candidates
    if len(roots) != 1:
        out.append(
            Violation("unique-root", ",".join(sorted(roots)) or "-", f"{len(roots)} parentless nodes")
        )
    else:
        root = graph.nodes[roots[0]]
        if root.pieces != graph.pieces:
            out.append(
                Violation("root-pieces", root.id, "root piece set differs from the full piece set")
            )

    for node in graph.nodes.values():
        arcs_in = graph.arcs_into(node.id)
        if len(node.pieces) == 1 and arcs_in:
            out.append(
                Violation("leaf-no-arcs", node.id, f"leaf has {len(arcs_in)} incoming hyper-arcs")
            )
        if len(node.pieces) > 1 and not arcs_in:
            out.append(Violation("nonleaf-has-arcs", node.id, "internal node has no hyper-arc"))

    worker_ids = [w.id for w in graph.workers]
    groups: dict[tuple, list] = {}
    for arc in graph.arcs.values():
        subjects_ok = True
        if arc.parent not in graph.nodes:
            out.append(Violation("arc-parent", arc.id, f"unknown parent {arc.parent!r}"))
            subjects_ok = False
        for c in arc.children:
            if c not in graph.nodes:
                out.append(Violation("arc-child", arc.id, f"unknown child {c!r}"))
                subjects_ok = False
        if arc.worker not in graph._workers_by_id:
            out.append(Violation("arc-worker", arc.id, f"unknown worker {arc.worker!r}"))
        if arc.cost is not None and arc.cost < 0:
            out.append(Violation("arc-cost", arc.id, f"negative cost {arc.cost}"))
        if not subjects_ok:
            continue
        c1, c2 = (graph.nodes[c] for c in arc.children)
        parent = graph.nodes[arc.parent]
        if c1.pieces & c2.pieces:
            out.append(Violation("arc-children-disjoint", arc.id, "children share pieces"))
        if c1.pieces | c2.pieces != parent.pieces:
            out.append(
                Violation("arc-children-union", arc.id, "children do not partition the parent")
            )
        key = (arc.parent, tuple(sorted(arc.children)), arc.action)
        groups.setdefault(key, []).append(arc.worker)

    for (parent, children, action), ws in sorted(groups.items()):
        if sorted(ws) != sorted(worker_ids):
            out.append(
                Violation(
                    "worker-duplication",
                    f"{parent}<-{'&'.join(children)}@{action}",
                    f"workers {sorted(ws)} != roster {sorted(worker_ids)}",
                )
            )

    # cycle check over parent -> child edges (redundant when piece-set
    # containment holds, but catches corrupt hand-written files)
    indeg = {n: 0 for n in graph.nodes}
    adj: dict[str, list] = {n: [] for n in graph.nodes}
    for arc in graph.arcs.values():
        if arc.parent in graph.nodes and all(c in graph.nodes for c in arc.children):
            for c in arc.children:
                adj[arc.parent].append(c)
                indeg[c] += 1
    queue = [n for n, d in indeg.items() if d == 0]
    visited = 0
    while queue:
        n = queue.pop()
        visited += 1
        for c in adj[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if visited != len(graph.nodes):
        cyclic = sorted(n for n, d in indeg.items() if d > 0)
        out.append(Violation("acyclic", ",".join(cyclic), "graph contains a cycle"))

    return out


# ---------------------------------------------------------------------------
# serialization
#
# {pieces:[...], workers:[{id,kind}], nodes:[{id,pieces}], arcs:[{id,parent,
#  children:[2],action,worker,cost|null}]} -- load/save round-trips byte-stable.


def graph_to_dict(graph: AOG) -> dict:
    return {
        "pieces": sorted(graph.pieces),
        "workers": [{"id": w.id, "kind": w.kind} for w in sorted(graph.workers, key=lambda w: w.id)],
        "nodes": [
            {"id": n.id, "pieces": sorted(n.pieces)}
            for n in sorted(graph.nodes.values(), key=lambda n: n.id)
        ],
        "arcs": [
            {
                "id": a.id,
                "parent": a.parent,
                "children": list(a.children),
                "action": a.action,
                "worker": a.worker,
                "cost": a.cost,
            }
            for a in sorted(graph.arcs.values(), key=lambda a: a.id)
        ],
    }


def graph_from_dict(data: Mapping) -> AOG:
    """Parse the wire shape; semantic problems are left for validate()."""
    try:
        pieces = frozenset(str(p) for p in data["pieces"])
        workers = tuple(Worker(id=str(w["id"]), kind=str(w["kind"])) for w in data["workers"])
        nodes: dict[str, Node] = {}
        child_ids = {str(c) for a in data["arcs"] for c in a["children"]}
        for nd in data["nodes"]:
            nid = str(nd["id"])
            if nid in nodes:
                raise GraphError(f"duplicate node id {nid!r}")
            subset = frozenset(str(p) for p in nd["pieces"])
            if subset == pieces and nid not in child_ids:
                kind = "root"
            elif len(subset) == 1:
                kind = "leaf"
            else:
                kind = "internal"
            nodes[nid] = Node(id=nid, pieces=subset, kind=kind)
        arcs: dict[str, HyperArc] = {}
        for ad in data["arcs"]:
            aid = str(ad["id"])
            if aid in arcs:
                raise GraphError(f"duplicate arc id {aid!r}")
            children = tuple(str(c) for c in ad["children"])
            if len(children) != 2:
                raise GraphError(f"arc {aid!r} must have exactly two children")
            cost = ad.get("cost")
            arcs[aid] = HyperArc(
                id=aid,
                parent=str(ad["parent"]),
                children=children,
                action=str(ad["action"]),
                worker=str(ad["worker"]),
                cost=None if cost is None else float(cost),
            )
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph record: {exc!r}") from exc
    return AOG(pieces=pieces, workers=workers, nodes=nodes, arcs=arcs)


def save_graph(graph: AOG, path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(graph), indent=2, sort_keys=True) + "\n")


def load_graph(path) -> AOG:
    return graph_from_dict(json.loads(Path(path).read_text()))
