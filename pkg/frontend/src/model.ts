// Pure view-models: server bodies in, panel data out. Band thresholds always
// come from the session config the server returned, never from constants.

import {
  JOINTS,
  SessionEvent,
  SessionStateBody,
  Suggestion,
  WorkerInfo,
} from "./types.js";

export type Band = "low" | "medium" | "high";

// Mirrors the server's band boundaries: equality at the lower threshold is
// still low, equality at the upper one is already high.
export function bandOf(value: number, th1: number, th2: number): Band {
  if (value >= th2) return "high";
  if (value > th1) return "medium";
  return "low";
}

export interface Gauge {
  joint: string;
  value: number;
  band: Band;
  th1: number;
  th2: number;
}

export function gaugeModel(state: SessionStateBody): Gauge[] {
  const { v_th1, v_th2 } = state.config;
  return JOINTS.map((joint) => {
    const value = state.wear[joint];
    return { joint, value, band: bandOf(value, v_th1, v_th2), th1: v_th1, th2: v_th2 };
  });
}

export interface AllocationView {
  suggestion: Suggestion | null;
  complete: boolean;
  planCost: number | null;
  clock: number;
  workers: WorkerInfo[];
  plannedActions: string[];
}

export function allocationModel(state: SessionStateBody): AllocationView {
  return {
    suggestion: state.suggestion,
    complete: state.complete,
    planCost: state.plan ? state.plan.total_cost : null,
    clock: state.clock,
    workers: state.workers,
    plannedActions: state.plan ? state.plan.steps.map((s) => s.action) : [],
  };
}

export interface TimelinePoint {
  t: number;
  value: number;
}

export interface TimelineInterval {
  t0: number;
  t1: number;
  action: string;
  worker: string;
  mode: "charge" | "decay"; // human actions charge wear, robot actions let it decay
}

export interface TimelineView {
  series: Record<string, TimelinePoint[]>;
  intervals: TimelineInterval[];
  tEnd: number;
}

export function timelineModel(events: SessionEvent[], workers: WorkerInfo[]): TimelineView {
  const kinds = new Map(workers.map((w) => [w.id, w.kind]));
  const series: Record<string, TimelinePoint[]> = {};
  for (const joint of JOINTS) series[joint] = [];
  const intervals: TimelineInterval[] = [];
  let tEnd = 0;
  for (const event of events) {
    tEnd = Math.max(tEnd, event.t);
    if (event.kind === "start") {
      const values: number[] = event.payload.initial_wear.values;
      JOINTS.forEach((joint, i) => series[joint].push({ t: 0, value: values[i] }));
    } else if (event.kind === "wear") {
      const values: number[] = event.payload.values;
      JOINTS.forEach((joint, i) => series[joint].push({ t: event.t, value: values[i] }));
    } else if (event.kind === "completion") {
      const duration: number = event.payload.duration_s;
      intervals.push({
        t0: event.t - duration,
        t1: event.t,
        action: event.payload.action,
        worker: event.payload.worker,
        mode: kinds.get(event.payload.worker) === "human" ? "charge" : "decay",
      });
    }
  }
  return { series, intervals, tEnd };
}

export interface TreeNode {
  id: string;
  label: string;
  children: TreeNode[];
}

// Assembly progress as a collapsing tree: one entry per built sub-assembly,
// expanding to the atomic pieces it contains.
export function progressTree(state: SessionStateBody): TreeNode[] {
  const piecesOf = new Map(state.nodes.map((n) => [n.id, n.pieces]));
  return [...state.solved].sort().map((id) => {
    const pieces = piecesOf.get(id) ?? [];
    return {
      id,
      label: `${id} (${pieces.length} piece${pieces.length === 1 ? "" : "s"})`,
      children: pieces.map((p) => ({ id: p, label: p, children: [] })),
    };
  });
}
