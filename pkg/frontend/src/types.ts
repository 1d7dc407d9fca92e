// Wire types of the session service (protocol v1).

export const JOINTS = ["shoulder", "elbow", "wrist", "trunk", "neck"] as const;
export type Joint = (typeof JOINTS)[number];

export interface WorkerInfo {
  id: string;
  kind: "human" | "robot";
}

export interface Suggestion {
  action: string;
  worker: string;
}

export interface PlanStep {
  action: string;
  worker: string;
  parent: string;
  children: string[];
  cost: number;
}

export interface CostConfigBody {
  gamma_low: number;
  gamma_med: number;
  gamma_high: number;
  v_th1: number;
  v_th2: number;
  robot_cost: number;
  recovery_rate: number;
  capacity: number;
  joint_weights: Record<string, number>;
  monitored_arm: string;
}

export interface SessionStateBody {
  v: number;
  session_id: string;
  complete: boolean;
  clock: number;
  wear: Record<string, number>;
  wear_t: number;
  solved: string[];
  history: { action: string; worker: string; t: number }[];
  suggestion: Suggestion | null;
  plan: { total_cost: number; steps: PlanStep[] } | null;
  config: CostConfigBody;
  workers: WorkerInfo[];
  nodes: { id: string; pieces: string[] }[];
}

export interface SessionEvent {
  v: number;
  t: number;
  kind: "start" | "suggestion" | "completion" | "override" | "wear";
  payload: Record<string, any>;
}

export interface ErrorBody {
  error: { code: string; message: string; details?: unknown };
}
