// Wire types for the live session protocol, mirroring the server's snapshot
// schema (version 1). validateFrame is the runtime gate: every incoming
// frame passes through it before the view model will accept it.

export interface VariableEntry {
  id: number;
  label: string;
  mean: number[];
  cov: number[][];
  gt?: number[];
}

export interface FactorEntry {
  id: number;
  var_ids: number[];
  kind: string;
  robust_class?: string;
  m_est?: number;
  m_gt?: number;
}

export interface BatchEntry {
  id: number;
  mean: number[];
  cov: number[][];
}

export interface SnapshotFrame {
  type: "snapshot";
  schema_version: number;
  iteration: number;
  seed: number;
  variables: VariableEntry[];
  factors: FactorEntry[];
  metrics: Record<string, number>;
  batch?: BatchEntry[];
}

export interface AckFrame {
  type: "ack";
  cmd: Record<string, unknown>;
  iteration: number;
}

export interface ErrorFrame {
  type: "error";
  detail: string;
}

export type ServerFrame = SnapshotFrame | AckFrame | ErrorFrame;

export const ROBUST_CLASSES = ["grey", "white", "red", "yellow"];

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function isVector(x: unknown): x is number[] {
  return Array.isArray(x) && x.length > 0 && x.every(isFiniteNumber);
}

function isSquareMatrix(x: unknown, dim: number): x is number[][] {
  return (
    Array.isArray(x) &&
    x.length === dim &&
    x.every((row) => Array.isArray(row) && row.length === dim && row.every(isFiniteNumber))
  );
}

/**
 * Check one decoded frame against the protocol. Returns null when the frame
 * is well formed, otherwise a human-readable reason (used for the banner).
 */
export function validateFrame(msg: unknown): string | null {
  if (typeof msg !== "object" || msg === null) {
    return "frame is not an object";
  }
  const frame = msg as Record<string, unknown>;
  if (frame.type === "ack") {
    if (typeof frame.cmd !== "object" || frame.cmd === null) return "ack without cmd";
    if (!isFiniteNumber(frame.iteration)) return "ack without iteration";
    return null;
  }
  if (frame.type === "error") {
    return typeof frame.detail === "string" ? null : "error frame without detail";
  }
  if (frame.type !== "snapshot") {
    return `unknown frame type ${String(frame.type)}`;
  }
  if (frame.schema_version !== 1) return "unsupported schema_version";
  if (!Number.isInteger(frame.iteration)) return "iteration must be an integer";
  if (!Number.isInteger(frame.seed)) return "seed must be an integer";
  if (!Array.isArray(frame.variables)) return "variables must be a list";
  const ids = new Set<number>();
  for (const v of frame.variables as unknown[]) {
    const entry = v as Record<string, unknown>;
    if (!Number.isInteger(entry.id)) return "variable without integer id";
    if (typeof entry.label !== "string") return "variable without label";
    if (!isVector(entry.mean)) return `variable ${entry.id}: bad mean`;
    if (!isSquareMatrix(entry.cov, (entry.mean as number[]).length)) {
      return `variable ${entry.id}: cov shape does not match mean`;
    }
    if (entry.gt !== undefined && !isVector(entry.gt)) {
      return `variable ${entry.id}: bad gt`;
    }
    ids.add(entry.id as number);
  }
  if (!Array.isArray(frame.factors)) return "factors must be a list";
  for (const f of frame.factors as unknown[]) {
    const entry = f as Record<string, unknown>;
    if (!Number.isInteger(entry.id)) return "factor without integer id";
    if (typeof entry.kind !== "string") return "factor without kind";
    if (!Array.isArray(entry.var_ids) || entry.var_ids.length === 0) {
      return `factor ${entry.id}: bad var_ids`;
    }
    for (const vid of entry.var_ids as unknown[]) {
      if (!ids.has(vid as number)) return `factor ${entry.id}: unknown variable ${vid}`;
    }
    if (entry.robust_class !== undefined) {
      if (!ROBUST_CLASSES.includes(entry.robust_class as string)) {
        return `factor ${entry.id}: bad robust_class`;
      }
      if (!isFiniteNumber(entry.m_est) || !isFiniteNumber(entry.m_gt)) {
        return `factor ${entry.id}: robust_class without m_est/m_gt`;
      }
    }
  }
  if (typeof frame.metrics !== "object" || frame.metrics === null) {
    return "metrics must be an object";
  }
  if (frame.batch !== undefined) {
    if (!Array.isArray(frame.batch)) return "batch must be a list";
    for (const b of frame.batch as unknown[]) {
      const entry = b as Record<string, unknown>;
      if (!ids.has(entry.id as number)) return `batch entry for unknown variable ${entry.id}`;
      if (!isVector(entry.mean)) return `batch ${entry.id}: bad mean`;
    }
  }
  return null;
}
