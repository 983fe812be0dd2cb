/**
 * Console view model: the single source every render reads from.
 *
 * Health samples append to rolling history buffers capped to a time
 * window (10 minutes at the default 1 Hz poll); request failures flip
 * the connection to degraded without touching history.
 */

import type { HealthReport } from "./types.js";

export const HISTORY_WINDOW_S = 600;

export interface SamplePoint {
  t: number; // seconds, monotonic poll clock
  value: number;
}

export type ConnectionStatus = "connecting" | "healthy" | "degraded";

export interface ConsoleViewModel {
  latest: HealthReport | null;
  tempHistory: SamplePoint[];
  fpsHistory: SamplePoint[];
  faceHistory: SamplePoint[];
  connection: ConnectionStatus;
  consecutiveFailures: number;
  pendingCommand: boolean;
  lastCommandNote: string | null;
  faultBanner: string | null;
}

export function initialModel(): ConsoleViewModel {
  return {
    latest: null,
    tempHistory: [],
    fpsHistory: [],
    faceHistory: [],
    connection: "connecting",
    consecutiveFailures: 0,
    pendingCommand: false,
    lastCommandNote: null,
    faultBanner: null,
  };
}

function pushCapped(
  history: SamplePoint[],
  point: SamplePoint,
  windowS: number,
): SamplePoint[] {
  const out = history.length && history[history.length - 1]!.t >= point.t
    ? history.slice() // ignore clock weirdness: never append out of order
    : [...history, point];
  const horizon = point.t - windowS;
  let start = 0;
  while (start < out.length && out[start]!.t < horizon) start++;
  return start ? out.slice(start) : out;
}

export function applyHealth(
  model: ConsoleViewModel,
  report: HealthReport,
  t: number,
  windowS: number = HISTORY_WINDOW_S,
): ConsoleViewModel {
  return {
    ...model,
    latest: report,
    tempHistory: pushCapped(model.tempHistory, { t, value: report.temp_c }, windowS),
    fpsHistory: pushCapped(model.fpsHistory, { t, value: report.fps_out }, windowS),
    faceHistory: pushCapped(model.faceHistory, { t, value: report.face_count }, windowS),
    connection: "healthy",
    consecutiveFailures: 0,
    faultBanner: report.state === "faulted"
      ? (report.fault_reason ?? "engine faulted")
      : null,
  };
}

export function applyFailure(model: ConsoleViewModel): ConsoleViewModel {
  // History is retained on purpose: a degraded link must not erase the
  // operator's picture of the recent past.
  return {
    ...model,
    connection: "degraded",
    consecutiveFailures: model.consecutiveFailures + 1,
  };
}

export function applyCommandStart(model: ConsoleViewModel): ConsoleViewModel {
  return { ...model, pendingCommand: true, lastCommandNote: null };
}

export function applyCommandResult(
  model: ConsoleViewModel,
  command: "sleep" | "wake",
  state: string,
  noop: boolean,
): ConsoleViewModel {
  return {
    ...model,
    pendingCommand: false,
    lastCommandNote: noop
      ? `${command}: no-op (already ${state})`
      : `${command}: engine now ${state}`,
  };
}

export function applyCommandError(
  model: ConsoleViewModel,
  message: string,
): ConsoleViewModel {
  return { ...model, pendingCommand: false, faultBanner: message };
}

/** Poll retry delay with exponential backoff while degraded. */
export function nextPollDelayMs(
  model: ConsoleViewModel,
  cadenceMs: number,
  maxMs = 10_000,
): number {
  if (model.consecutiveFailures === 0) return cadenceMs;
  const backoff = cadenceMs * Math.pow(1.5, model.consecutiveFailures);
  return Math.min(backoff, maxMs);
}
