/** Thin fetch wrappers for the control API; no retained state. */

import type { CommandResponse, EngineConfigView, HealthReport } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
    public readonly faultReason: string | null = null,
  ) {
    super(message);
  }
}

export async function fetchHealth(base: string): Promise<HealthReport> {
  const resp = await fetch(`${base}/health`);
  if (!resp.ok) throw new ApiError(`health returned ${resp.status}`, resp.status);
  return (await resp.json()) as HealthReport;
}

export async function fetchConfig(base: string): Promise<EngineConfigView> {
  const resp = await fetch(`${base}/config`);
  if (!resp.ok) throw new ApiError(`config returned ${resp.status}`, resp.status);
  return (await resp.json()) as EngineConfigView;
}

export async function sendCommand(
  base: string,
  command: "sleep" | "wake",
): Promise<CommandResponse> {
  const resp = await fetch(`${base}/${command}`, { method: "POST" });
  if (resp.status === 503) {
    let reason: string | null = null;
    try {
      reason = ((await resp.json()) as { fault_reason?: string }).fault_reason ?? null;
    } catch {
      /* body may not be JSON */
    }
    throw new ApiError(`engine faulted`, 503, reason);
  }
  if (!resp.ok) throw new ApiError(`${command} returned ${resp.status}`, resp.status);
  return (await resp.json()) as CommandResponse;
}

export interface PollerHooks {
  onModel: (apply: () => void) => void;
}

/**
 * Drives the 1 Hz health poll with exponential backoff while degraded.
 * Pure scheduling: the caller owns the model and rendering.
 */
export class HealthPoller {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private readonly base: string,
    private readonly cadenceMs: number,
    private readonly onReport: (report: HealthReport) => void,
    private readonly onFailure: () => number, // returns next delay ms
  ) {}

  start(): void {
    this.stopped = false;
    void this.tick();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
  }

  private async tick(): Promise<void> {
    if (this.stopped) return;
    let delay = this.cadenceMs;
    try {
      const report = await fetchHealth(this.base);
      this.onReport(report);
    } catch {
      delay = this.onFailure();
    }
    if (!this.stopped) {
      this.timer = setTimeout(() => void this.tick(), delay);
    }
  }
}
