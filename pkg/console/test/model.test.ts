import { describe, expect, it } from "vitest";
import {
  applyCommandError,
  applyCommandResult,
  applyCommandStart,
  applyFailure,
  applyHealth,
  initialModel,
  nextPollDelayMs,
} from "../src/model.js";
import type { HealthReport } from "../src/types.js";
import thermalTrace from "./fixtures/thermal_fanoff.json";

function health(overrides: Partial<HealthReport> = {}): HealthReport {
  return {
    state: "running",
    fps_out: 60,
    detect_hz: 10,
    temp_c: 25,
    fan: true,
    face_count: 0,
    slot_occupancy: [false, false, false, false],
    slots: [null, null, null, null],
    uptime_s: 1,
    frames_dropped: 0,
    frames_composited: 60,
    captures_consumed: 30,
    last_frame_at: null,
    fault_reason: null,
    engine_version: "0.1.0",
    config_hash: "0000000000000000",
    ...overrides,
  };
}

describe("view model", () => {
  it("appends history in time order and keeps it capped", () => {
    let m = initialModel();
    for (let t = 0; t < 700; t++) {
      m = applyHealth(m, health({ temp_c: 20 + t / 100 }), t, 600);
    }
    const ts = m.tempHistory.map((p) => p.t);
    expect(ts).toEqual([...ts].sort((a, b) => a - b));
    expect(ts[0]).toBeGreaterThanOrEqual(699 - 600);
    expect(m.connection).toBe("healthy");
    expect(m.latest?.temp_c).toBeCloseTo(26.99);
  });

  it("ignores out-of-order samples instead of corrupting the buffer", () => {
    let m = initialModel();
    m = applyHealth(m, health(), 10);
    m = applyHealth(m, health(), 5);
    expect(m.tempHistory.length).toBe(1);
  });

  it("keeps history on failure and flips to degraded", () => {
    let m = initialModel();
    m = applyHealth(m, health(), 0);
    m = applyHealth(m, health(), 1);
    const kept = m.tempHistory;
    m = applyFailure(m);
    m = applyFailure(m);
    expect(m.connection).toBe("degraded");
    expect(m.consecutiveFailures).toBe(2);
    expect(m.tempHistory).toEqual(kept);
  });

  it("backs off while degraded and resets on success", () => {
    let m = initialModel();
    expect(nextPollDelayMs(m, 1000)).toBe(1000);
    m = applyFailure(m);
    const d1 = nextPollDelayMs(m, 1000);
    m = applyFailure(m);
    const d2 = nextPollDelayMs(m, 1000);
    expect(d1).toBeGreaterThan(1000);
    expect(d2).toBeGreaterThan(d1);
    for (let i = 0; i < 20; i++) m = applyFailure(m);
    expect(nextPollDelayMs(m, 1000)).toBeLessThanOrEqual(10_000);
    m = applyHealth(m, health(), 100);
    expect(nextPollDelayMs(m, 1000)).toBe(1000);
  });

  it("tracks pending command state and surfaces no-ops verbatim", () => {
    let m = initialModel();
    m = applyCommandStart(m);
    expect(m.pendingCommand).toBe(true);
    m = applyCommandResult(m, "sleep", "sleeping", false);
    expect(m.pendingCommand).toBe(false);
    expect(m.lastCommandNote).toBe("sleep: engine now sleeping");
    m = applyCommandResult(m, "sleep", "sleeping", true);
    expect(m.lastCommandNote).toBe("sleep: no-op (already sleeping)");
  });

  it("shows fault banners from command failures and faulted health", () => {
    let m = initialModel();
    m = applyCommandError(m, "engine faulted: sink: disk full");
    expect(m.faultBanner).toContain("disk full");
    m = applyHealth(m, health({ state: "faulted", fault_reason: "boom" }), 1);
    expect(m.faultBanner).toBe("boom");
    m = applyHealth(m, health(), 2);
    expect(m.faultBanner).toBeNull();
  });

  it("fan-off thermal replay exceeds the 40 C guide", () => {
    // canned fixture generated by the engine's thermal model
    let m = initialModel();
    (thermalTrace as HealthReport[]).forEach((report, i) => {
      m = applyHealth(m, report, i * 60, 36_000);
    });
    const maxTemp = Math.max(...m.tempHistory.map((p) => p.value));
    expect(maxTemp).toBeGreaterThan(40);
  });
});
