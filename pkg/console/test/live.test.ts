/**
 * Round trip against a live engine: boots the real kiosk process with a
 * four-face synthetic source, then drives it exactly the way the UI
 * does (client functions + view model), asserting the SECONDARY
 * acceptance behavior: sleep/wake land in /health within two poll
 * periods and the preview overlay shows one rectangle per occupied
 * slot.
 */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { fetchConfig, fetchHealth, sendCommand } from "../src/client.js";
import { applyHealth, initialModel } from "../src/model.js";
import { overlayRects } from "../src/overlay.js";

const REPO = resolve(__dirname, "..", "..");
const CASCADE = join(REPO, "tests", "fixtures", "cascades",
  "haarcascade_frontalface_default.xml");
const POLL_MS = 500;

let child: ChildProcess;
let base = "";

function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

async function pollUntil<T>(
  fn: () => Promise<T>,
  pred: (v: T) => boolean,
  timeoutMs: number,
  stepMs = POLL_MS,
): Promise<T> {
  const t0 = Date.now();
  let last: T;
  for (;;) {
    last = await fn();
    if (pred(last)) return last;
    if (Date.now() - t0 > timeoutMs) return last;
    await sleep(stepMs);
  }
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "console-live-"));
  const config = join(dir, "config.json");
  writeFileSync(config, JSON.stringify({
    cascade: CASCADE,
    control: { enabled: true, port: 0 },
    snow: { seed: 5 },
  }));

  child = spawn(
    "python3",
    ["-m", "snowframe.cli", "--config", config, "--headless", "--sink", "null",
     "--source", "synthetic", "--synthetic-faces", "4"],
    { cwd: REPO, env: { ...process.env, NUMBA_THREADING_LAYER: "omp" } },
  );

  base = await new Promise<string>((resolvePort, reject) => {
    let buffer = "";
    const onData = (chunk: Buffer) => {
      buffer += chunk.toString();
      const m = buffer.match(/control API listening on port (\d+)/);
      if (m) resolvePort(`http://127.0.0.1:${m[1]}`);
    };
    child.stderr!.on("data", onData);
    child.on("exit", (code) =>
      reject(new Error(`engine exited early (${code}): ${buffer}`)));
    setTimeout(() => reject(new Error(`no control port in: ${buffer}`)), 30_000);
  });

  // engine warm-up: JIT compile + first detections
  await pollUntil(
    () => fetchHealth(base),
    (h) => h.state === "running" && h.frames_composited > 0,
    30_000,
  );
}, 70_000);

afterAll(async () => {
  if (child && child.exitCode === null) {
    child.kill("SIGTERM");
    await new Promise((r) => child.on("exit", r));
  }
});

describe("console against a live engine", () => {
  it("sleep and wake reach /health within two poll periods", async () => {
    const sleepResult = await sendCommand(base, "sleep");
    expect(sleepResult.state).toBe("sleeping");

    let m = initialModel();
    let polls = 0;
    while (polls < 2) {
      await sleep(POLL_MS);
      m = applyHealth(m, await fetchHealth(base), polls);
      polls += 1;
      if (m.latest!.state === "sleeping") break;
    }
    expect(polls).toBeLessThanOrEqual(2);
    expect(m.latest!.state).toBe("sleeping");

    const wakeResult = await sendCommand(base, "wake");
    expect(wakeResult.state).toBe("running");
    polls = 0;
    while (polls < 2) {
      await sleep(POLL_MS);
      m = applyHealth(m, await fetchHealth(base), 10 + polls);
      polls += 1;
      if (m.latest!.state === "running") break;
    }
    expect(m.latest!.state).toBe("running");

    const again = await sendCommand(base, "wake");
    expect(again).toEqual({ state: "running", noop: true });
  }, 30_000);

  it("preview overlays one rectangle per occupied slot (4-face source)", async () => {
    const health = await pollUntil(
      () => fetchHealth(base),
      (h) => h.face_count === 4,
      60_000,
    );
    expect(health.face_count).toBe(4);
    expect(health.slot_occupancy).toEqual([true, true, true, true]);

    const config = await fetchConfig(base);
    const camera = { width: config.capture.width, height: config.capture.height };
    const display = { width: 640, height: 360 };
    const rects = overlayRects(health, camera, display);
    expect(rects.length).toBe(4);
    expect(new Set(rects.map((r) => r.color)).size).toBe(4);
    for (const r of rects) {
      expect(r.x).toBeGreaterThanOrEqual(0);
      expect(r.y).toBeGreaterThanOrEqual(0);
      expect(r.x + r.w).toBeLessThanOrEqual(display.width + 1e-9);
      expect(r.y + r.h).toBeLessThanOrEqual(display.height + 1e-9);
    }

    const png = await fetch(`${base}/camera.png`);
    expect(png.status).toBe(200);
    expect(png.headers.get("content-type")).toBe("image/png");
  }, 90_000);

  it("polling a stopped endpoint degrades without clearing history", async () => {
    let m = initialModel();
    m = applyHealth(m, await fetchHealth(base), 0);
    const kept = m.tempHistory.length;
    try {
      await fetchHealth("http://127.0.0.1:1"); // nothing listens there
      throw new Error("unreachable endpoint unexpectedly answered");
    } catch {
      m = { ...m, connection: "degraded", consecutiveFailures: m.consecutiveFailures + 1 };
    }
    expect(m.connection).toBe("degraded");
    expect(m.tempHistory.length).toBe(kept);
  }, 20_000);
});
