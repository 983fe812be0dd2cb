/**
 * DOM wiring. Everything rendered derives from the ConsoleViewModel;
 * commands fire only on button clicks.
 */

import { HealthPoller, fetchConfig, sendCommand, ApiError } from "./client.js";
import { drawChart, TEMP_GUIDES_C } from "./charts.js";
import {
  ConsoleViewModel,
  applyCommandError,
  applyCommandResult,
  applyCommandStart,
  applyFailure,
  applyHealth,
  initialModel,
  nextPollDelayMs,
} from "./model.js";
import { overlayRects } from "./overlay.js";

const BASE = "";
const POLL_MS = 1000;
const PREVIEW_MS = 500; // 2 Hz snapshot refresh

let model: ConsoleViewModel = initialModel();
let cameraSize = { width: 1920, height: 1080 };
const t0 = Date.now();

const $ = <T extends HTMLElement>(id: string) =>
  document.getElementById(id) as T;

function render(): void {
  const badge = $("state-badge");
  const state = model.latest?.state ?? "unknown";
  badge.textContent = state;
  badge.className = `badge badge-${state}`;

  $("connection").textContent =
    model.connection === "degraded"
      ? `connection degraded (retry ${model.consecutiveFailures})`
      : model.connection;
  $("connection").className =
    model.connection === "degraded" ? "banner degraded" : "banner";

  const fault = $("fault-banner");
  fault.hidden = !model.faultBanner;
  fault.textContent = model.faultBanner ?? "";

  const h = model.latest;
  $("stats").textContent = h
    ? `fps ${h.fps_out.toFixed(1)} | detect ${h.detect_hz.toFixed(1)} Hz | ` +
      `temp ${h.temp_c.toFixed(1)} C (fan ${h.fan ? "on" : "off"}) | ` +
      `faces ${h.face_count} | dropped ${h.frames_dropped} | ` +
      `up ${Math.floor(h.uptime_s)}s | v${h.engine_version}`
    : "waiting for first health report";

  ($("sleep-btn") as HTMLButtonElement).disabled =
    model.pendingCommand || model.connection !== "healthy";
  ($("wake-btn") as HTMLButtonElement).disabled =
    model.pendingCommand || model.connection !== "healthy";
  $("command-note").textContent = model.lastCommandNote ?? "";

  drawChart($("temp-chart") as HTMLCanvasElement, model.tempHistory, "#4fc3f7", {
    guides: TEMP_GUIDES_C,
    yMin: 15,
    yMax: 50,
    label: "temperature C",
  });
  drawChart($("fps-chart") as HTMLCanvasElement, model.fpsHistory, "#aed581", {
    yMin: 0,
    label: "output fps",
  });
  drawChart($("face-chart") as HTMLCanvasElement, model.faceHistory, "#ffb74d", {
    yMin: 0,
    yMax: 4,
    label: "faces",
  });

  drawOverlay();
}

function drawOverlay(): void {
  const canvas = $("overlay") as HTMLCanvasElement;
  const img = $("preview") as HTMLImageElement;
  canvas.width = img.clientWidth || 640;
  canvas.height = img.clientHeight || 360;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const rects = overlayRects(model.latest, cameraSize, {
    width: canvas.width,
    height: canvas.height,
  });
  for (const r of rects) {
    ctx.strokeStyle = r.color;
    ctx.lineWidth = 2;
    ctx.strokeRect(r.x, r.y, r.w, r.h);
    ctx.fillStyle = r.color;
    ctx.font = "12px sans-serif";
    ctx.fillText(`slot ${r.slot}`, r.x + 3, r.y + 14);
  }
}

function refreshPreview(): void {
  const img = $("preview") as HTMLImageElement;
  const probe = new Image();
  probe.onload = () => {
    img.src = probe.src;
    img.hidden = false;
    $("preview-placeholder").hidden = true;
    drawOverlay();
  };
  probe.onerror = () => {
    img.hidden = true;
    $("preview-placeholder").hidden = false;
  };
  probe.src = `${BASE}/camera.png?t=${Date.now()}`;
}

async function command(kind: "sleep" | "wake"): Promise<void> {
  model = applyCommandStart(model);
  render();
  try {
    const result = await sendCommand(BASE, kind);
    model = applyCommandResult(model, kind, result.state, result.noop);
  } catch (err) {
    const reason =
      err instanceof ApiError && err.faultReason
        ? `engine faulted: ${err.faultReason}`
        : `command failed: ${String(err)}`;
    model = applyCommandError(model, reason);
  }
  render();
}

export function boot(): void {
  $("sleep-btn").addEventListener("click", () => void command("sleep"));
  $("wake-btn").addEventListener("click", () => void command("wake"));

  void fetchConfig(BASE)
    .then((cfg) => {
      cameraSize = { width: cfg.capture.width, height: cfg.capture.height };
    })
    .catch(() => undefined);

  const poller = new HealthPoller(
    BASE,
    POLL_MS,
    (report) => {
      model = applyHealth(model, report, (Date.now() - t0) / 1000);
      render();
    },
    () => {
      model = applyFailure(model);
      render();
      return nextPollDelayMs(model, POLL_MS);
    },
  );
  poller.start();

  refreshPreview();
  setInterval(refreshPreview, PREVIEW_MS);
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
