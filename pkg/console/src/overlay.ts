/**
 * Face-rect overlays: health reports carry per-slot rects in camera
 * coordinates; the preview draws them scaled into display coordinates:
 *
 *   display_x = camera_x * display_w / camera_w   (same per axis)
 */

import type { HealthReport } from "./types.js";

export interface OverlayRect {
  slot: number;
  x: number;
  y: number;
  w: number;
  h: number;
  color: string;
}

export const SLOT_COLORS = ["#4fc3f7", "#aed581", "#ffb74d", "#f06292"] as const;

export function scaleRect(
  rect: { x: number; y: number; w: number; h: number },
  cameraSize: { width: number; height: number },
  displaySize: { width: number; height: number },
): { x: number; y: number; w: number; h: number } {
  const sx = displaySize.width / cameraSize.width;
  const sy = displaySize.height / cameraSize.height;
  return {
    x: rect.x * sx,
    y: rect.y * sy,
    w: rect.w * sx,
    h: rect.h * sy,
  };
}

export function overlayRects(
  report: HealthReport | null,
  cameraSize: { width: number; height: number },
  displaySize: { width: number; height: number },
): OverlayRect[] {
  if (!report) return [];
  const out: OverlayRect[] = [];
  report.slots.forEach((slot, i) => {
    if (!slot) return;
    const scaled = scaleRect(slot, cameraSize, displaySize);
    out.push({ slot: i, ...scaled, color: SLOT_COLORS[i % 4]! });
  });
  return out;
}
