/**
 * Canvas line charts for the telemetry history.
 *
 * chartPoints() is the pure geometry (tested); drawChart() paints it.
 * The temperature chart always shows the two operational guide lines:
 * 25 C (expected fan-on steady state) and 40 C (overheat alarm).
 */

import type { SamplePoint } from "./model.js";

export interface ChartGeometry {
  width: number;
  height: number;
  yMin: number;
  yMax: number;
  points: { x: number; y: number }[];
  guides: { value: number; y: number }[];
}

export const TEMP_GUIDES_C = [25, 40];

export function chartPoints(
  series: SamplePoint[],
  width: number,
  height: number,
  opts: { yMin?: number; yMax?: number; guides?: number[]; windowS?: number } = {},
): ChartGeometry {
  const guides = opts.guides ?? [];
  const values = series.map((p) => p.value).concat(guides);
  let yMin = opts.yMin ?? Math.min(...(values.length ? values : [0]));
  let yMax = opts.yMax ?? Math.max(...(values.length ? values : [1]));
  if (yMax - yMin < 1e-9) {
    yMax = yMin + 1;
  }
  const pad = (yMax - yMin) * 0.08;
  yMin -= pad;
  yMax += pad;

  const tEnd = series.length ? series[series.length - 1]!.t : 0;
  const windowS = opts.windowS ?? 600;
  const tStart = tEnd - windowS;
  const toX = (t: number) => ((t - tStart) / windowS) * width;
  const toY = (v: number) => height - ((v - yMin) / (yMax - yMin)) * height;

  return {
    width,
    height,
    yMin,
    yMax,
    points: series.map((p) => ({ x: toX(p.t), y: toY(p.value) })),
    guides: guides.map((g) => ({ value: g, y: toY(g) })),
  };
}

export function drawChart(
  canvas: HTMLCanvasElement,
  series: SamplePoint[],
  color: string,
  opts: { yMin?: number; yMax?: number; guides?: number[]; label?: string } = {},
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  const geo = chartPoints(series, width, height, opts);

  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, width, height);

  for (const guide of geo.guides) {
    ctx.strokeStyle = "#aa5555";
    ctx.setLineDash([5, 4]);
    ctx.beginPath();
    ctx.moveTo(0, guide.y);
    ctx.lineTo(width, guide.y);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#cc8888";
    ctx.font = "10px sans-serif";
    ctx.fillText(String(guide.value), 4, guide.y - 3);
  }

  if (geo.points.length > 1) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    geo.points.forEach((p, i) => (i ? ctx.lineTo(p.x, p.y) : ctx.moveTo(p.x, p.y)));
    ctx.stroke();
  }

  if (opts.label) {
    ctx.fillStyle = "#8899aa";
    ctx.font = "11px sans-serif";
    ctx.fillText(opts.label, 6, 13);
  }
}
