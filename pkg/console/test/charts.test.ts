import { describe, expect, it } from "vitest";
import { chartPoints, TEMP_GUIDES_C } from "../src/charts.js";
import { applyHealth, initialModel } from "../src/model.js";
import type { HealthReport } from "../src/types.js";
import thermalTrace from "./fixtures/thermal_fanoff.json";

describe("chart geometry", () => {
  it("maps values linearly with y inverted", () => {
    const geo = chartPoints(
      [
        { t: 0, value: 0 },
        { t: 600, value: 10 },
      ],
      100,
      100,
      { yMin: 0, yMax: 10, windowS: 600 },
    );
    const [lo, hi] = geo.points;
    expect(lo!.y).toBeGreaterThan(hi!.y); // bigger value is higher on screen
    expect(hi!.x).toBeCloseTo(100);
  });

  it("plots the fan-off thermal fixture above the 40 C guide line", () => {
    let m = initialModel();
    (thermalTrace as HealthReport[]).forEach((r, i) => {
      m = applyHealth(m, r, i * 60, 36_000);
    });
    const geo = chartPoints(m.tempHistory, 420, 120, {
      yMin: 15,
      yMax: 50,
      guides: TEMP_GUIDES_C,
      windowS: 36_000,
    });
    const guide40 = geo.guides.find((g) => g.value === 40)!;
    const highestPlotted = Math.min(...geo.points.map((p) => p.y));
    // screen y grows downward: exceeding 40 C means plotting above the line
    expect(highestPlotted).toBeLessThan(guide40.y);
    const guide25 = geo.guides.find((g) => g.value === 25)!;
    expect(guide25.y).toBeGreaterThan(guide40.y);
  });

  it("degenerate series still produce a usable scale", () => {
    const geo = chartPoints([{ t: 0, value: 5 }], 100, 50, {});
    expect(geo.yMax).toBeGreaterThan(geo.yMin);
    expect(Number.isFinite(geo.points[0]!.y)).toBe(true);
  });
});
