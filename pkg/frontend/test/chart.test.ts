import { describe, expect, it } from "vitest";

import {
  curveToPoints,
  isMonotoneNonIncreasing,
  pointsAttribute,
} from "../src/chart.js";

describe("curveToPoints", () => {
  it("spans the padded box horizontally", () => {
    const pts = curveToPoints([3, 2, 1], 100, 100, 10);
    expect(pts).toHaveLength(3);
    expect(pts[0].x).toBe(10);
    expect(pts[2].x).toBe(90);
  });

  it("puts the lowest value at the bottom edge and the highest at the top", () => {
    const pts = curveToPoints([5, 1], 100, 100, 10);
    expect(pts[0].y).toBe(10); // max value -> top pad
    expect(pts[1].y).toBe(90); // min value -> bottom pad
  });

  it("handles constant and empty curves", () => {
    expect(curveToPoints([], 100, 100)).toEqual([]);
    const flat = curveToPoints([2, 2], 100, 100, 10);
    expect(flat[0].y).toBe(flat[1].y);
  });
});

describe("pointsAttribute", () => {
  it("formats an SVG polyline points string", () => {
    const s = pointsAttribute([
      { x: 1, y: 2 },
      { x: 3.25, y: 4.5 },
    ]);
    expect(s).toBe("1.0,2.0 3.3,4.5");
  });
});

describe("isMonotoneNonIncreasing", () => {
  it("accepts running minima and rejects regressions", () => {
    expect(isMonotoneNonIncreasing([5, 3, 3, 1])).toBe(true);
    expect(isMonotoneNonIncreasing([5, 3, 4])).toBe(false);
    expect(isMonotoneNonIncreasing([])).toBe(true);
  });
});
