import { describe, expect, it } from "vitest";

import { colorAt, gridToRgba, normalizeGrid } from "../src/colormap.js";

describe("colorAt", () => {
  it("maps 0 and 1 to the scale endpoints", () => {
    expect(colorAt(0)).toEqual({ r: 68, g: 1, b: 84 });
    expect(colorAt(1)).toEqual({ r: 253, g: 231, b: 37 });
  });

  it("clamps out-of-range inputs", () => {
    expect(colorAt(-5)).toEqual(colorAt(0));
    expect(colorAt(7)).toEqual(colorAt(1));
  });

  it("interpolates between stops", () => {
    const mid = colorAt(0.5);
    expect(mid).toEqual({ r: 33, g: 145, b: 140 });
  });
});

describe("normalizeGrid", () => {
  it("normalizes min to 0 and max to 1", () => {
    const g = normalizeGrid([
      [2, 4],
      [6, 10],
    ]);
    expect(g.min).toBe(2);
    expect(g.max).toBe(10);
    expect(g.t[0]).toBe(0);
    expect(g.t[3]).toBe(1);
    expect(g.t[1]).toBeCloseTo(0.25);
  });

  it("maps a constant grid to all zeros", () => {
    const g = normalizeGrid([
      [3, 3],
      [3, 3],
    ]);
    expect(Array.from(g.t)).toEqual([0, 0, 0, 0]);
  });

  it("rejects ragged and non-finite grids", () => {
    expect(() => normalizeGrid([[1, 2], [3]])).toThrow("ragged");
    expect(() => normalizeGrid([[1, NaN]])).toThrow("non-finite");
  });
});

describe("gridToRgba", () => {
  it("colors corner cells by the scale endpoints", () => {
    const g = normalizeGrid([
      [0, 5],
      [5, 10],
    ]);
    const rgba = gridToRgba(g);
    expect(rgba.length).toBe(16);
    // min corner -> low end of the scale
    expect([rgba[0], rgba[1], rgba[2], rgba[3]]).toEqual([68, 1, 84, 255]);
    // max corner -> high end of the scale
    expect([rgba[12], rgba[13], rgba[14], rgba[15]]).toEqual([253, 231, 37, 255]);
  });

  it("normalizes each grid independently of absolute scale", () => {
    const a = gridToRgba(normalizeGrid([[0, 1]]));
    const b = gridToRgba(normalizeGrid([[-1000, 1000]]));
    expect(Array.from(a)).toEqual(Array.from(b));
  });
});
