/** Value-to-color mapping for heatmaps, normalized per grid. */

export interface Rgb {
  r: number;
  g: number;
  b: number;
}

/** Viridis-like stops, dark blue (low) to yellow (high). */
const STOPS: Rgb[] = [
  { r: 68, g: 1, b: 84 },
  { r: 59, g: 82, b: 139 },
  { r: 33, g: 145, b: 140 },
  { r: 94, g: 201, b: 98 },
  { r: 253, g: 231, b: 37 },
];

/** Map t in [0,1] to a color by piecewise-linear interpolation of the stops. */
export function colorAt(t: number): Rgb {
  const clamped = Math.min(1, Math.max(0, t));
  const x = clamped * (STOPS.length - 1);
  const i = Math.min(STOPS.length - 2, Math.floor(x));
  const f = x - i;
  const a = STOPS[i];
  const b = STOPS[i + 1];
  return {
    r: Math.round(a.r + f * (b.r - a.r)),
    g: Math.round(a.g + f * (b.g - a.g)),
    b: Math.round(a.b + f * (b.b - a.b)),
  };
}

export interface NormalizedGrid {
  /** Row-major normalized values in [0,1]. */
  t: Float64Array;
  rows: number;
  cols: number;
  min: number;
  max: number;
}

/**
 * Normalize a 2-D value grid to [0,1] by its own min/max, so every heatmap
 * (objective or learned model, whose scale is arbitrary) gets the full
 * color range. A constant grid maps to 0 everywhere.
 */
export function normalizeGrid(values: number[][]): NormalizedGrid {
  const rows = values.length;
  const cols = rows > 0 ? values[0].length : 0;
  let min = Infinity;
  let max = -Infinity;
  for (const row of values) {
    if (row.length !== cols) {
      throw new Error("ragged grid");
    }
    for (const v of row) {
      if (!Number.isFinite(v)) throw new Error("non-finite grid value");
      if (v < min) min = v;
      if (v > max) max = v;
    }
  }
  const span = max > min ? max - min : 1;
  const t = new Float64Array(rows * cols);
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      t[r * cols + c] = (values[r][c] - min) / span;
    }
  }
  return { t, rows, cols, min, max };
}

/** RGBA bytes (row-major, 4 per cell) for a normalized grid. */
export function gridToRgba(grid: NormalizedGrid): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(grid.rows * grid.cols * 4);
  for (let i = 0; i < grid.t.length; i++) {
    const { r, g, b } = colorAt(grid.t[i]);
    out[4 * i] = r;
    out[4 * i + 1] = g;
    out[4 * i + 2] = b;
    out[4 * i + 3] = 255;
  }
  return out;
}
