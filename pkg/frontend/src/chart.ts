/** Pure geometry helpers for the y_best-vs-query line chart. */

export interface ChartPoint {
  x: number;
  y: number;
}

/**
 * Map a y_best curve to pixel coordinates inside a (width x height) box with
 * the given padding. x spans the query index; the y axis is flipped so the
 * best (lowest) objective value sits at the bottom edge.
 */
export function curveToPoints(
  curve: number[],
  width: number,
  height: number,
  pad = 24,
): ChartPoint[] {
  if (curve.length === 0) return [];
  const min = Math.min(...curve);
  const max = Math.max(...curve);
  const span = max > min ? max - min : 1;
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const denom = Math.max(curve.length - 1, 1);
  return curve.map((v, i) => ({
    x: pad + (innerW * i) / denom,
    y: pad + innerH * (1 - (v - min) / span),
  }));
}

/** "x1,y1 x2,y2 ..." attribute string for an SVG polyline. */
export function pointsAttribute(points: ChartPoint[]): string {
  return points.map((p) => `${p.x.toFixed(1)},${p.y.toFixed(1)}`).join(" ");
}

/** Check a progress curve never worsens (y_best is a running minimum). */
export function isMonotoneNonIncreasing(curve: number[]): boolean {
  for (let i = 1; i < curve.length; i++) {
    if (curve[i] > curve[i - 1] + 1e-12) return false;
  }
  return true;
}
