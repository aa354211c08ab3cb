/** DOM wiring: a pure view over the SessionController state. */

import { SessionApi } from "./api.js";
import { gridToRgba, normalizeGrid } from "./colormap.js";
import { curveToPoints, pointsAttribute } from "./chart.js";
import { SessionController, SessionView } from "./session.js";
import type { GridPayload } from "./types.js";

const api = new SessionApi("");
const controller = new SessionController(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function drawHeatmap(canvas: HTMLCanvasElement, grid: GridPayload): void {
  const norm = normalizeGrid(grid.values);
  const rgba = gridToRgba(norm);
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  canvas.width = norm.cols;
  canvas.height = norm.rows;
  ctx.putImageData(new ImageData(rgba, norm.cols, norm.rows), 0, 0);
  const xlo = grid.xs[0].toPrecision(3);
  const xhi = grid.xs[grid.xs.length - 1].toPrecision(3);
  const ylo = grid.ys[0].toPrecision(3);
  const yhi = grid.ys[grid.ys.length - 1].toPrecision(3);
  const label = canvas.nextElementSibling;
  if (label) label.textContent = `x: [${xlo}, ${xhi}]  y: [${ylo}, ${yhi}]`;
}

function drawQuestion(view: SessionView): void {
  const q = view.question;
  if (!q) return;
  const svg = el<HTMLElement>("question-plot");
  // plot both points on a blank native-coordinate frame (no function data)
  const [x1, y1] = q.first;
  const [x2, y2] = q.second;
  const xs = [x1, x2];
  const ys = [y1, y2];
  const xmin = Math.min(...xs);
  const xmax = Math.max(...xs);
  const ymin = Math.min(...ys);
  const ymax = Math.max(...ys);
  const padX = (xmax - xmin || 1) * 0.3;
  const padY = (ymax - ymin || 1) * 0.3;
  const sx = (x: number) =>
    40 + (320 * (x - xmin + padX)) / (xmax - xmin + 2 * padX);
  const sy = (y: number) =>
    280 - (240 * (y - ymin + padY)) / (ymax - ymin + 2 * padY);
  svg.innerHTML =
    `<circle cx="${sx(x1)}" cy="${sy(y1)}" r="7" fill="#1f77b4"/>` +
    `<text x="${sx(x1) + 10}" y="${sy(y1)}" font-size="13">A (${x1.toPrecision(3)}, ${y1.toPrecision(3)})</text>` +
    `<circle cx="${sx(x2)}" cy="${sy(y2)}" r="7" fill="#d62728"/>` +
    `<text x="${sx(x2) + 10}" y="${sy(y2)}" font-size="13">B (${x2.toPrecision(3)}, ${y2.toPrecision(3)})</text>`;
}

function render(view: SessionView): void {
  el("memorize-panel").hidden = view.phase !== "memorize";
  el("question-panel").hidden = view.phase !== "question";
  el("result-panel").hidden = view.phase !== "done";
  el("countdown").textContent = String(view.countdownSeconds);
  el("progress").textContent = `${view.progress.answered} / ${view.progress.total}`;

  if (view.phase === "memorize" && view.grid) {
    drawHeatmap(el<HTMLCanvasElement>("objective-heatmap"), view.grid);
  }
  if (view.phase === "question") {
    if (view.question) {
      drawQuestion(view);
    } else {
      void controller.fetchQuestion();
    }
  }
  if (view.phase === "done" && view.result) {
    el("accuracy").textContent = `${(view.result.accuracy * 100).toFixed(1)}%`;
    drawHeatmap(el<HTMLCanvasElement>("model-heatmap"), view.result.model_grid);
  }
  if (view.bo) {
    el("bo-status").textContent =
      `${view.bo.status} (${view.bo.completed_runs} runs)`;
    if (view.bo.status === "done" && view.bo.mean_curve) {
      const pts = curveToPoints(view.bo.mean_curve, 420, 260);
      el("bo-curve").setAttribute("points", pointsAttribute(pts));
    }
  }
}

function startTimers(): void {
  window.setInterval(() => controller.tick(), 250);
}

export function boot(): void {
  controller.onChange(render);
  el("start-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const benchmark = el<HTMLInputElement>("benchmark").value || "camel3_2d";
    void controller.start({ benchmark, M: 25 }).then(startTimers);
  });
  el("choose-first").addEventListener("click", () => void controller.submitAnswer("first"));
  el("choose-second").addEventListener("click", () => void controller.submitAnswer("second"));
  el("launch-bo").addEventListener("click", () => {
    void controller.launchBo({ J: 20, nSimulations: 5 }).then(() => {
      const poll = window.setInterval(() => {
        void controller.pollBo().then((s) => {
          if (s.status !== "running") window.clearInterval(poll);
        });
      }, 2000);
    });
  });
}

if (typeof document !== "undefined" && document.getElementById("start-form")) {
  boot();
}
