// Immediate-mode canvas renderer. The scene is redrawn in full from the
// view model on every committed frame; there is no retained scene graph.

import { Camera, covarianceEllipse, pixelsPerUnit, worldToScreen } from "./geometry.js";
import { FactorEntry, SnapshotFrame, VariableEntry } from "./schema.js";
import { ViewModel } from "./viewmodel.js";

// The structural subset of CanvasRenderingContext2D the renderer uses;
// tests substitute a recording stub.
export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fillText(text: string, x: number, y: number): void;
}

const BACKGROUND = "#14161a";
const POSE_COLOR = "#4c8dff";
const LANDMARK_COLOR = "#e05252";
const GT_POSE_COLOR = "#ffffff";
const GT_LANDMARK_COLOR = "#ffd24d";
const BATCH_COLOR = "#3fbf5f";
const FACTOR_COLORS: Record<string, string> = {
  grey: "#5a5f66",
  white: "#f2f2f2",
  red: "#ff3b30",
  yellow: "#ffcc00",
};

const ELLIPSE_SEGMENTS = 48;

function variableColor(label: string): string {
  if (label === "pose") return POSE_COLOR;
  if (label === "landmark") return LANDMARK_COLOR;
  return "#9a9fa6";
}

function dot(ctx: Draw2D, x: number, y: number, r: number, color: string) {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  ctx.fill();
}

/**
 * Stroke the 1-sigma ellipse of a 2x2 covariance centred on a world point.
 * Drawn as an explicit polygon so the geometry is identical on every
 * canvas implementation.
 */
export function strokeCovarianceEllipse(
  ctx: Draw2D,
  cam: Camera,
  center: [number, number],
  cov: number[][],
  width: number,
  height: number,
  color: string,
) {
  const { a, b, angle } = covarianceEllipse(cov);
  const ppu = pixelsPerUnit(cam, width, height);
  const [cx, cy] = worldToScreen(cam, center, width, height);
  const cosA = Math.cos(angle);
  const sinA = Math.sin(angle);
  ctx.strokeStyle = color;
  ctx.lineWidth = 1;
  ctx.beginPath();
  for (let i = 0; i <= ELLIPSE_SEGMENTS; i++) {
    const t = (2 * Math.PI * i) / ELLIPSE_SEGMENTS;
    const ex = a * Math.cos(t);
    const ey = b * Math.sin(t);
    // rotate into world axes, then to screen (y flips)
    const px = cx + (ex * cosA - ey * sinA) * ppu;
    const py = cy - (ex * sinA + ey * cosA) * ppu;
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  }
  ctx.closePath();
  ctx.stroke();
}

function drawFactor(
  ctx: Draw2D,
  cam: Camera,
  factor: FactorEntry,
  byId: Map<number, VariableEntry>,
  width: number,
  height: number,
  labels: boolean,
) {
  if (factor.var_ids.length < 2) return;
  const points: Array<[number, number]> = [];
  for (const vid of factor.var_ids) {
    const v = byId.get(vid);
    if (!v || v.mean.length < 2) return;
    points.push(worldToScreen(cam, [v.mean[0], v.mean[1]], width, height));
  }
  const cls = factor.robust_class ?? "grey";
  ctx.strokeStyle = FACTOR_COLORS[cls] ?? FACTOR_COLORS.grey;
  ctx.lineWidth = cls === "grey" ? 1 : 2;
  ctx.beginPath();
  ctx.moveTo(points[0][0], points[0][1]);
  for (let i = 1; i < points.length; i++) ctx.lineTo(points[i][0], points[i][1]);
  ctx.stroke();
  // only suspicious factors get their distances written out
  if (labels && cls !== "grey" && factor.m_est !== undefined && factor.m_gt !== undefined) {
    const mx = (points[0][0] + points[points.length - 1][0]) / 2;
    const my = (points[0][1] + points[points.length - 1][1]) / 2;
    ctx.fillStyle = FACTOR_COLORS[cls] ?? "#fff";
    ctx.font = "11px sans-serif";
    ctx.fillText(`${factor.m_est.toFixed(1)}/${factor.m_gt.toFixed(1)}`, mx + 4, my - 4);
  }
}

export function render(ctx: Draw2D, vm: ViewModel, width: number, height: number) {
  ctx.fillStyle = BACKGROUND;
  ctx.fillRect(0, 0, width, height);
  const frame: SnapshotFrame | null = vm.frame;
  if (frame === null) return;
  const cam = vm.camera;
  const byId = new Map<number, VariableEntry>(frame.variables.map((v) => [v.id, v]));

  for (const factor of frame.factors) {
    drawFactor(ctx, cam, factor, byId, width, height, vm.toggles.factorLabels);
  }

  for (const v of frame.variables) {
    if (v.mean.length < 2) continue;
    const color = variableColor(v.label);
    const [x, y] = worldToScreen(cam, [v.mean[0], v.mean[1]], width, height);
    strokeCovarianceEllipse(ctx, cam, [v.mean[0], v.mean[1]], v.cov, width, height, color);
    dot(ctx, x, y, v.label === "pose" ? 4 : 3, color);
    if (vm.toggles.groundTruth && v.gt && v.gt.length >= 2) {
      const [gx, gy] = worldToScreen(cam, [v.gt[0], v.gt[1]], width, height);
      dot(ctx, gx, gy, 2, v.label === "pose" ? GT_POSE_COLOR : GT_LANDMARK_COLOR);
    }
  }

  if (vm.toggles.batch && frame.batch) {
    for (const b of frame.batch) {
      if (b.mean.length < 2) continue;
      const [x, y] = worldToScreen(cam, [b.mean[0], b.mean[1]], width, height);
      dot(ctx, x, y, 2.5, BATCH_COLOR);
    }
  }
}
