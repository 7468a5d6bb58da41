import { describe, expect, it } from "vitest";

import { Draw2D, render } from "../src/renderer.js";
import { ViewModel } from "../src/viewmodel.js";
import { sampleSnapshot } from "./fixtures.js";

interface Stroke {
  points: Array<[number, number]>;
  style: string;
}

interface Dot {
  x: number;
  y: number;
  r: number;
  style: string;
}

// Records every drawing call so tests can measure the emitted geometry in
// actual pixel coordinates.
class RecordingCanvas implements Draw2D {
  fillStyle: any = "";
  strokeStyle: any = "";
  lineWidth = 1;
  font = "";
  strokes: Stroke[] = [];
  dots: Dot[] = [];
  texts: Array<{ text: string; x: number; y: number }> = [];
  rects: Array<[number, number, number, number]> = [];
  private path: Array<[number, number]> = [];
  private arc_: { x: number; y: number; r: number } | null = null;

  fillRect(x: number, y: number, w: number, h: number) {
    this.rects.push([x, y, w, h]);
  }
  beginPath() {
    this.path = [];
    this.arc_ = null;
  }
  moveTo(x: number, y: number) {
    this.path.push([x, y]);
  }
  lineTo(x: number, y: number) {
    this.path.push([x, y]);
  }
  closePath() {}
  arc(x: number, y: number, r: number) {
    this.arc_ = { x, y, r };
  }
  stroke() {
    this.strokes.push({ points: this.path.slice(), style: String(this.strokeStyle) });
  }
  fill() {
    if (this.arc_ !== null) {
      this.dots.push({ ...this.arc_, style: String(this.fillStyle) });
    }
  }
  fillText(text: string, x: number, y: number) {
    this.texts.push({ text, x, y });
  }
}

const W = 800;
const H = 600;

function singleVariableFrame(cov: number[][]): any {
  return {
    type: "snapshot",
    schema_version: 1,
    iteration: 1,
    seed: 0,
    variables: [{ id: 0, label: "pose", mean: [0, 0], cov }],
    factors: [],
    metrics: { messages_sent: 0, max_residual: 0 },
  };
}

describe("render", () => {
  it("draws diag(4,1) as a 2:1 ellipse, measured in pixels", () => {
    const vm = new ViewModel();
    vm.apply(
      singleVariableFrame([
        [4, 0],
        [0, 1],
      ]),
    );
    const ctx = new RecordingCanvas();
    render(ctx, vm, W, H);

    // the covariance outline is the only many-vertex stroke in the scene
    const outline = ctx.strokes.reduce((a, b) => (b.points.length > a.points.length ? b : a));
    expect(outline.points.length).toBeGreaterThan(40);

    let semiX = 0;
    let semiY = 0;
    for (const [x, y] of outline.points) {
      semiX = Math.max(semiX, Math.abs(x - W / 2));
      semiY = Math.max(semiY, Math.abs(y - H / 2));
    }
    const ratio = semiX / semiY;
    expect(Math.abs(ratio - 2) / 2).toBeLessThan(0.05);
  });

  it("draws an isotropic covariance as a circle", () => {
    const vm = new ViewModel();
    vm.apply(
      singleVariableFrame([
        [0.25, 0],
        [0, 0.25],
      ]),
    );
    const ctx = new RecordingCanvas();
    render(ctx, vm, W, H);
    const outline = ctx.strokes.reduce((a, b) => (b.points.length > a.points.length ? b : a));
    const radii = outline.points.map(([x, y]) => Math.hypot(x - W / 2, y - H / 2));
    const spread = (Math.max(...radii) - Math.min(...radii)) / Math.max(...radii);
    expect(spread).toBeLessThan(1e-9);
  });

  it("annotates non-grey factors and leaves grey ones silent", () => {
    const vm = new ViewModel();
    const doc = sampleSnapshot();
    doc.factors = [
      { id: 11, var_ids: [0, 1], kind: "relative", robust_class: "grey", m_est: 0.2, m_gt: 0.3 },
      { id: 12, var_ids: [0, 1], kind: "relative", robust_class: "white", m_est: 7.3, m_gt: 9.1 },
    ];
    vm.apply(doc);
    const ctx = new RecordingCanvas();
    render(ctx, vm, W, H);
    expect(ctx.texts).toHaveLength(1);
    expect(ctx.texts[0].text).toBe("7.3/9.1");
  });

  it("skips annotations when the labels toggle is off", () => {
    const vm = new ViewModel();
    vm.apply(sampleSnapshot());
    vm.toggles.factorLabels = false;
    const ctx = new RecordingCanvas();
    render(ctx, vm, W, H);
    expect(ctx.texts).toHaveLength(0);
  });

  it("paints ground truth and batch overlays in their own colors", () => {
    const vm = new ViewModel();
    const doc = sampleSnapshot();
    doc.batch = [
      { id: 0, mean: [0.1, -0.2], cov: [[0.01, 0], [0, 0.01]] },
      { id: 1, mean: [2, 3], cov: [[0.01, 0], [0, 0.01]] },
    ];
    vm.apply(doc);
    const ctx = new RecordingCanvas();
    render(ctx, vm, W, H);
    const styles = new Set(ctx.dots.map((d) => d.style));
    expect(styles.has("#ffffff")).toBe(true); // pose ground truth
    expect(styles.has("#3fbf5f")).toBe(true); // batch means
    vm.toggles.groundTruth = false;
    vm.toggles.batch = false;
    const bare = new RecordingCanvas();
    render(bare, vm, W, H);
    expect(bare.dots.length).toBeLessThan(ctx.dots.length);
  });

  it("clears to the background and survives an empty model", () => {
    const vm = new ViewModel();
    const ctx = new RecordingCanvas();
    render(ctx, vm, W, H);
    expect(ctx.rects).toEqual([[0, 0, W, H]]);
    expect(ctx.strokes).toHaveLength(0);
  });
});
