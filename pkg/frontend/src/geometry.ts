// Covariance-to-ellipse math and the world-to-screen camera transform.

export interface Ellipse {
  // semi-axis lengths, major first, in world units
  a: number;
  b: number;
  // rotation of the major axis, radians counter-clockwise from +x
  angle: number;
}

/**
 * 1-sigma ellipse of a symmetric 2x2 covariance: semi-axes are the square
 * roots of the eigenvalues, oriented along the eigenvectors. Closed-form
 * eigendecomposition; tiny negative eigenvalues from rounding clamp to zero.
 */
export function covarianceEllipse(cov: number[][]): Ellipse {
  const a = cov[0][0];
  const b = 0.5 * (cov[0][1] + cov[1][0]);
  const c = cov[1][1];
  const half = 0.5 * (a + c);
  const det = a * c - b * b;
  const disc = Math.sqrt(Math.max(half * half - det, 0));
  const lamMax = Math.max(half + disc, 0);
  const lamMin = Math.max(half - disc, 0);
  // eigenvector for the larger eigenvalue; fall back to the axes when the
  // matrix is already diagonal
  let angle: number;
  if (Math.abs(b) < 1e-15) {
    angle = a >= c ? 0 : Math.PI / 2;
  } else {
    angle = Math.atan2(lamMax - a, b);
  }
  return { a: Math.sqrt(lamMax), b: Math.sqrt(lamMin), angle };
}

export interface Camera {
  // world coordinates of the screen centre
  cx: number;
  cy: number;
  // pixels per world unit
  scale: number;
}

export function defaultCamera(worldHalfwidth = 10): Camera {
  return { cx: 0, cy: 0, scale: 1 / worldHalfwidth };
}

export function worldToScreen(
  cam: Camera,
  p: [number, number],
  width: number,
  height: number,
): [number, number] {
  const pixelsPerUnit = cam.scale * (Math.min(width, height) / 2.2);
  // screen y grows downward, world y grows upward
  return [
    width / 2 + (p[0] - cam.cx) * pixelsPerUnit,
    height / 2 - (p[1] - cam.cy) * pixelsPerUnit,
  ];
}

export function pixelsPerUnit(cam: Camera, width: number, height: number): number {
  return cam.scale * (Math.min(width, height) / 2.2);
}

export function panCamera(cam: Camera, dxPixels: number, dyPixels: number, width: number, height: number): Camera {
  const ppu = pixelsPerUnit(cam, width, height);
  return { ...cam, cx: cam.cx - dxPixels / ppu, cy: cam.cy + dyPixels / ppu };
}

export function zoomCamera(cam: Camera, factor: number): Camera {
  const scale = Math.min(Math.max(cam.scale * factor, 1e-3), 1e3);
  return { ...cam, scale };
}
