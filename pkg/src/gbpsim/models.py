"""Measurement models: the probabilistic content of factors.

A model bundles an observed measurement z, its precision lam_meas, the
measurement function h over the factor's stacked state x_s, and the Jacobian
of h. From those it can produce the factor's linearization at any point:

    lam' = J^T lam_meas J
    eta  = J^T lam_meas (J x0 + z - h(x0))

For the linear models here (all of them), h(x) = J x exactly, the two x0
terms cancel, and the linearization is independent of x0.

Models are immutable after construction and freely shareable between
factors. A model may carry a robust kernel; the kernel is applied by the
message-passing layer per pass, never baked into the model.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, OutOfSpan
from .gaussians import GaussianInfo


@dataclass(frozen=True)
class RobustKernel:
    """Robust M-estimator selector: quadratic within n_sigma, reshaped beyond.

    kind "huber" flattens the energy to a straight line beyond the threshold;
    kind "constant" caps it; kind "none" is plain Gaussian everywhere.
    """

    kind: str = "none"
    n_sigma: float = 4.0

    def __post_init__(self):
        if self.kind not in ("none", "huber", "constant"):
            raise ValueError(f"unknown robust kernel kind {self.kind!r}")
        if self.kind != "none" and not self.n_sigma > 0:
            raise ValueError("n_sigma must be positive")


def _block_diag(blocks) -> np.ndarray:
    dims = [b.shape[0] for b in blocks]
    out = np.zeros((sum(dims), sum(dims)))
    at = 0
    for b in blocks:
        d = b.shape[0]
        out[at : at + d, at : at + d] = b
        at += d
    return out


class MeasurementModel:
    """Base class carrying the (z, lam_meas, h, jacobian) contract.

    Subclasses set kind (a short tag used in snapshots), x_dim (the stacked
    state dimension), is_linear, and implement h and jacobian.
    """

    kind = "model"
    is_linear = True

    def __init__(self, z, lam_meas, x_dim: int, robust: RobustKernel | None = None):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        lam = np.asarray(lam_meas, dtype=float)
        if lam.shape != (z.shape[0], z.shape[0]):
            raise DimensionMismatch(
                f"lam_meas shape {lam.shape} does not match z dim {z.shape[0]}"
            )
        lam = (lam + lam.T) / 2.0
        z.setflags(write=False)
        lam.setflags(write=False)
        self.z = z
        self.lam_meas = lam
        self.x_dim = int(x_dim)
        self.robust = robust

    def h(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.z - self.h(np.asarray(x, dtype=float))

    def linearize(self, x0) -> GaussianInfo:
        """Gaussian factor over x_s from first-order expansion of h at x0."""
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (self.x_dim,):
            raise DimensionMismatch(
                f"linearization point shape {x0.shape}, expected ({self.x_dim},)"
            )
        jac = self.jacobian(x0)
        jtl = jac.T @ self.lam_meas
        eta = jtl @ (jac @ x0 + self.z - self.h(x0))
        return GaussianInfo(eta, jtl @ jac)

    def scaled(self, multiplier: float) -> "MeasurementModel":
        """Copy of this model with lam_meas scaled by multiplier."""
        if not multiplier > 0:
            raise ValueError("precision multiplier must be positive")
        other = copy.copy(self)
        lam = self.lam_meas * multiplier
        lam.setflags(write=False)
        other.lam_meas = lam
        return other

    def with_robust(self, robust: RobustKernel | None) -> "MeasurementModel":
        """Copy of this model with a different robust kernel (or none)."""
        other = copy.copy(self)
        other.robust = robust
        return other


def interp_lambda(x_s: float, x_m1: float, x_m2: float) -> float:
    """Fraction of the span [x_m1, x_m2] covered at x_s, in [0, 1]."""
    if not x_m1 < x_m2:
        raise OutOfSpan(f"degenerate span [{x_m1}, {x_m2}]")
    if x_s < x_m1 or x_s > x_m2:
        raise OutOfSpan(f"x={x_s} outside span [{x_m1}, {x_m2}]")
    return (x_s - x_m1) / (x_m2 - x_m1)


class HeightMeasurementModel(MeasurementModel):
    """Scalar height observation at a point between two grid variables.

    The predicted height interpolates linearly between the two heights:
    h(y1, y2) = (1 - lam) y1 + lam y2 with lam the span fraction of the
    observation's horizontal position.
    """

    kind = "height"

    def __init__(self, x_obs, y_obs, x_m1, x_m2, sigma_m: float = 0.1):
        lam_interp = interp_lambda(float(x_obs), float(x_m1), float(x_m2))
        super().__init__([float(y_obs)], [[1.0 / sigma_m**2]], x_dim=2)
        self.lam_interp = lam_interp

    def h(self, x):
        return np.array([(1.0 - self.lam_interp) * x[0] + self.lam_interp * x[1]])

    def jacobian(self, x):
        return np.array([[1.0 - self.lam_interp, self.lam_interp]])


class SmoothnessModel(MeasurementModel):
    """Zero-observation prior pulling neighbouring heights together.

    h(y1, y2) = y2 - y1 with z fixed at 0, so the energy grows with the
    height difference across the span.
    """

    kind = "smooth"

    def __init__(self, sigma_p: float = 0.1):
        super().__init__([0.0], [[1.0 / sigma_p**2]], x_dim=2)

    def h(self, x):
        return np.array([x[1] - x[0]])

    def jacobian(self, x):
        return np.array([[-1.0, 1.0]])


class RelativePose2dModel(MeasurementModel):
    """2D cartesian displacement measurement between two variables.

    h(x_i, x_j) = x_j - x_i; covers odometry, landmark observations, and the
    random pose-graph measurements (there is no rotation anywhere).
    """

    kind = "relative"

    def __init__(self, z, sigma_m: float, robust: RobustKernel | None = None):
        z = np.asarray(z, dtype=float)
        if z.shape != (2,):
            raise DimensionMismatch("relative pose measurement must be a 2-vector")
        super().__init__(z, np.eye(2) / sigma_m**2, x_dim=4, robust=robust)

    def h(self, x):
        return x[2:4] - x[0:2]

    def jacobian(self, x):
        return np.hstack([-np.eye(2), np.eye(2)])


class UnaryAnchorModel(MeasurementModel):
    """Direct prior on a variable's absolute value; h is the identity.

    Used weak (large sigma) on every pose-graph node to fix the gauge, and
    strong (tiny sigma) on one node to define the coordinate frame.
    """

    kind = "anchor"

    def __init__(self, z, sigma: float, robust: RobustKernel | None = None):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        d = z.shape[0]
        super().__init__(z, np.eye(d) / sigma**2, x_dim=d, robust=robust)

    def h(self, x):
        return np.asarray(x, dtype=float)

    def jacobian(self, x):
        return np.eye(self.x_dim)


class CompoundModel(MeasurementModel):
    """Several models over the same stacked state, fused into one factor.

    Measurement rows are stacked and precisions placed block-diagonal. Used
    by the 1D surface scenario to merge the smoothness prior with every
    height measurement falling in one span, keeping the graph a strict chain.
    """

    kind = "compound"

    def __init__(self, parts, robust: RobustKernel | None = None):
        parts = list(parts)
        if not parts:
            raise DimensionMismatch("compound model needs at least one part")
        x_dim = parts[0].x_dim
        if any(p.x_dim != x_dim for p in parts):
            raise DimensionMismatch("compound parts must share the same state")
        z = np.concatenate([p.z for p in parts])
        lam = _block_diag([p.lam_meas for p in parts])
        super().__init__(z, lam, x_dim=x_dim, robust=robust)
        self.parts = tuple(parts)

    @property
    def is_linear(self):
        return all(p.is_linear for p in self.parts)

    def h(self, x):
        return np.concatenate([p.h(x) for p in self.parts])

    def jacobian(self, x):
        return np.vstack([p.jacobian(x) for p in self.parts])
