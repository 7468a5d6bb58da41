"""Scenario construction and simulation.

Three setups exercise the engine end to end:

* a 1D surface reconstruction: evenly spaced height variables in a chain,
  each consecutive pair tied by one compound factor merging a smoothness
  prior with every height measurement falling in that span (keeping the
  graph a strict chain for the floodfill schedule);
* a seeded random 2D pose graph: relative displacement measurements between
  random pairs, weakly anchored everywhere and strongly anchored once;
* an incrementally grown SLAM world: a steered robot leaving a trail of
  pose variables linked by odometry, observing landmarks within a radius,
  optionally with outlier injection and Huber kernels.

All randomness flows through one seeded generator per scenario, so a run is
a pure function of (seed, command sequence, config). The SLAM outlier ledger
records which factors were injected as outliers; it exists for evaluation
only and no estimation code path reads it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from .errors import EmptyDataset, InvalidCommand, OutOfSpan, ParseError
from .gaussians import mean_or_zero
from .graph import FactorGraph
from .messages import mahalanobis
from .models import (
    CompoundModel,
    HeightMeasurementModel,
    RelativePose2dModel,
    RobustKernel,
    SmoothnessModel,
    UnaryAnchorModel,
)

SIGMA_WEAK = 100.0
SIGMA_STRONG = 0.01


# ------------------------------------------------------------- 1D surface


@dataclass
class SurfaceScenario:
    measurements: List[Tuple[float, float]]
    n_vars: int = 41
    span: Optional[Tuple[float, float]] = None  # inferred from data if None
    sigma_m: float = 0.1
    sigma_p: float = 0.1


def load_surface(
    path,
    n_vars: int = 41,
    sigma_m: float = 0.1,
    sigma_p: float = 0.1,
    span: Optional[Tuple[float, float]] = None,
) -> SurfaceScenario:
    """Read "x y" measurement pairs from a text file.

    Lines starting with '#' and blank lines are skipped. Anything else must
    be exactly two whitespace-separated decimal floats.
    """
    measurements: List[Tuple[float, float]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(
                    f"line {lineno}: expected 'x y', got {line!r}", line=lineno
                )
            try:
                x, y = float(parts[0]), float(parts[1])
            except ValueError:
                raise ParseError(
                    f"line {lineno}: non-numeric value in {line!r}", line=lineno
                ) from None
            measurements.append((x, y))
    if not measurements:
        raise EmptyDataset(f"{path} contains no measurements")
    return SurfaceScenario(measurements, n_vars=n_vars, span=span, sigma_m=sigma_m, sigma_p=sigma_p)


def surface_grid(scn: SurfaceScenario) -> np.ndarray:
    if scn.n_vars < 2:
        raise OutOfSpan("surface grid needs at least two variables")
    if scn.span is not None:
        lo, hi = scn.span
    elif scn.measurements:
        xs = [x for x, _ in scn.measurements]
        lo, hi = min(xs), max(xs)
    else:
        lo, hi = 0.0, 1.0
    if not lo < hi:
        raise OutOfSpan(f"degenerate surface span [{lo}, {hi}]")
    return np.linspace(lo, hi, scn.n_vars)


def build_surface_graph(scn: SurfaceScenario) -> FactorGraph:
    """Chain of height variables with one compound factor per grid span.

    A measurement exactly on a grid point belongs to the span on its right;
    one on the final grid point is clamped into the last span. With no
    measurements at all, a weak anchor on the first variable keeps the batch
    system solvable.
    """
    grid = surface_grid(scn)
    graph = FactorGraph()
    vids = [graph.add_variable(1, "height") for _ in range(scn.n_vars)]

    per_span: List[List[Tuple[float, float]]] = [[] for _ in range(scn.n_vars - 1)]
    for x, y in scn.measurements:
        if x < grid[0] or x > grid[-1]:
            raise OutOfSpan(f"measurement x={x} outside grid [{grid[0]}, {grid[-1]}]")
        idx = int(np.searchsorted(grid, x, side="right")) - 1
        idx = min(max(idx, 0), scn.n_vars - 2)
        per_span[idx].append((x, y))

    for i in range(scn.n_vars - 1):
        smooth = SmoothnessModel(sigma_p=scn.sigma_p)
        if per_span[i]:
            parts = [smooth] + [
                HeightMeasurementModel(x, y, grid[i], grid[i + 1], sigma_m=scn.sigma_m)
                for x, y in per_span[i]
            ]
            graph.add_factor(CompoundModel(parts), [vids[i], vids[i + 1]])
        else:
            graph.add_factor(smooth, [vids[i], vids[i + 1]])

    if not scn.measurements:
        graph.add_factor(UnaryAnchorModel([0.0], SIGMA_WEAK), [vids[0]])
    return graph


# ---------------------------------------------------------- 2D pose graph


@dataclass
class PoseGraphScenario:
    seed: int
    n_vars: int = 20
    n_meas: int = 50
    ground_truth: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    sigma_m: float = 0.05
    anchor_index: int = 0


def gen_pose_graph(
    seed: int,
    n_vars: int = 20,
    n_meas: int = 50,
    scene_scale: float = 1.0,
    sigma_m: Optional[float] = None,
) -> Tuple[PoseGraphScenario, FactorGraph]:
    """Seeded random pose graph: noisy relative measurements between random pairs.

    Every variable gets a weak origin prior except the anchor variable, which
    gets the strong one at its ground-truth position (20 unary factors total
    at the defaults). Fully deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    if sigma_m is None:
        sigma_m = 0.05 * scene_scale
    gt = rng.uniform(0.0, scene_scale, size=(n_vars, 2))
    scn = PoseGraphScenario(
        seed=seed, n_vars=n_vars, n_meas=n_meas, ground_truth=gt, sigma_m=sigma_m
    )

    graph = FactorGraph()
    vids = [graph.add_variable(2, "pose") for _ in range(n_vars)]
    for _ in range(n_meas):
        i = int(rng.integers(n_vars))
        j = int(rng.integers(n_vars))
        while j == i:
            j = int(rng.integers(n_vars))
        z = gt[j] - gt[i] + rng.normal(0.0, sigma_m, size=2)
        graph.add_factor(RelativePose2dModel(z, sigma_m=sigma_m), [vids[i], vids[j]])
    for idx, vid in enumerate(vids):
        if idx == scn.anchor_index:
            graph.add_factor(UnaryAnchorModel(gt[idx], SIGMA_STRONG), [vid])
        else:
            graph.add_factor(UnaryAnchorModel([0.0, 0.0], SIGMA_WEAK), [vid])
    return scn, graph


def scale_measurement_precision(graph: FactorGraph, multiplier: float) -> int:
    """Scale lam_meas of every relative-measurement factor, refreshing caches.

    Message state is untouched: GBP simply keeps stepping against the new
    factors. Returns the number of factors rescaled.
    """
    if not multiplier > 0:
        raise ValueError("precision multiplier must be positive")
    if multiplier == 1.0:
        return 0
    touched = 0
    for factor in graph.factors.values():
        if factor.model.kind == "relative":
            factor.model = factor.model.scaled(multiplier)
            factor.linearization = factor.model.linearize(factor.x0)
            touched += 1
    if touched:
        graph.version += 1
    return touched


# ------------------------------------------------------- incremental SLAM


@dataclass
class SlamConfig:
    seed: int = 0
    step_size: float = 1.0
    obs_radius: float = 2.5
    odom_sigma: float = 0.05
    obs_sigma: float = 0.05
    outlier_prob: float = 1.0 / 50.0
    outlier_magnitude: float = 5.0
    landmark_density: float = 0.5  # landmarks per unit^2
    world_halfwidth: float = 10.0  # landmarks scattered over [-hw, hw]^2
    anchor_sigma: float = SIGMA_STRONG
    huber_nsigma: float = 4.0
    robust: bool = False  # start with outlier injection + kernels on


@dataclass
class WorldState:
    """Ground truth for the interactive simulation, separate from the graph.

    outlier_ledger holds the ids of factors whose measurement was injected as
    an outlier. It is written by injection and read by evaluation; estimation
    never consults it.
    """

    config: SlamConfig
    rng: np.random.Generator
    robot_gt: np.ndarray
    pose_history_gt: List[np.ndarray]
    landmarks_gt: np.ndarray
    outliers_on: bool
    kernels_on: bool
    pose_vars: List[int] = field(default_factory=list)
    landmark_vars: Dict[int, int] = field(default_factory=dict)  # landmark idx -> var id
    var_gt: Dict[int, np.ndarray] = field(default_factory=dict)
    outlier_ledger: Set[int] = field(default_factory=set)

    @property
    def robust_mode(self) -> bool:
        return self.outliers_on and self.kernels_on


_DIRECTIONS = {
    "w": np.array([0.0, 1.0]),
    "s": np.array([0.0, -1.0]),
    "a": np.array([-1.0, 0.0]),
    "d": np.array([1.0, 0.0]),
}


def new_world(config: SlamConfig) -> Tuple[WorldState, FactorGraph]:
    """Fresh world: robot at the origin, strongly anchored, landmarks scattered."""
    rng = np.random.default_rng(config.seed)
    side = 2.0 * config.world_halfwidth
    n_landmarks = int(round(config.landmark_density * side * side))
    landmarks = rng.uniform(-config.world_halfwidth, config.world_halfwidth, size=(n_landmarks, 2))

    world = WorldState(
        config=config,
        rng=rng,
        robot_gt=np.zeros(2),
        pose_history_gt=[np.zeros(2)],
        landmarks_gt=landmarks,
        outliers_on=config.robust,
        kernels_on=config.robust,
    )
    graph = FactorGraph()
    vid = graph.add_variable(2, "pose")
    world.pose_vars.append(vid)
    world.var_gt[vid] = world.robot_gt.copy()
    # the strong prior on the first pose defines the coordinate frame
    graph.add_factor(UnaryAnchorModel([0.0, 0.0], config.anchor_sigma), [vid])
    _observe_landmarks(world, graph)
    return world, graph


def set_robust(world: WorldState, graph: FactorGraph, on: bool):
    """Toggle outlier injection and Huber kernels together.

    Kernels are applied to (or removed from) all existing relative factors as
    well, so the estimator is consistently robust or consistently plain.
    """
    on = bool(on)
    world.outliers_on = on
    world.kernels_on = on
    kernel = RobustKernel("huber", world.config.huber_nsigma) if on else None
    for factor in graph.factors.values():
        if factor.model.kind == "relative":
            factor.model = factor.model.with_robust(kernel)


def _measurement_kernel(world: WorldState) -> Optional[RobustKernel]:
    if world.kernels_on:
        return RobustKernel("huber", world.config.huber_nsigma)
    return None


def _observe_landmarks(world: WorldState, graph: FactorGraph) -> Tuple[int, int, int]:
    """Add an observation factor for every landmark within obs_radius.

    Each observation independently becomes an outlier with outlier_prob when
    injection is on: a displacement of outlier_magnitude in a uniformly
    random direction is added to z and the factor id is recorded in the
    ledger. Returns (observations, outliers, new landmark variables).
    """
    cfg = world.config
    pose_vid = world.pose_vars[-1]
    dists = np.linalg.norm(world.landmarks_gt - world.robot_gt, axis=1)
    observations = 0
    outliers = 0
    new_vars = 0
    for lm_idx in np.nonzero(dists <= cfg.obs_radius)[0]:
        lm_idx = int(lm_idx)
        lm_vid = world.landmark_vars.get(lm_idx)
        if lm_vid is None:
            lm_vid = graph.add_variable(2, "landmark")
            world.landmark_vars[lm_idx] = lm_vid
            world.var_gt[lm_vid] = world.landmarks_gt[lm_idx].copy()
            new_vars += 1
        z = world.landmarks_gt[lm_idx] - world.robot_gt
        z = z + world.rng.normal(0.0, cfg.obs_sigma, size=2)
        is_outlier = world.outliers_on and world.rng.random() < cfg.outlier_prob
        if is_outlier:
            theta = world.rng.uniform(0.0, 2.0 * np.pi)
            z = z + cfg.outlier_magnitude * np.array([np.cos(theta), np.sin(theta)])
        fid = graph.add_factor(
            RelativePose2dModel(z, sigma_m=cfg.obs_sigma, robust=_measurement_kernel(world)),
            [pose_vid, lm_vid],
        )
        observations += 1
        if is_outlier:
            world.outlier_ledger.add(fid)
            outliers += 1
    return observations, outliers, new_vars


def world_step(world: WorldState, graph: FactorGraph, command: str) -> Dict[str, int]:
    """Move the robot one step and grow the graph with the new measurements.

    Adds exactly one pose variable, one odometry factor, and one observation
    factor per landmark in range (creating landmark variables on first
    sight).
    """
    direction = _DIRECTIONS.get(command)
    if direction is None:
        raise InvalidCommand(f"unknown move command {command!r}")
    cfg = world.config
    prev_vid = world.pose_vars[-1]
    prev_gt = world.robot_gt.copy()

    world.robot_gt = prev_gt + cfg.step_size * direction
    world.pose_history_gt.append(world.robot_gt.copy())
    vid = graph.add_variable(2, "pose")
    world.pose_vars.append(vid)
    world.var_gt[vid] = world.robot_gt.copy()

    z = (world.robot_gt - prev_gt) + world.rng.normal(0.0, cfg.odom_sigma, size=2)
    graph.add_factor(
        RelativePose2dModel(z, sigma_m=cfg.odom_sigma, robust=_measurement_kernel(world)),
        [prev_vid, vid],
    )
    observations, outliers, new_lm_vars = _observe_landmarks(world, graph)
    return {
        "new_variables": 1 + new_lm_vars,
        "observations": observations,
        "outliers": outliers,
    }


def run_script(world: WorldState, graph: FactorGraph, script: str) -> Dict[str, int]:
    """Execute one world_step per character of a wasd script."""
    totals = {"steps": 0, "observations": 0, "outliers": 0}
    for ch in script:
        stats = world_step(world, graph, ch)
        totals["steps"] += 1
        totals["observations"] += stats["observations"]
        totals["outliers"] += stats["outliers"]
    return totals


@dataclass
class FactorClass:
    label: str  # grey | white | red | yellow
    m_est: float
    m_gt: float


def classify_factors(
    world: WorldState, graph: FactorGraph, threshold: float = 4.0
) -> Dict[int, FactorClass]:
    """Per-factor Mahalanobis classification against estimate and ground truth.

    grey: both distances below the threshold (agreeing inlier). white: both
    at or above (confidently identified outlier). red: only the ground-truth
    distance is large (an undetected outlier polluting the estimate). yellow:
    only the estimated distance is large (a good measurement being rejected).
    """
    out: Dict[int, FactorClass] = {}
    for factor in graph.factors.values():
        if factor.model.kind != "relative":
            continue
        kernel = factor.model.robust
        t = kernel.n_sigma if kernel is not None and kernel.kind != "none" else threshold
        x_est = np.concatenate([mean_or_zero(graph.belief(v)) for v in factor.variable_ids])
        x_gt = np.concatenate([world.var_gt[v] for v in factor.variable_ids])
        m_est = mahalanobis(factor.model, x_est)
        m_gt = mahalanobis(factor.model, x_gt)
        if m_gt >= t:
            label = "white" if m_est >= t else "red"
        else:
            label = "yellow" if m_est >= t else "grey"
        out[factor.id] = FactorClass(label, m_est, m_gt)
    return out


def pose_error_vs_ground_truth(world: WorldState, graph: FactorGraph) -> float:
    """Max over pose variables of the belief-mean error against ground truth."""
    worst = 0.0
    for vid in world.pose_vars:
        err = float(np.linalg.norm(mean_or_zero(graph.belief(vid)) - world.var_gt[vid]))
        worst = max(worst, err)
    return worst
