"""Gaussian belief propagation over factor graphs.

Beliefs and messages live in information form, factors carry nonlinear
measurement models with optional robust kernels, and three schedules
(synchronous, random single-edge, floodfill) drive the message passing.
A dense batch solver acts as the reference answer, scenarios build 1D
surface / 2D pose graph / incremental SLAM problems, and snapshots,
a CLI, and a live WebSocket service expose the whole thing.
"""

from .batch import BatchSolution, ComparisonMetrics, compare, solve, solve_robust
from .errors import (
    DimensionMismatch,
    EmptyDataset,
    EmptyGraph,
    GbpError,
    InvalidCommand,
    NotAChain,
    OutOfSpan,
    ParseError,
    SchemaError,
    SingularBlock,
    SingularSystem,
    UnknownEdge,
    UnknownVariable,
)
from .gaussians import (
    GaussianInfo,
    MomentGaussian,
    from_moments,
    marginalize,
    marginalize_blocks,
    mean_or_zero,
    moments_or_relaxed,
    product,
    reorder,
    to_moments,
)
from .graph import Edge, FactorGraph, FactorNode, Mailbox, Message, VariableNode
from .messages import (
    DampingConfig,
    RelinearizePolicy,
    factor_to_variable_message,
    mahalanobis,
    relinearize,
    robust_scale,
    variable_to_factor_message,
)
from .models import (
    CompoundModel,
    HeightMeasurementModel,
    MeasurementModel,
    RelativePose2dModel,
    RobustKernel,
    SmoothnessModel,
    UnaryAnchorModel,
    interp_lambda,
)
from .scenarios import (
    PoseGraphScenario,
    SlamConfig,
    SurfaceScenario,
    WorldState,
    build_surface_graph,
    classify_factors,
    gen_pose_graph,
    load_surface,
    new_world,
    pose_error_vs_ground_truth,
    run_script,
    scale_measurement_precision,
    set_robust,
    surface_grid,
    world_step,
)
from .schedules import (
    ConvergenceReport,
    ScheduleKind,
    chain_order,
    floodfill_sweep,
    message_residual,
    random_step,
    run_until,
    sync_step,
)
from .snapshots import (
    SCHEMA_VERSION,
    build_snapshot,
    read_snapshot,
    validate_snapshot,
    write_snapshot,
)

__version__ = "0.1.0"

__all__ = [
    "BatchSolution",
    "ComparisonMetrics",
    "CompoundModel",
    "ConvergenceReport",
    "DampingConfig",
    "DimensionMismatch",
    "Edge",
    "EmptyDataset",
    "EmptyGraph",
    "FactorGraph",
    "FactorNode",
    "GaussianInfo",
    "GbpError",
    "HeightMeasurementModel",
    "InvalidCommand",
    "Mailbox",
    "MeasurementModel",
    "Message",
    "MomentGaussian",
    "NotAChain",
    "OutOfSpan",
    "ParseError",
    "PoseGraphScenario",
    "RelativePose2dModel",
    "RelinearizePolicy",
    "RobustKernel",
    "SCHEMA_VERSION",
    "ScheduleKind",
    "SchemaError",
    "SingularBlock",
    "SingularSystem",
    "SlamConfig",
    "SmoothnessModel",
    "SurfaceScenario",
    "UnaryAnchorModel",
    "UnknownEdge",
    "UnknownVariable",
    "VariableNode",
    "WorldState",
    "build_snapshot",
    "build_surface_graph",
    "chain_order",
    "classify_factors",
    "compare",
    "factor_to_variable_message",
    "floodfill_sweep",
    "from_moments",
    "gen_pose_graph",
    "interp_lambda",
    "load_surface",
    "mahalanobis",
    "marginalize",
    "marginalize_blocks",
    "mean_or_zero",
    "message_residual",
    "moments_or_relaxed",
    "new_world",
    "pose_error_vs_ground_truth",
    "product",
    "random_step",
    "read_snapshot",
    "relinearize",
    "reorder",
    "robust_scale",
    "run_script",
    "run_until",
    "scale_measurement_precision",
    "set_robust",
    "solve",
    "solve_robust",
    "surface_grid",
    "sync_step",
    "to_moments",
    "validate_snapshot",
    "variable_to_factor_message",
    "world_step",
    "write_snapshot",
]
