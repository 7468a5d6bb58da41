"""Dense batch solver: the correctness oracle for message passing.

All cached factor linearizations are scattered into one global information
pair (eta_full, lam_full), which a dense Cholesky turns into the exact joint
mean and covariance. Per-variable marginals are plain sub-blocks. The demo
graphs stay small (a few hundred state dimensions), so the solver is kept
deliberately boring: no sparsity, no tricks, nothing to doubt when GBP
beliefs are checked against it.

The default solve ignores robust kernels (it is the reference that does not
know about outliers). solve_robust applies the per-factor Huber/constant
scale around the current batch estimate in a fixed-point loop, for
comparisons against robust GBP runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import SingularSystem
from .gaussians import MomentGaussian, moments_or_relaxed
from .graph import FactorGraph
from .messages import mahalanobis, robust_scale


@dataclass
class BatchSolution:
    ordering: Dict[int, int]  # variable id -> offset into the full state
    mean: np.ndarray
    covariance: np.ndarray
    per_variable: Dict[int, MomentGaussian]


@dataclass
class ComparisonMetrics:
    per_variable_mean_err: Dict[int, float]
    max_mean_err: float
    cov_trace_ratio: Dict[int, float]
    overconfident_fraction: float


def variable_offsets(graph: FactorGraph) -> Tuple[Dict[int, int], int]:
    ordering: Dict[int, int] = {}
    at = 0
    for vid, var in graph.variables.items():
        ordering[vid] = at
        at += var.dim
    return ordering, at


def assemble(
    graph: FactorGraph, scales: Optional[Dict[int, float]] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Scatter every cached linearization into the global (eta, lam).

    scales optionally multiplies factor fid's contribution by scales[fid]
    (used by the iteratively rescaled robust mode); missing ids default to 1.
    """
    ordering, total = variable_offsets(graph)
    eta = np.zeros(total)
    lam = np.zeros((total, total))
    for factor in graph.factors.values():
        k = 1.0 if scales is None else scales.get(factor.id, 1.0)
        lin = factor.linearization
        dims = graph.block_dims(factor)
        local = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        spans = [
            np.arange(ordering[vid], ordering[vid] + dims[i])
            for i, vid in enumerate(factor.variable_ids)
        ]
        for i, rows in enumerate(spans):
            eta[rows] += k * lin.eta[local[i] : local[i + 1]]
            for j, cols in enumerate(spans):
                lam[np.ix_(rows, cols)] += k * lin.lam[
                    local[i] : local[i + 1], local[j] : local[j + 1]
                ]
    return eta, (lam + lam.T) / 2.0


def solve(graph: FactorGraph, scales: Optional[Dict[int, float]] = None) -> BatchSolution:
    """Dense solve: mean = lam^-1 eta, covariance = lam^-1, sliced marginals."""
    eta, lam = assemble(graph, scales)
    try:
        low = np.linalg.cholesky(lam)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(
            "assembled system is singular; the graph lacks anchoring"
        ) from exc
    identity = np.eye(lam.shape[0])
    cov = np.linalg.solve(low.T, np.linalg.solve(low, identity))
    cov = (cov + cov.T) / 2.0
    mean = np.linalg.solve(low.T, np.linalg.solve(low, eta))

    ordering, _ = variable_offsets(graph)
    per_variable = {}
    for vid, var in graph.variables.items():
        lo = ordering[vid]
        hi = lo + var.dim
        per_variable[vid] = MomentGaussian(mean[lo:hi], cov[lo:hi, lo:hi])
    return BatchSolution(ordering, mean, cov, per_variable)


def solve_robust(graph: FactorGraph, iters: int = 10) -> BatchSolution:
    """Iteratively rescaled batch: re-solve with per-factor k_R until stable."""
    solution = solve(graph)
    for _ in range(iters):
        scales: Dict[int, float] = {}
        for factor in graph.factors.values():
            kernel = factor.model.robust
            if kernel is None or kernel.kind == "none":
                continue
            x_s = np.concatenate(
                [solution.per_variable[vid].mu for vid in factor.variable_ids]
            )
            scales[factor.id] = robust_scale(kernel, mahalanobis(factor.model, x_s))
        updated = solve(graph, scales)
        if np.max(np.abs(updated.mean - solution.mean)) < 1e-12:
            return updated
        solution = updated
    return solution


def compare(graph: FactorGraph, batch: BatchSolution) -> ComparisonMetrics:
    """Divergence of current GBP beliefs from a batch solution.

    Reports the per-variable mean error, its max, the covariance trace ratio
    trace(sigma_gbp) / trace(sigma_batch), and the fraction of variables the
    beliefs are overconfident about (ratio < 1).
    """
    mean_err: Dict[int, float] = {}
    trace_ratio: Dict[int, float] = {}
    overconfident = 0
    for vid in graph.variables:
        mu, sigma = moments_or_relaxed(graph.belief(vid))
        marginal = batch.per_variable[vid]
        mean_err[vid] = float(np.linalg.norm(mu - marginal.mu))
        ratio = float(np.trace(sigma) / np.trace(marginal.sigma))
        trace_ratio[vid] = ratio
        if ratio < 1.0:
            overconfident += 1
    n = max(len(graph.variables), 1)
    return ComparisonMetrics(
        per_variable_mean_err=mean_err,
        max_mean_err=max(mean_err.values(), default=0.0),
        cov_trace_ratio=trace_ratio,
        overconfident_fraction=overconfident / n,
    )
