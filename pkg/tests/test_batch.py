"""Tests for the dense batch solver and the GBP-vs-batch comparison."""

from __future__ import annotations

import numpy as np
import pytest

from gbpsim.batch import assemble, compare, solve, solve_robust
from gbpsim.errors import SingularSystem
from gbpsim.graph import FactorGraph
from gbpsim.models import (
    RelativePose2dModel,
    RobustKernel,
    SmoothnessModel,
    UnaryAnchorModel,
)
from gbpsim.schedules import ScheduleKind, floodfill_sweep, run_until


def test_assemble_single_unary_equals_its_linearization():
    g = FactorGraph()
    v = g.add_variable(2)
    f = g.add_factor(UnaryAnchorModel([1.0, 2.0], sigma=0.5), [v])
    eta, lam = assemble(g)
    lin = g.factors[f].linearization
    np.testing.assert_array_equal(eta, lin.eta)
    np.testing.assert_array_equal(lam, lin.lam)


def test_assemble_disjoint_factors_block_diagonal():
    g = FactorGraph()
    a = g.add_variable(2)
    b = g.add_variable(2)
    g.add_factor(UnaryAnchorModel([1.0, 0.0], sigma=1.0), [a])
    g.add_factor(UnaryAnchorModel([0.0, 3.0], sigma=0.5), [b])
    _, lam = assemble(g)
    np.testing.assert_array_equal(lam[0:2, 2:4], np.zeros((2, 2)))
    np.testing.assert_array_equal(lam[2:4, 0:2], np.zeros((2, 2)))


def test_assemble_chain_is_tridiagonal_in_blocks():
    g = FactorGraph()
    vids = [g.add_variable(1) for _ in range(5)]
    for a, b in zip(vids, vids[1:]):
        g.add_factor(SmoothnessModel(), [a, b])
    _, lam = assemble(g)
    for i in range(5):
        for j in range(5):
            if abs(i - j) > 1:
                assert lam[i, j] == 0.0


def test_solve_single_anchor():
    g = FactorGraph()
    v = g.add_variable(2)
    g.add_factor(UnaryAnchorModel([1.0, 2.0], sigma=1.0), [v])
    sol = solve(g)
    np.testing.assert_allclose(sol.mean, [1.0, 2.0])
    np.testing.assert_allclose(sol.covariance, np.eye(2))
    np.testing.assert_allclose(sol.per_variable[v].mu, [1.0, 2.0])


def test_solve_relative_chain_composes_means():
    g = FactorGraph()
    a = g.add_variable(2)
    b = g.add_variable(2)
    g.add_factor(UnaryAnchorModel([1.0, 1.0], sigma=0.001), [a])
    g.add_factor(RelativePose2dModel([2.0, -1.0], sigma_m=0.3), [a, b])
    sol = solve(g)
    np.testing.assert_allclose(sol.per_variable[b].mu, [3.0, 0.0], atol=1e-6)


def test_solve_unanchored_graph_is_singular():
    g = FactorGraph()
    a = g.add_variable(2)
    b = g.add_variable(2)
    g.add_factor(RelativePose2dModel([1.0, 0.0], sigma_m=0.1), [a, b])
    with pytest.raises(SingularSystem):
        solve(g)


def test_solve_invariant_under_variable_ordering():
    def build(reorder):
        g = FactorGraph()
        if reorder:
            b = g.add_variable(2, "b")
            a = g.add_variable(2, "a")
        else:
            a = g.add_variable(2, "a")
            b = g.add_variable(2, "b")
        g.add_factor(UnaryAnchorModel([0.5, -0.5], sigma=0.1), [a])
        g.add_factor(RelativePose2dModel([1.0, 2.0], sigma_m=0.2), [a, b])
        g.add_factor(UnaryAnchorModel([0.0, 0.0], sigma=10.0), [b])
        return g, a, b

    g1, a1, b1 = build(False)
    g2, a2, b2 = build(True)
    s1 = solve(g1)
    s2 = solve(g2)
    for v1, v2 in ((a1, a2), (b1, b2)):
        np.testing.assert_allclose(s1.per_variable[v1].mu, s2.per_variable[v2].mu, atol=1e-12)
        np.testing.assert_allclose(
            s1.per_variable[v1].sigma, s2.per_variable[v2].sigma, atol=1e-12
        )


def test_compare_converged_tree_is_batch():
    g = FactorGraph()
    vids = [g.add_variable(1) for _ in range(7)]
    for a, b in zip(vids, vids[1:]):
        g.add_factor(SmoothnessModel(sigma_p=0.4), [a, b])
    g.add_factor(UnaryAnchorModel([2.0], sigma=0.2), [vids[0]])
    g.add_factor(UnaryAnchorModel([0.0], sigma=0.2), [vids[-1]])
    floodfill_sweep(g)

    metrics = compare(g, solve(g))
    assert metrics.max_mean_err <= 1e-9
    for ratio in metrics.cov_trace_ratio.values():
        assert ratio == pytest.approx(1.0, abs=1e-9)


def test_compare_reports_overconfidence_fraction():
    g = FactorGraph()
    vids = [g.add_variable(2, "pose") for _ in range(4)]
    gt = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    pairs = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]
    for i, j in pairs:
        g.add_factor(RelativePose2dModel(gt[j] - gt[i], sigma_m=0.1), [vids[i], vids[j]])
    g.add_factor(UnaryAnchorModel(gt[0], sigma=0.01), [vids[0]])
    for v in vids:
        g.add_factor(UnaryAnchorModel([0.0, 0.0], sigma=100.0), [v])
    report = run_until(g, ScheduleKind.SYNC, max_iters=2000, tol=1e-12)
    assert report.converged
    metrics = compare(g, solve(g))
    assert metrics.max_mean_err <= 1e-6
    # loops make beliefs overconfident on most variables
    assert metrics.overconfident_fraction > 0.5


def test_solve_robust_downweights_outlier():
    g = FactorGraph()
    v = g.add_variable(1)
    for _ in range(3):
        g.add_factor(UnaryAnchorModel([0.0], sigma=1.0), [v])
    g.add_factor(
        UnaryAnchorModel([10.0], sigma=1.0, robust=RobustKernel("huber", 1.0)), [v]
    )
    plain = solve(g)
    robust = solve_robust(g)
    assert plain.per_variable[v].mu[0] == pytest.approx(2.5)
    assert abs(robust.per_variable[v].mu[0]) < abs(plain.per_variable[v].mu[0]) / 2
