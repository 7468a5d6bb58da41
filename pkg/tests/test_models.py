"""Measurement model tests: hand values, finite-difference Jacobians."""

import numpy as np
import pytest

from gbpsim.batch import solve
from gbpsim.errors import DimensionMismatch, OutOfSpan
from gbpsim.graph import FactorGraph
from gbpsim.models import (
    CompoundModel,
    HeightMeasurementModel,
    RelativePose2dModel,
    RobustKernel,
    SmoothnessModel,
    UnaryAnchorModel,
    interp_lambda,
)


def fd_jacobian(model, x0, eps=1e-6):
    """Central-difference Jacobian of model.h at x0."""
    x0 = np.asarray(x0, dtype=float)
    cols = []
    for k in range(x0.shape[0]):
        step = np.zeros_like(x0)
        step[k] = eps
        cols.append((model.h(x0 + step) - model.h(x0 - step)) / (2.0 * eps))
    return np.column_stack(cols)


# ------------------------------------------------------------ interpolation


def test_interp_lambda_values():
    assert interp_lambda(0.0, 0.0, 2.0) == 0.0
    assert interp_lambda(2.0, 0.0, 2.0) == 1.0
    assert interp_lambda(0.5, 0.0, 2.0) == 0.25
    assert interp_lambda(1.5, 1.0, 3.0) == 0.25


def test_interp_lambda_rejects_outside_span():
    with pytest.raises(OutOfSpan):
        interp_lambda(-0.1, 0.0, 1.0)
    with pytest.raises(OutOfSpan):
        interp_lambda(1.1, 0.0, 1.0)


def test_interp_lambda_rejects_degenerate_span():
    with pytest.raises(OutOfSpan):
        interp_lambda(1.0, 1.0, 1.0)
    with pytest.raises(OutOfSpan):
        interp_lambda(1.0, 2.0, 1.0)


# ------------------------------------------------------------------ height


def test_height_model_prediction_interpolates():
    m = HeightMeasurementModel(x_obs=1.0, y_obs=3.0, x_m1=0.0, x_m2=4.0)
    # lam = 0.25: three quarters of y1, a quarter of y2
    assert np.allclose(m.h(np.array([8.0, 4.0])), [7.0])
    assert np.allclose(m.jacobian(np.zeros(2)), [[0.75, 0.25]])


def test_height_model_precision_from_sigma():
    m = HeightMeasurementModel(0.5, 1.0, 0.0, 1.0, sigma_m=0.1)
    assert np.allclose(m.lam_meas, [[100.0]])


def test_height_model_linearization_hand_value():
    # midpoint observation y=2 with sigma 1: J = [0.5, 0.5], lam = 1
    m = HeightMeasurementModel(1.0, 2.0, 0.0, 2.0, sigma_m=1.0)
    g = m.linearize(np.zeros(2))
    assert np.allclose(g.eta, [1.0, 1.0])
    assert np.allclose(g.lam, [[0.25, 0.25], [0.25, 0.25]])


# -------------------------------------------------------------- smoothness


def test_smoothness_penalizes_height_difference():
    m = SmoothnessModel(sigma_p=0.1)
    assert np.allclose(m.h(np.array([1.0, 4.0])), [3.0])
    assert np.allclose(m.jacobian(np.zeros(2)), [[-1.0, 1.0]])
    assert np.allclose(m.residual(np.array([2.0, 2.0])), [0.0])


def test_smoothness_linearization_pattern():
    m = SmoothnessModel(sigma_p=1.0)
    g = m.linearize(np.zeros(2))
    assert np.allclose(g.eta, [0.0, 0.0])
    assert np.allclose(g.lam, [[1.0, -1.0], [-1.0, 1.0]])


# ----------------------------------------------------------- relative pose


def test_relative_pose_prediction_and_jacobian():
    m = RelativePose2dModel([1.0, -2.0], sigma_m=0.05)
    x = np.array([1.0, 1.0, 4.0, -1.0])
    assert np.allclose(m.h(x), [3.0, -2.0])
    assert np.allclose(m.jacobian(x), np.hstack([-np.eye(2), np.eye(2)]))
    assert np.allclose(m.lam_meas, np.eye(2) * 400.0)


def test_relative_pose_translation_invariance():
    m = RelativePose2dModel([0.5, 0.5], sigma_m=0.1)
    x = np.array([0.3, -0.2, 1.1, 0.4])
    shift = np.array([7.0, -3.0, 7.0, -3.0])
    assert np.allclose(m.h(x), m.h(x + shift))


def test_relative_pose_rejects_wrong_measurement_dim():
    with pytest.raises(DimensionMismatch):
        RelativePose2dModel([1.0, 2.0, 3.0], sigma_m=0.1)


# ------------------------------------------------------------------ anchor


def test_anchor_is_identity_observation():
    m = UnaryAnchorModel([2.0, -1.0], sigma=0.01)
    x = np.array([0.5, 0.5])
    assert np.allclose(m.h(x), x)
    assert np.allclose(m.jacobian(x), np.eye(2))
    assert np.allclose(m.lam_meas, np.eye(2) * 1e4)


def test_strong_anchor_dominates_weak():
    # one variable, weak prior at 0 and strong prior at 5: posterior sits
    # at the precision-weighted mean, essentially the strong value
    graph = FactorGraph()
    v = graph.add_variable(1)
    graph.add_factor(UnaryAnchorModel([0.0], sigma=100.0), [v])
    graph.add_factor(UnaryAnchorModel([5.0], sigma=0.01), [v])
    sol = solve(graph)
    assert abs(sol.per_variable[v].mu[0] - 5.0) < 1e-6


# ---------------------------------------------------------------- compound


def test_compound_stacks_parts():
    smooth = SmoothnessModel(sigma_p=0.1)
    meas = HeightMeasurementModel(0.5, 2.0, 0.0, 1.0, sigma_m=0.2)
    comp = CompoundModel([smooth, meas])
    x = np.array([1.0, 3.0])
    assert np.allclose(comp.h(x), np.concatenate([smooth.h(x), meas.h(x)]))
    assert np.allclose(comp.z, [0.0, 2.0])
    assert np.allclose(
        comp.lam_meas, np.diag([1.0 / 0.01, 1.0 / 0.04])
    )
    assert comp.jacobian(x).shape == (2, 2)
    assert comp.is_linear


def test_compound_linearization_is_sum_of_parts():
    smooth = SmoothnessModel(sigma_p=0.3)
    meas = HeightMeasurementModel(0.25, 1.5, 0.0, 1.0, sigma_m=0.2)
    comp = CompoundModel([smooth, meas])
    x0 = np.zeros(2)
    g = comp.linearize(x0)
    gs = smooth.linearize(x0)
    gm = meas.linearize(x0)
    assert np.allclose(g.eta, gs.eta + gm.eta, atol=1e-14)
    assert np.allclose(g.lam, gs.lam + gm.lam, atol=1e-14)


def test_compound_rejects_mismatched_parts():
    with pytest.raises(DimensionMismatch):
        CompoundModel([SmoothnessModel(), UnaryAnchorModel([0.0], 1.0)])
    with pytest.raises(DimensionMismatch):
        CompoundModel([])


# ------------------------------------------------------- jacobians vs h


def test_jacobians_match_finite_differences():
    rng = np.random.default_rng(7)
    models = [
        HeightMeasurementModel(0.3, 1.0, 0.0, 1.0),
        SmoothnessModel(),
        RelativePose2dModel([1.0, 2.0], sigma_m=0.1),
        UnaryAnchorModel([0.0, 0.0], sigma=1.0),
        CompoundModel([SmoothnessModel(), HeightMeasurementModel(0.7, 0.0, 0.0, 1.0)]),
    ]
    for model in models:
        for _ in range(20):
            x0 = rng.normal(0.0, 2.0, size=model.x_dim)
            assert np.allclose(
                model.jacobian(x0), fd_jacobian(model, x0), atol=1e-6
            ), model.kind


def test_linearization_independent_of_point_for_linear_models():
    m = RelativePose2dModel([0.3, -0.4], sigma_m=0.2)
    a = m.linearize(np.zeros(4))
    b = m.linearize(np.array([5.0, -2.0, 1.0, 9.0]))
    assert np.allclose(a.eta, b.eta, atol=1e-12)
    assert np.allclose(a.lam, b.lam, atol=1e-12)


# ------------------------------------------------------------- scaled copy


def test_scaled_multiplies_precision_only():
    kernel = RobustKernel("huber", 4.0)
    m = RelativePose2dModel([1.0, 0.0], sigma_m=0.1, robust=kernel)
    m2 = m.scaled(100.0)
    assert np.allclose(m2.lam_meas, m.lam_meas * 100.0)
    assert np.allclose(m2.z, m.z)
    assert m2.robust is kernel
    assert np.allclose(m.lam_meas, np.eye(2) * 100.0)  # original untouched


def test_scaled_rejects_nonpositive():
    m = SmoothnessModel()
    with pytest.raises(ValueError):
        m.scaled(0.0)
    with pytest.raises(ValueError):
        m.scaled(-2.0)


def test_with_robust_swaps_kernel_without_mutation():
    m = RelativePose2dModel([1.0, 0.0], sigma_m=0.1)
    kernel = RobustKernel("huber", 4.0)
    m2 = m.with_robust(kernel)
    assert m.robust is None
    assert m2.robust is kernel
    assert np.allclose(m2.lam_meas, m.lam_meas)


def test_robust_kernel_validation():
    with pytest.raises(ValueError):
        RobustKernel("tukey", 4.0)
    with pytest.raises(ValueError):
        RobustKernel("huber", 0.0)
    RobustKernel("none", 4.0)  # fine
