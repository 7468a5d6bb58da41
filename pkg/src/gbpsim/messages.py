"""The GBP kernel: message computation, robust rescaling, damping.

A variable-to-factor message is the product of the committed messages
arriving at the variable from every other factor. A factor-to-variable
message starts from the factor's (possibly robust-rescaled) linearization,
conditions on the other variables' incoming messages by adding their (eta,
lam) into the matching blocks, brings the target block to the top, and
marginalizes everything else out with a Schur complement.

Robust kernels act per message pass: the Mahalanobis distance of the factor
at the incoming means picks a scale k_R, and both eta and lam of the
linearization are multiplied by it for this pass only. Beyond the threshold
the Huber scale 2 N/M - N^2/M^2 turns the quadratic energy into a straight
line; the constant kernel's N^2/M^2 caps it.

Damping blends a new message with the previously committed one,
out = (1 - beta) new + beta old, componentwise on (eta, lam). It changes the
path to the fixed point, never the fixed point itself.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import SingularBlock, UnknownEdge, UnknownVariable
from .gaussians import GaussianInfo, _chol_solve, marginalize

if TYPE_CHECKING:
    from .graph import FactorGraph

# rescaled messages never vanish entirely; far outliers are weakened, not erased
K_R_FLOOR = 1e-6


@dataclass(frozen=True)
class DampingConfig:
    """Weight beta in [0, 1) on the previous committed message; 0 disables."""

    beta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"damping beta must be in [0, 1), got {self.beta}")


class RelinearizePolicy(enum.Enum):
    """When factor linearizations are refreshed.

    All shipped models are linear, so AT_CONSTRUCTION is the default and the
    other policies only matter for user-supplied nonlinear models.
    """

    AT_CONSTRUCTION = "at-construction"
    EVERY_K_SYNC = "every-k-sync"
    EVERY_MESSAGE = "every-message"


def mahalanobis(model, x_s) -> float:
    """Residual magnitude in standard deviations: sqrt((z-h)^T lam (z-h))."""
    r = model.residual(np.asarray(x_s, dtype=float))
    return float(np.sqrt(r @ model.lam_meas @ r))


def robust_scale(kernel, m_s: float) -> float:
    """Energy scale k_R in (0, 1] for a residual of m_s standard deviations.

    Inside the threshold (m_s <= n_sigma) every kernel is plain Gaussian and
    k_R = 1. Beyond it, huber returns 2 n/m - n^2/m^2 and constant returns
    n^2/m^2, both floored at K_R_FLOOR.
    """
    if kernel is None or kernel.kind == "none" or m_s <= kernel.n_sigma:
        return 1.0
    n = kernel.n_sigma
    if kernel.kind == "huber":
        k = 2.0 * n / m_s - (n * n) / (m_s * m_s)
    else:
        k = (n * n) / (m_s * m_s)
    return max(k, K_R_FLOOR)


def relinearize(graph: "FactorGraph", factor_id: int):
    """Refresh a factor's cached linearization at the incoming-message means.

    Linear models are left untouched (their cache is exact everywhere), which
    keeps the cached arrays bitwise stable.
    """
    factor = graph.factors[factor_id]
    if factor.model.is_linear:
        return
    x0, _ = graph.factor_incoming_state(factor_id)
    factor.x0 = x0
    factor.linearization = factor.model.linearize(x0)


def variable_to_factor_message(
    graph: "FactorGraph", variable_id: int, factor_id: int
) -> GaussianInfo:
    """Product of committed factor-to-variable messages on the other edges.

    A variable with no other edge sends the zero-information message (the
    leaf case).
    """
    var = graph.variables.get(variable_id)
    if var is None:
        raise UnknownVariable(f"variable {variable_id} not in graph")
    target = graph.edge_between(variable_id, factor_id)
    eta = np.zeros(var.dim)
    lam = np.zeros((var.dim, var.dim))
    edges = graph.edges
    for eid in var.edges:
        if eid == target.id:
            continue
        payload = edges[eid].factor_to_var.committed.payload
        eta += payload.eta
        lam += payload.lam
    # sums of symmetric matrices stay symmetric
    return GaussianInfo.trusted(eta, lam)


def _robust_pass_scale(graph: "FactorGraph", factor) -> float:
    """k_R for this pass, from the incoming means including the target's.

    If every incoming block is uninformative there is no measurable residual
    yet and rescaling is skipped.
    """
    x_s, informative = graph.factor_incoming_state(factor.id)
    if not informative:
        factor.robust_state = ("gaussian", 1.0)
        return 1.0
    k_r = robust_scale(factor.model.robust, mahalanobis(factor.model, x_s))
    factor.robust_state = ("scaled", k_r) if k_r < 1.0 else ("gaussian", 1.0)
    return k_r


def _schur_onto_block(eta, lam, lo, hi, olo, ohi) -> GaussianInfo:
    """Marginalize a two-block joint onto [lo:hi], dropping [olo:ohi].

    Same math and jitter policy as gaussians.marginalize, specialized to
    contiguous slices with closed-form solves for the 1- and 2-dimensional
    dropped blocks every shipped scenario produces.
    """
    eta_a = eta[lo:hi]
    eta_b = eta[olo:ohi]
    lam_aa = lam[lo:hi, lo:hi]
    lam_ab = lam[lo:hi, olo:ohi]
    lam_bb = lam[olo:ohi, olo:ohi]

    d = ohi - olo
    inv_bb = None
    if d == 1:
        b00 = lam_bb[0, 0]
        if b00 > 0.0:
            inv_bb = np.array([[1.0 / b00]])
    elif d == 2:
        a, b, c = lam_bb[0, 0], lam_bb[0, 1], lam_bb[1, 1]
        det = a * c - b * b
        if a > 0.0 and det > 0.0:
            inv_bb = np.array([[c / det, -b / det], [-b / det, a / det]])
    if inv_bb is None:
        rhs = np.concatenate([eta_b[:, None], lam_ab.T], axis=1)
        try:
            sol = _chol_solve(lam_bb, rhs)
        except np.linalg.LinAlgError:
            jitter = 1e-9 * (np.trace(lam_bb) / d + 1.0)
            try:
                sol = _chol_solve(lam_bb + jitter * np.eye(d), rhs)
            except np.linalg.LinAlgError as exc:
                raise SingularBlock(
                    "marginalized-out block is singular even after jitter"
                ) from exc
        eta_m = eta_a - lam_ab @ sol[:, 0]
        lam_m = lam_aa - lam_ab @ sol[:, 1:]
    else:
        w = lam_ab @ inv_bb
        eta_m = eta_a - w @ eta_b
        lam_m = lam_aa - w @ lam_ab.T
    return GaussianInfo.trusted(eta_m, (lam_m + lam_m.T) / 2.0)


def factor_to_variable_message(
    graph: "FactorGraph",
    factor_id: int,
    target_variable_id: int,
    damping: DampingConfig | None = None,
    k_r: float | None = None,
) -> GaussianInfo:
    """Condition the factor on the other variables and marginalize onto one.

    Reads only committed mailboxes; the caller stages and commits the result
    per its schedule's semantics. k_r overrides the robust rescale for this
    pass (the synchronous schedule computes it once per factor per iteration;
    both of a factor's outgoing messages read the same committed state, so
    the shared value is exact).
    """
    factor = graph.factors[factor_id]
    if target_variable_id not in factor.variable_ids:
        raise UnknownEdge(
            f"factor {factor_id} does not touch variable {target_variable_id}"
        )

    if k_r is None:
        if factor.model.robust is not None and factor.model.robust.kind != "none":
            k_r = _robust_pass_scale(graph, factor)
        else:
            k_r = 1.0

    lin = factor.linearization
    if factor.arity == 1:
        out = GaussianInfo(lin.eta * k_r, lin.lam * k_r) if k_r != 1.0 else lin
    elif factor.arity == 2:
        eta = lin.eta * k_r if k_r != 1.0 else lin.eta.copy()
        lam = lin.lam * k_r if k_r != 1.0 else lin.lam.copy()
        offsets = factor.offsets
        target_block = 0 if factor.variable_ids[0] == target_variable_id else 1
        other_vid = factor.variable_ids[1 - target_block]
        olo, ohi = offsets[1 - target_block], offsets[2 - target_block]
        payload = graph.edge_between(other_vid, factor.id).var_to_factor.committed.payload
        eta[olo:ohi] += payload.eta
        lam[olo:ohi, olo:ohi] += payload.lam
        lo, hi = offsets[target_block], offsets[target_block + 1]
        out = _schur_onto_block(eta, lam, lo, hi, olo, ohi)
    else:
        eta = lin.eta * k_r if k_r != 1.0 else lin.eta.copy()
        lam = lin.lam * k_r if k_r != 1.0 else lin.lam.copy()
        offsets = factor.offsets
        target_block = factor.variable_ids.index(target_variable_id)
        for block, vid in enumerate(factor.variable_ids):
            if block == target_block:
                continue
            payload = graph.edge_between(vid, factor.id).var_to_factor.committed.payload
            lo, hi = offsets[block], offsets[block + 1]
            eta[lo:hi] += payload.eta
            lam[lo:hi, lo:hi] += payload.lam
        # target block to the top, then Schur-complement the rest away
        order = [target_block] + [b for b in range(factor.arity) if b != target_block]
        idx = np.concatenate([np.arange(offsets[b], offsets[b + 1]) for b in order])
        joint = GaussianInfo(eta[idx], lam[np.ix_(idx, idx)])
        out = marginalize(joint, np.arange(offsets[target_block + 1] - offsets[target_block]))

    if damping is not None and damping.beta > 0.0:
        beta = damping.beta
        old = graph.edge_between(target_variable_id, factor_id).factor_to_var.committed.payload
        out = GaussianInfo(
            (1.0 - beta) * out.eta + beta * old.eta,
            (1.0 - beta) * out.lam + beta * old.lam,
        )
    return out
