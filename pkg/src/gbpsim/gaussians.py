"""Information-form Gaussian algebra.

A Gaussian over a flat real vector is carried around as the pair (eta, lam)
where lam is the precision (inverse covariance) and eta = lam @ mu is the
information vector. This form is closed under the three things message
passing does all day: multiplying distributions (add the pairs), permuting
the state vector, and marginalizing (a Schur complement on the precision).
It also represents rank-deficient states: the all-zero pair is the valid
"know nothing" distribution, which has no moment form at all.

All operations are pure functions over immutable values; results are
symmetrized because Schur complements accumulate asymmetry in floating
point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidPermutation,
    SingularBlock,
    SingularCovariance,
    SingularPrecision,
)

# Condition-number cap for moment -> information conversion.
COND_CAP = 1e12


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {v.shape}")
    return v


def _as_matrix(m, dim: int) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim == 0 and dim == 1:
        a = a.reshape(1, 1)
    if a.shape != (dim, dim):
        raise DimensionMismatch(f"expected a {dim}x{dim} matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class GaussianInfo:
    """Information-form Gaussian: eta (d,) and symmetric PSD lam (d, d).

    The constructor symmetrizes lam and freezes both arrays. (eta=0, lam=0)
    is valid and denotes the uninformative distribution.
    """

    eta: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        eta = _as_vector(self.eta)
        lam = _as_matrix(self.lam, eta.shape[0])
        lam = (lam + lam.T) / 2.0
        eta.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "lam", lam)

    @property
    def dim(self) -> int:
        return self.eta.shape[0]

    @property
    def is_zero(self) -> bool:
        """True for the exactly-uninformative (all-zero) instance."""
        return not (self.eta.any() or self.lam.any())

    @staticmethod
    def zero(dim: int) -> "GaussianInfo":
        return GaussianInfo(np.zeros(dim), np.zeros((dim, dim)))

    @staticmethod
    def trusted(eta: np.ndarray, lam: np.ndarray) -> "GaussianInfo":
        """Fast constructor for hot paths, skipping validation.

        The caller guarantees float arrays of matching shape with lam already
        symmetric. Arrays are frozen but not copied.
        """
        g = object.__new__(GaussianInfo)
        eta.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(g, "eta", eta)
        object.__setattr__(g, "lam", lam)
        return g


@dataclass(frozen=True)
class MomentGaussian:
    """Moment-form Gaussian: mean mu (d,) and covariance sigma (d, d)."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = _as_vector(self.mu)
        sigma = _as_matrix(self.sigma, mu.shape[0])
        sigma = (sigma + sigma.T) / 2.0
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def _chol_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b for symmetric positive definite a via Cholesky.

    Raises np.linalg.LinAlgError if a is not positive definite; callers
    translate that into the appropriate package error.
    """
    low = np.linalg.cholesky(a)
    y = np.linalg.solve(low, b)
    return np.linalg.solve(low.T, y)


def from_moments(m: MomentGaussian) -> GaussianInfo:
    """Convert moments to information form: lam = sigma^-1, eta = lam @ mu."""
    if np.linalg.cond(m.sigma) > COND_CAP:
        raise SingularCovariance(
            f"covariance condition number exceeds {COND_CAP:g}"
        )
    try:
        lam = _chol_solve(m.sigma, np.eye(m.dim))
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("covariance is not positive definite") from exc
    return GaussianInfo(lam @ m.mu, lam)


def to_moments(g: GaussianInfo) -> MomentGaussian:
    """Convert information form to moments: sigma = lam^-1, mu = sigma @ eta."""
    try:
        sigma = _chol_solve(g.lam, np.eye(g.dim))
    except np.linalg.LinAlgError as exc:
        raise SingularPrecision("precision is not positive definite") from exc
    return MomentGaussian(sigma @ g.eta, sigma)


def mean_or_zero(g: GaussianInfo) -> np.ndarray:
    """Mean of g, with fallbacks for partial information.

    The all-zero message has no mean; by convention it contributes the zero
    vector. A rank-deficient but nonzero precision gets the minimum-norm
    least-squares mean, which agrees with lam^-1 @ eta whenever that exists.
    """
    if g.is_zero:
        return np.zeros(g.dim)
    # closed forms for the tiny blocks message passing lives on
    if g.dim == 1:
        l00 = g.lam[0, 0]
        if l00 > 0.0:
            return g.eta / l00
    elif g.dim == 2:
        a, b, c = g.lam[0, 0], g.lam[0, 1], g.lam[1, 1]
        det = a * c - b * b
        if a > 0.0 and det > 0.0:
            e0, e1 = g.eta
            return np.array([(c * e0 - b * e1) / det, (a * e1 - b * e0) / det])
    try:
        low = np.linalg.cholesky(g.lam)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(g.lam, g.eta, rcond=None)[0]
    return np.linalg.solve(low.T, np.linalg.solve(low, g.eta))


def product(a: GaussianInfo, b: GaussianInfo) -> GaussianInfo:
    """Multiply two Gaussians: add information vectors and precisions."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"product of dim {a.dim} with dim {b.dim}")
    return GaussianInfo(a.eta + b.eta, a.lam + b.lam)


def _block_offsets(dims: Sequence[int]) -> np.ndarray:
    return np.concatenate([[0], np.cumsum(dims)])


def reorder(g: GaussianInfo, perm: Sequence[int], dims: Sequence[int]) -> GaussianInfo:
    """Permute the block structure of g.

    dims gives the block sizes of g's state vector in its current order;
    perm[i] is the index of the input block placed at output position i.
    Applying the inverse permutation restores g exactly.
    """
    dims = list(dims)
    if sum(dims) != g.dim:
        raise DimensionMismatch(
            f"block dims sum to {sum(dims)}, state dim is {g.dim}"
        )
    if sorted(perm) != list(range(len(dims))):
        raise InvalidPermutation(f"{list(perm)} is not a permutation of {len(dims)} blocks")
    offsets = _block_offsets(dims)
    idx = np.concatenate(
        [np.arange(offsets[b], offsets[b] + dims[b]) for b in perm]
    ).astype(int)
    return GaussianInfo(g.eta[idx], g.lam[np.ix_(idx, idx)])


def marginalize(g: GaussianInfo, keep: Sequence[int]) -> GaussianInfo:
    """Marginalize g onto the flat indices in keep (Schur complement).

    With alpha = keep and beta = the rest:

        eta_a' = eta_a - lam_ab lam_bb^-1 eta_b
        lam_a' = lam_aa - lam_ab lam_bb^-1 lam_ba

    lam_bb must be invertible; if its Cholesky fails, a single jitter of
    1e-9 * (trace(lam_bb)/dim + 1) is added to the diagonal before giving up
    with SingularBlock. The jitter tolerates benign rank loss without letting
    a zero-information block silently corrupt the result.
    """
    keep = np.asarray(keep, dtype=int)
    if keep.size == 0:
        raise DimensionMismatch("keep set must be non-empty")
    if keep.size != np.unique(keep).size or keep.min() < 0 or keep.max() >= g.dim:
        raise DimensionMismatch(f"keep indices {keep.tolist()} invalid for dim {g.dim}")
    drop = np.setdiff1d(np.arange(g.dim), keep)
    if drop.size == 0:
        return g

    eta_a = g.eta[keep]
    eta_b = g.eta[drop]
    lam_aa = g.lam[np.ix_(keep, keep)]
    lam_ab = g.lam[np.ix_(keep, drop)]
    lam_bb = g.lam[np.ix_(drop, drop)]

    rhs = np.concatenate([eta_b[:, None], lam_ab.T], axis=1)
    try:
        sol = _chol_solve(lam_bb, rhs)
    except np.linalg.LinAlgError:
        jitter = 1e-9 * (np.trace(lam_bb) / lam_bb.shape[0] + 1.0)
        try:
            sol = _chol_solve(lam_bb + jitter * np.eye(lam_bb.shape[0]), rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularBlock(
                "marginalized-out block is singular even after jitter"
            ) from exc

    eta_m = eta_a - lam_ab @ sol[:, 0]
    lam_m = lam_aa - lam_ab @ sol[:, 1:]
    return GaussianInfo(eta_m, lam_m)


def marginalize_blocks(
    g: GaussianInfo, keep_blocks: Sequence[int], dims: Sequence[int]
) -> GaussianInfo:
    """Marginalize onto whole blocks given the block structure of g."""
    offsets = _block_offsets(list(dims))
    keep = np.concatenate(
        [np.arange(offsets[b], offsets[b] + dims[b]) for b in keep_blocks]
    ).astype(int)
    return marginalize(g, keep)


def moments_or_relaxed(g: GaussianInfo, floor: float = 1e-6) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and covariance with a graceful fallback for singular precisions.

    Fully constrained beliefs return their exact moments. Directions with no
    information get variance 1/floor (large, finite) instead of raising, so
    snapshots of a half-built graph stay serializable.
    """
    try:
        m = to_moments(g)
        return np.asarray(m.mu), np.asarray(m.sigma)
    except SingularPrecision:
        w, v = np.linalg.eigh(g.lam)
        w = np.maximum(w, floor)
        sigma = (v / w) @ v.T
        return sigma @ g.eta, (sigma + sigma.T) / 2.0
