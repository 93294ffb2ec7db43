"""Learning metrics: per-instance Pareto-regret and Wasserstein front bias.

Regret is the smallest uniform shift that makes a plan's true mean escape
domination by the reference front.  Bias is a symmetric Chamfer-style sum
of Wasserstein-2 distances between the Gaussian outcome distributions of
two fronts: the first term measures coverage of the reference front, the
second penalizes spurious extra points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MetricsError",
    "FrontPoint",
    "pareto_regret",
    "cumulative_regret",
    "w2_gaussian",
    "pareto_bias",
]


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class FrontPoint:
    """Cumulative-cost distribution parameters of one front plan."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if cov.shape != (mean.shape[0],) * 2:
            raise MetricsError("covariance shape mismatch")
        if not np.allclose(cov, cov.T, atol=1e-8):
            raise MetricsError("covariance must be symmetric")


def pareto_regret(front_means, plan_mean) -> float:
    """Smallest eps >= 0 such that no front point dominates plan_mean - eps*1.

    Closed form: for every front point that dominates the plan mean, the
    shift at which its domination breaks is the smallest coordinate gap;
    regret is the largest such break point (the infimum at the boundary).
    """
    plan_mean = np.asarray(plan_mean, dtype=float)
    front = np.atleast_2d(np.asarray(front_means, dtype=float))
    if front.shape[1] != plan_mean.shape[0]:
        raise MetricsError(
            f"dimension mismatch: front is {front.shape[1]}-d, plan is "
            f"{plan_mean.shape[0]}-d")
    gaps = plan_mean - front                      # >= 0 rows are dominators
    dominating = np.all(gaps >= 0, axis=1) & np.any(gaps > 0, axis=1)
    if not np.any(dominating):
        return 0.0
    return float(np.max(gaps[dominating].min(axis=1)))


def cumulative_regret(regrets) -> np.ndarray:
    """Running prefix sums of per-instance regret."""
    return np.cumsum(np.asarray(regrets, dtype=float))


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Symmetric square root with negative eigenvalues clamped; batch-safe."""
    eigvals, eigvecs = np.linalg.eigh(matrix)
    scaled = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))[..., None, :]
    return scaled @ np.swapaxes(eigvecs, -1, -2)


def w2_gaussian(p: FrontPoint, q: FrontPoint) -> float:
    """Wasserstein-2 distance between two Gaussians.

    W2^2 = |mu_p - mu_q|^2 + tr(S_p + S_q - 2 (S_q^1/2 S_p S_q^1/2)^1/2);
    matrix roots via symmetric eigendecomposition with negative eigenvalues
    clamped at zero.
    """
    if p.mean.shape != q.mean.shape:
        raise MetricsError("dimension mismatch between front points")
    if np.array_equal(p.mean, q.mean) and np.array_equal(p.cov, q.cov):
        return 0.0
    root_q = _psd_sqrt(q.cov)
    cross = _psd_sqrt(root_q @ p.cov @ root_q)
    gap = float(np.sum((p.mean - q.mean) ** 2)
                + np.trace(p.cov) + np.trace(q.cov) - 2.0 * np.trace(cross))
    return float(np.sqrt(max(gap, 0.0)))


def pareto_bias(true_front, est_front) -> float:
    """Symmetric coverage distance between two fronts of Gaussian points.

    All pairwise distances are evaluated in one batched eigendecomposition
    pass; exactly identical point pairs contribute a distance of exactly 0.
    """
    true_front = list(true_front)
    est_front = list(est_front)
    if not true_front or not est_front:
        raise MetricsError("both fronts must be non-empty")
    tm = np.stack([p.mean for p in true_front])
    tc = np.stack([p.cov for p in true_front])
    em = np.stack([p.mean for p in est_front])
    ec = np.stack([p.cov for p in est_front])
    root_e = _psd_sqrt(ec)                                   # (E, n, n)
    cross = _psd_sqrt(root_e[None, :] @ tc[:, None] @ root_e[None, :])
    gaps = (((tm[:, None] - em[None, :]) ** 2).sum(axis=-1)
            + np.trace(tc, axis1=-2, axis2=-1)[:, None]
            + np.trace(ec, axis1=-2, axis2=-1)[None, :]
            - 2.0 * np.trace(cross, axis1=-2, axis2=-1))
    d = np.sqrt(np.clip(gaps, 0.0, None))
    identical = (np.all(tm[:, None] == em[None, :], axis=-1)
                 & np.all(tc[:, None] == ec[None, :], axis=(-2, -1)))
    d[identical] = 0.0
    return float(d.min(axis=1).mean() + d.min(axis=0).mean())
