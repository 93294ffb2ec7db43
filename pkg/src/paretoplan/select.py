"""Plan selection over a Pareto front of candidates.

The main selector scores each candidate by an expected-free-energy style
objective: a preference-alignment term (how close the predicted outcome
distribution sits to a user-supplied Gaussian preference), minus the
entropy of the current parameter proposal, plus the expected entropy of the
one-step-updated proposal estimated by Monte Carlo.  Lower is better: the
chosen plan both matches the preference and promises informative data.

Baselines: uniform random, linear scalarization with weights, and TOPSIS
closeness ranking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .belief import (
    CostBelief,
    VecMoments,
    convolved_moments,
    mvn_entropy,
    summed_vec_param_cov,
)
from .model import Plan

__all__ = [
    "SelectError",
    "PreferenceDist",
    "EfeBreakdown",
    "PlanCandidate",
    "efe_term1",
    "efe_term2",
    "efe_term3",
    "select_aif",
    "select_uniform",
    "select_weights",
    "select_topsis",
    "candidate_rng",
]


class SelectError(ValueError):
    pass


@dataclass(frozen=True)
class PreferenceDist:
    """Gaussian preference over cumulative outcomes.

    The covariance doubles as an exploration dial: a wide preference keeps
    many trade-offs plausible, a tight one concentrates on the mean.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if cov.shape != (mean.shape[0],) * 2:
            raise SelectError("preference covariance shape mismatch")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise SelectError("preference covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise SelectError("preference covariance must be positive definite; "
                              "use PreferenceDist.point for a no-variance preference") from None

    @staticmethod
    def point(mean, scale: float = 1.0) -> "PreferenceDist":
        """A 'no variance' preference: tiny isotropic covariance 1e-6*scale^2."""
        mean = np.asarray(mean, dtype=float)
        return PreferenceDist(mean, np.eye(mean.shape[0]) * 1e-6 * scale**2)


@dataclass(frozen=True)
class EfeBreakdown:
    """Score components of one candidate; total = term1 - term2 + term3."""

    term1: float
    term2_prior_entropy: float
    term3_expected_posterior_entropy: float

    @property
    def total(self) -> float:
        return self.term1 - self.term2_prior_entropy + self.term3_expected_posterior_entropy


@dataclass(frozen=True)
class PlanCandidate:
    """A front plan with its traversed edges and predicted outcome Gaussian.

    ``mean``/``cov`` come from the believed per-edge parameters summed along
    the plan (certainty equivalence), not from the search weights.
    """

    plan: Plan
    edges: tuple[tuple[int, str], ...]
    mean: np.ndarray
    cov: np.ndarray


def efe_term1(candidate_mean, candidate_cov, pref: PreferenceDist) -> float:
    """Negative expected log preference density of the predicted outcome.

    Closed form for Gaussians: -log Z_pr + (tr(S_pr^-1 S) + dMah^2)/2 where
    dMah is the preference-metric distance between the means.
    """
    mean = np.asarray(candidate_mean, dtype=float)
    cov = np.asarray(candidate_cov, dtype=float)
    n = mean.shape[0]
    try:
        factor = cho_factor(pref.cov)
    except np.linalg.LinAlgError:
        raise SelectError("preference covariance is singular") from None
    logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
    neg_log_z = 0.5 * n * np.log(2.0 * np.pi) + 0.5 * logdet
    delta = mean - pref.mean
    quad = float(delta @ cho_solve(factor, delta))
    trace = float(np.trace(cho_solve(factor, cov)))
    return neg_log_z + 0.5 * (trace + quad)


def efe_term2(moments: VecMoments) -> float:
    """Entropy of the current convolved parameter proposal."""
    return mvn_entropy(moments)


def efe_term3(belief: CostBelief, edges, n_s: int,
              rng: np.random.Generator) -> float:
    """Monte Carlo estimate of the expected post-observation proposal entropy.

    Each replicate draws one cost per edge from the certainty-equivalent
    observation distribution, forms the single-sample conjugate posterior of
    every edge, and evaluates the entropy of the summed (moment-matched)
    posterior proposal.  All replicates are evaluated in one vectorized pass.
    """
    if n_s < 1:
        raise SelectError("sample count must be at least 1")
    edges = list(edges)
    if not edges:
        raise SelectError("candidate has no edges")
    params = [belief.get(s, a) for s, a in edges]
    n = params[0].dim
    Lam0 = np.stack([p.Lam for p in params])               # (E, n, n)
    kappa = np.array([p.kappa for p in params])
    nu = np.array([p.nu for p in params])
    e_sigma = Lam0 / (nu - n - 1.0)[:, None, None]
    roots = np.linalg.cholesky(e_sigma)
    # one normal block per edge, replicate index second: order is documented
    # as part of the determinism contract
    z = rng.standard_normal((len(edges), n_s, n))
    dev = np.einsum("eij,esj->esi", roots, z)              # draw - lam
    outer = np.einsum("esi,esj->esij", dev, dev)
    shrink = (kappa / (kappa + 1.0))[:, None, None, None]
    lam_post = Lam0[:, None] + shrink * outer              # (E, n_s, n, n)
    total_cov = summed_vec_param_cov(lam_post, kappa + 1.0, nu + 1.0)
    sign, logdet = np.linalg.slogdet(total_cov)
    if np.any(sign <= 0):
        raise SelectError("posterior proposal covariance became singular")
    d = total_cov.shape[-1]
    entropies = 0.5 * logdet + 0.5 * d * (1.0 + np.log(2.0 * np.pi))
    return float(entropies.mean())


def candidate_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one candidate, stable across serial/parallel runs."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(index,)))


def select_aif(candidates: list[PlanCandidate], belief: CostBelief,
               pref: PreferenceDist, n_s: int,
               seed: int) -> tuple[int, list[EfeBreakdown]]:
    """Pick the candidate minimizing term1 - term2 + term3.

    Candidates are scored independently with per-index RNG streams derived
    from (seed, index); ties go to the lowest index.  The state-uncertainty
    term of the general objective is dropped: transitions are deterministic,
    so observing outcomes says nothing new about the state.
    """
    if not candidates:
        raise SelectError("empty candidate set")
    breakdowns = []
    edge_cache: dict = {}
    for idx, cand in enumerate(candidates):
        prior_moments = convolved_moments(belief, cand.edges, cache=edge_cache)
        breakdowns.append(EfeBreakdown(
            term1=efe_term1(cand.mean, cand.cov, pref),
            term2_prior_entropy=efe_term2(prior_moments),
            term3_expected_posterior_entropy=efe_term3(
                belief, cand.edges, n_s, candidate_rng(seed, idx)),
        ))
    totals = np.array([b.total for b in breakdowns])
    return int(np.argmin(totals)), breakdowns


def select_uniform(n_candidates: int, rng: np.random.Generator) -> int:
    """Fair selection: equal probability over the front."""
    if n_candidates < 1:
        raise SelectError("empty candidate set")
    return int(rng.integers(n_candidates))


def select_weights(means, weights) -> int:
    """Linear scalarization: argmin of the weighted sum of objective means."""
    means = np.asarray(means, dtype=float)
    if means.size == 0:
        raise SelectError("empty candidate set")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or w.sum() <= 0:
        raise SelectError("weights must be non-negative and not all zero")
    w = w / w.sum()
    return int(np.argmin(means @ w))


def select_topsis(means) -> int:
    """TOPSIS closeness over min-max normalized objectives (all are costs).

    Objectives with zero range carry no information and are pinned at 0.5
    so they do not bias the distances.  Ties resolve to the lowest index.
    """
    means = np.asarray(means, dtype=float)
    if means.size == 0:
        raise SelectError("empty candidate set")
    lo = means.min(axis=0)
    hi = means.max(axis=0)
    span = hi - lo
    normalized = np.where(span > 0, (means - lo) / np.where(span > 0, span, 1.0), 0.5)
    ideal = normalized.min(axis=0)
    anti = normalized.max(axis=0)
    d_plus = np.linalg.norm(normalized - ideal, axis=1)
    d_minus = np.linalg.norm(normalized - anti, axis=1)
    denom = d_plus + d_minus
    closeness = np.where(denom > 0, d_minus / np.where(denom > 0, denom, 1.0), 0.5)
    return int(np.argmax(closeness))
