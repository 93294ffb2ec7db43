"""Per-edge Normal-Inverse-Wishart beliefs over unknown MVN cost parameters.

Each enabled (state, action) pair carries an independent NIW belief over the
mean and covariance of its cost distribution.  The module provides the
conjugate posterior update, first and second moments of the vectorized
parameters in closed form, plan-level convolved moments, the Gaussian
entropy used by the selector, and a Q-Q normality diagnostic of summed
parameter draws.

Vectorization order: (mu_1..mu_N, S_11, S_12, .., S_1N, S_22, .., S_NN),
i.e. mean components followed by the upper triangle of the covariance in
row-major order, for a total dimension of N(N+3)/2.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BeliefError",
    "NiwParams",
    "VecMoments",
    "CostBelief",
    "QqReport",
    "posterior_update",
    "param_moments",
    "vec_param_cov",
    "summed_vec_param_cov",
    "convolved_moments",
    "mvn_entropy",
    "normality_diagnostic",
    "vec_dim",
    "tri_indices",
]


class BeliefError(ValueError):
    pass


def vec_dim(n: int) -> int:
    return n * (n + 3) // 2


def tri_indices(n: int) -> list[tuple[int, int]]:
    """Row-major upper-triangular index pairs of an n x n matrix."""
    return [(i, j) for i in range(n) for j in range(i, n)]


@dataclass(frozen=True)
class NiwParams:
    """Normal-Inverse-Wishart hyperparameters.

    ``kappa == 0`` is accepted as an improper location prior; moments are
    only defined once data has made the posterior proper.
    """

    lam: np.ndarray
    kappa: float
    Lam: np.ndarray
    nu: float

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        Lam = np.asarray(self.Lam, dtype=float)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "Lam", Lam)
        n = lam.shape[0]
        if Lam.shape != (n, n):
            raise BeliefError(f"scale matrix shape {Lam.shape} does not match dim {n}")
        if self.kappa < 0:
            raise BeliefError("kappa must be non-negative")
        if self.nu <= n + 1:
            raise BeliefError(f"nu must exceed dim+1 for finite moments (nu={self.nu})")
        if not np.allclose(Lam, Lam.T, atol=1e-10):
            raise BeliefError("scale matrix must be symmetric")
        try:
            np.linalg.cholesky(Lam)
        except np.linalg.LinAlgError:
            raise BeliefError("scale matrix must be positive definite") from None

    @property
    def dim(self) -> int:
        return self.lam.shape[0]


@dataclass(frozen=True)
class VecMoments:
    """Mean and covariance of the vectorized parameters (dimension N(N+3)/2)."""

    mean: np.ndarray
    cov: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def posterior_update(prior: NiwParams, data) -> NiwParams:
    """Conjugate posterior after observing the cost vectors in ``data``."""
    samples = np.atleast_2d(np.asarray(data, dtype=float))
    if samples.size == 0:
        return prior
    l = samples.shape[0]
    if samples.shape[1] != prior.dim:
        raise BeliefError(
            f"samples have dim {samples.shape[1]}, belief has dim {prior.dim}")
    cbar = samples.mean(axis=0)
    diff0 = cbar - prior.lam
    scatter = samples - cbar
    lam = (prior.kappa * prior.lam + l * cbar) / (prior.kappa + l)
    kappa = prior.kappa + l
    Lam = (prior.Lam
           + (prior.kappa * l / (prior.kappa + l)) * np.outer(diff0, diff0)
           + scatter.T @ scatter)
    nu = prior.nu + l
    return NiwParams(lam=lam, kappa=kappa, Lam=Lam, nu=nu)


def vec_param_cov(Lam: np.ndarray, kappa, nu) -> np.ndarray:
    """Covariance of the vectorized parameters of NIW(_, kappa, Lam, nu).

    The location block has covariance Lam/(kappa (nu-N-1)); the scale block
    uses the inverse-Wishart second-moment identity; the cross block is zero
    because the location is conditionally symmetric about its center.
    ``Lam`` may carry leading batch dimensions, with ``kappa``/``nu`` scalars
    or arrays broadcastable over those batch dimensions.
    """
    Lam = np.asarray(Lam, dtype=float)
    n = Lam.shape[-1]
    kap = np.asarray(kappa, dtype=float)[..., None, None]
    nuu = np.asarray(nu, dtype=float)[..., None, None]
    if np.any(kap <= 0):
        raise BeliefError("moments undefined for an improper (kappa=0) belief")
    if np.any(nuu <= n + 3):
        raise BeliefError(f"nu must exceed dim+3 for second moments (nu={nu})")
    pairs = tri_indices(n)
    d = vec_dim(n)
    rows = np.array([p[0] for p in pairs])
    cols = np.array([p[1] for p in pairs])
    out = np.zeros(np.broadcast_shapes(Lam.shape[:-2], kap.shape[:-2]) + (d, d))
    out[..., :n, :n] = Lam / (kap * (nuu - n - 1))
    c = nuu - n
    denom = c * (c - 1) ** 2 * (c - 3)
    i, j = rows[:, None], cols[:, None]
    k, l = rows[None, :], cols[None, :]
    out[..., n:, n:] = (2 * Lam[..., i, j] * Lam[..., k, l]
                        + (c - 1) * (Lam[..., i, k] * Lam[..., j, l]
                                     + Lam[..., i, l] * Lam[..., j, k])) / denom
    return out


def summed_vec_param_cov(Lam: np.ndarray, kappa: np.ndarray,
                         nu: np.ndarray) -> np.ndarray:
    """Sum of per-edge vectorized-parameter covariances, fused over edges.

    ``Lam`` is (E, ..., n, n) with per-edge ``kappa``/``nu`` of shape (E,).
    Equivalent to ``vec_param_cov(Lam, kappa[:, None], nu[:, None]).sum(0)``
    but never materializes the per-edge blocks.
    """
    Lam = np.asarray(Lam, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    nu = np.asarray(nu, dtype=float)
    n = Lam.shape[-1]
    if np.any(kappa <= 0):
        raise BeliefError("moments undefined for an improper (kappa=0) belief")
    if np.any(nu <= n + 3):
        raise BeliefError(f"nu must exceed dim+3 for second moments (nu={nu})")
    pairs = tri_indices(n)
    d = vec_dim(n)
    rows = np.array([p[0] for p in pairs])
    cols = np.array([p[1] for p in pairs])
    c = nu - n
    denom = c * (c - 1) ** 2 * (c - 3)
    out = np.zeros(Lam.shape[1:-2] + (d, d))
    out[..., :n, :n] = np.einsum("e...ij,e->...ij", Lam,
                                 1.0 / (kappa * (nu - n - 1)))
    tri = Lam[..., rows, cols]                       # (E, ..., P)
    i, j = rows[:, None], cols[:, None]
    k, l = rows[None, :], cols[None, :]
    cross = (Lam[..., i, k] * Lam[..., j, l] + Lam[..., i, l] * Lam[..., j, k])
    out[..., n:, n:] = (np.einsum("e...a,e...b,e->...ab", tri, tri, 2.0 / denom)
                        + np.einsum("e...ab,e->...ab", cross, (c - 1) / denom))
    return out


def param_moments(p: NiwParams) -> VecMoments:
    """Closed-form mean and covariance of the vectorized parameters.

    Requires kappa > 0 and nu > N+3 so second moments are finite.
    """
    n = p.dim
    pairs = tri_indices(n)
    e_sigma = p.Lam / (p.nu - n - 1)
    mean = np.concatenate([p.lam, [e_sigma[i, j] for i, j in pairs]])
    return VecMoments(mean=mean, cov=vec_param_cov(p.Lam, p.kappa, p.nu))


def convolved_moments(belief: "CostBelief", edges,
                      cache: dict | None = None) -> VecMoments:
    """Moments of the summed parameters along a plan (edges independent).

    ``cache`` maps (state, action) to precomputed per-edge moments; pass a
    dict to reuse them across the plans of one selection round.
    """
    mean = None
    cov = None
    for s, a in edges:
        m = cache.get((s, a)) if cache is not None else None
        if m is None:
            m = param_moments(belief.get(s, a))
            if cache is not None:
                cache[(s, a)] = m
        if mean is None:
            mean, cov = m.mean.copy(), m.cov.copy()
        else:
            mean += m.mean
            cov += m.cov
    if mean is None:
        raise BeliefError("plan has no edges")
    return VecMoments(mean=mean, cov=cov)


def mvn_entropy(moments: VecMoments) -> float:
    """Entropy of the Gaussian with the given covariance: d/2 (1+log 2pi) + log det / 2."""
    d = moments.dim
    sign, logdet = np.linalg.slogdet(moments.cov)
    if sign <= 0 or not np.isfinite(logdet):
        raise BeliefError("covariance must be positive definite for entropy")
    return 0.5 * logdet + 0.5 * d * (1.0 + np.log(2.0 * np.pi))


class CostBelief:
    """Mutable store of per-edge beliefs, visit counts and the global step.

    One writer during the update phase, many readers during planning and
    selection; phases never interleave.
    """

    def __init__(self, params: dict, counts: dict | None = None, k_g: int = 0):
        self.params: dict[tuple[int, str], NiwParams] = dict(params)
        self.counts: dict[tuple[int, str], int] = dict(counts or {})
        for key in self.params:
            self.counts.setdefault(key, 0)
        if any(v < 0 for v in self.counts.values()):
            raise BeliefError("visit counts must be non-negative")
        self.k_g = int(k_g)

    @classmethod
    def initialize(cls, ts, lam0=None, kappa0: float = 1.0,
                   scale0: float = 1.0, nu0: float | None = None) -> "CostBelief":
        """Fresh belief for every enabled edge of a transition system.

        Defaults: lam0 = zero vector, kappa0 = 1, scale matrix = scale0 * I,
        nu0 = N + 4 (the smallest integer order with finite second moments,
        plus margin).
        """
        n = ts.n_objectives
        lam0 = np.zeros(n) if lam0 is None else np.asarray(lam0, dtype=float)
        nu0 = float(n + 4) if nu0 is None else float(nu0)
        prior = NiwParams(lam=lam0, kappa=float(kappa0),
                          Lam=np.eye(n) * float(scale0), nu=nu0)
        return cls({(s, a): prior for s, a, _ in ts.edges()})

    def get(self, s: int, a: str) -> NiwParams:
        try:
            return self.params[(s, a)]
        except KeyError:
            raise BeliefError(f"no belief for edge ({s}, {a!r})") from None

    def count(self, s: int, a: str) -> int:
        return self.counts.get((s, a), 0)

    def update(self, s: int, a: str, samples) -> None:
        """Absorb executed-cost samples for one edge and advance the counters."""
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        self.params[(s, a)] = posterior_update(self.get(s, a), samples)
        self.counts[(s, a)] = self.count(s, a) + samples.shape[0]
        self.k_g += samples.shape[0]

    def posterior_mean(self, s: int, a: str) -> np.ndarray:
        return self.get(s, a).lam

    def posterior_mean_cov(self, s: int, a: str) -> np.ndarray:
        p = self.get(s, a)
        return p.Lam / (p.nu - p.dim - 1)

    def to_json(self) -> str:
        doc = {
            "k_g": self.k_g,
            "edges": [
                {"state": s, "action": a,
                 "lam": p.lam.tolist(), "kappa": p.kappa,
                 "Lam": p.Lam.tolist(), "nu": p.nu,
                 "count": self.count(s, a)}
                for (s, a), p in sorted(self.params.items())
            ],
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "CostBelief":
        doc = json.loads(text)
        params = {}
        counts = {}
        for e in doc["edges"]:
            key = (int(e["state"]), e["action"])
            params[key] = NiwParams(lam=np.array(e["lam"]), kappa=float(e["kappa"]),
                                    Lam=np.array(e["Lam"]), nu=float(e["nu"]))
            counts[key] = int(e["count"])
        return CostBelief(params, counts, k_g=int(doc["k_g"]))


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclass
class QqReport:
    """Quantile pairs of whitened summed parameter draws per coordinate."""

    theoretical: np.ndarray        # (M,) standard-normal quantiles
    sample: np.ndarray             # (d, M) sorted whitened draws per coordinate
    max_abs_dev: np.ndarray        # (d,) worst quantile gap per coordinate
    whitened_mean: np.ndarray
    whitened_cov: np.ndarray


def sample_vec_params(p: NiwParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw vectorized parameter samples from one NIW belief, shape (size, d)."""
    from scipy.stats import invwishart

    n = p.dim
    sigmas = invwishart.rvs(df=p.nu, scale=p.Lam, size=size, random_state=rng)
    sigmas = sigmas.reshape(size, n, n)
    roots = np.linalg.cholesky(sigmas / p.kappa)
    mus = p.lam + np.einsum("mij,mj->mi", roots, rng.standard_normal((size, n)))
    rows, cols = zip(*tri_indices(n))
    return np.concatenate([mus, sigmas[:, rows, cols]], axis=1)


def normality_diagnostic(belief: CostBelief, edges, n_samples: int = 5000,
                         rng: np.random.Generator | None = None) -> QqReport:
    """Q-Q diagnostic of the summed parameter distribution along a plan.

    Each edge's belief is sampled ``n_samples`` times, the draws are summed
    across edges, whitened to zero mean and identity covariance, and each
    coordinate's order statistics are paired with standard-normal quantiles.
    """
    from scipy.special import ndtri

    rng = np.random.default_rng() if rng is None else rng
    edges = list(edges)
    if not edges:
        raise BeliefError("plan has no edges")
    total = None
    for s, a in edges:
        draws = sample_vec_params(belief.get(s, a), n_samples, rng)
        total = draws if total is None else total + draws
    center = total.mean(axis=0)
    cov = np.cov(total.T)
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        # diagnostics only: posterior math never gets this treatment
        logging.getLogger(__name__).warning(
            "empirical covariance singular; whitening with 1e-12 jitter")
        try:
            L = np.linalg.cholesky(cov + 1e-12 * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            raise BeliefError(
                "empirical covariance is singular; cannot whiten") from None
    white = np.linalg.solve(L, (total - center).T).T
    m = n_samples
    theory = ndtri((np.arange(1, m + 1) - 0.5) / m)
    sample_q = np.sort(white, axis=0).T
    dev = np.abs(sample_q - theory).max(axis=1)
    return QqReport(theoretical=theory, sample=sample_q, max_abs_dev=dev,
                    whitened_mean=white.mean(axis=0), whitened_cov=np.cov(white.T))
