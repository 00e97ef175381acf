"""
Weighted Gaussian-mixture fitting of a particle set.

EM is run for K = 1..k_max from a seeded k-means++ initialisation; the K with the
lowest BIC wins. Covariances are floored so every component stays positive definite.
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from framemap.core.logger import get_logger
from framemap.core.rng import as_generator
from framemap.inference.particles import ParticleSet, SeedLike

logger = get_logger("planner.mixture")


@dataclass(frozen=True)
class MixtureComponent:
    mean: np.ndarray
    covariance: np.ndarray
    weight: float


@dataclass(frozen=True)
class GaussianMixture:
    components: Tuple[MixtureComponent, ...]
    bic: float = 0.0
    degenerate: bool = False

    @property
    def count(self) -> int:
        return len(self.components)

    def ranked(self, reference=None) -> Tuple[MixtureComponent, ...]:
        """Components by weight (descending); equal weights by distance to reference."""
        ref = np.zeros(2) if reference is None else np.asarray(reference, dtype=np.float64)

        def key(c: MixtureComponent):
            return (-round(c.weight, 9), float(np.linalg.norm(c.mean - ref)))

        return tuple(sorted(self.components, key=key))

    def to_record(self) -> dict:
        return {
            "bic": self.bic,
            "degenerate": self.degenerate,
            "components": [
                {"mean": c.mean, "covariance": c.covariance, "weight": c.weight} for c in self.components
            ],
        }


def _floor_covariance(cov: np.ndarray, floor: float) -> Tuple[np.ndarray, bool]:
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    floored = bool(np.any(vals < floor))
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T, floored


def _kmeans_pp(x: np.ndarray, w: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.choice(len(x), p=w)]]
    for _ in range(1, k):
        d2 = np.min(((x[:, None, :] - np.array(centers)[None, :, :]) ** 2).sum(axis=2), axis=1)
        p = w * d2
        if p.sum() <= 0.0:
            break
        centers.append(x[rng.choice(len(x), p=p / p.sum())])
    return np.array(centers)


def _log_densities(x: np.ndarray, means, covs, pis) -> np.ndarray:
    cols = [
        math.log(pi) + multivariate_normal.logpdf(x, mean=m, cov=c, allow_singular=False)
        for m, c, pi in zip(means, covs, pis)
    ]
    return np.column_stack(cols)


def _fit_k(x, w, k, rng, max_iter, tol, floor):
    means = _kmeans_pp(x, w, k, rng)
    k = len(means)
    d2 = ((x[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    resp = np.zeros((len(x), k))
    resp[np.arange(len(x)), np.argmin(d2, axis=1)] = 1.0
    prev = -np.inf
    floored_any = False
    ll = prev
    means, covs, pis = [], [], []
    for _ in range(max_iter):
        wr = resp * w[:, None]
        nk = wr.sum(axis=0)
        keep = nk > 1e-12
        wr, nk = wr[:, keep], nk[keep]
        means, covs, floored_any = [], [], False
        for j in range(len(nk)):
            m = wr[:, j] @ x / nk[j]
            diff = x - m
            cov, floored = _floor_covariance((wr[:, j, None] * diff).T @ diff / nk[j], floor)
            floored_any |= floored
            means.append(m)
            covs.append(cov)
        pis = list(nk / nk.sum())
        log_p = _log_densities(x, means, covs, pis)
        norm = logsumexp(log_p, axis=1)
        ll = float(w @ norm)
        resp = np.exp(log_p - norm[:, None])
        if abs(ll - prev) < tol:
            break
        prev = ll
    return means, covs, pis, ll, floored_any


def fit_mixture(
    particles: ParticleSet,
    k_max: int = 3,
    seed: SeedLike = 0,
    max_iter: int = 100,
    tol: float = 1e-6,
    covariance_floor: float = 1e-3,
) -> GaussianMixture:
    """
    Fit a weighted GMM to a particle set, choosing K in 1..k_max by BIC.
    K never exceeds the number of distinct positive-weight positions.
    """
    w = np.asarray(particles.weights, dtype=np.float64)
    w = w / w.sum()
    x = particles.positions
    distinct = len(np.unique(x[w > 0.0], axis=0))
    k_top = max(1, min(k_max, distinct))
    n = particles.count
    rng = as_generator(seed, "mixture", particles.owner)
    best: Optional[GaussianMixture] = None
    for k in range(1, k_top + 1):
        means, covs, pis, ll, floored = _fit_k(x, w, k, rng, max_iter, tol, covariance_floor)
        dof = 6 * len(means) - 1
        bic = -2.0 * n * ll + dof * math.log(max(n, 2))
        mixture = GaussianMixture(
            tuple(MixtureComponent(np.asarray(m), np.asarray(c), float(p)) for m, c, p in zip(means, covs, pis)),
            bic=float(bic),
            degenerate=floored,
        )
        if best is None or bic < best.bic - 1e-9:
            best = mixture
    if best.degenerate:
        logger.warning("%s: covariance floor applied to mixture fit", particles.owner)
    return best
