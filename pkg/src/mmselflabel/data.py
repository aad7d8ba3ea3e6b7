"""Synthetic two-modality Gaussian-mixture data and feature degradation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .marginals import MarginalSpec, realize_marginal


@dataclass(frozen=True)
class SyntheticDatasetSpec:
    n: int = 2000
    k_true: int = 10
    dim_a: int = 32
    dim_v: int = 32
    separation: float = 8.0
    class_prior: MarginalSpec | None = None
    cross_modal_consistency: float = 1.0
    seed: int = 0
    # overrides ``separation`` for modality a only
    separation_a: float | None = None

    def __post_init__(self):
        if not self.n >= self.k_true >= 1:
            raise InvalidInput("need n >= k_true >= 1")
        if not self.separation > 0 or (self.separation_a is not None and not self.separation_a > 0):
            raise InvalidInput("separation must be positive")
        if not 0.0 <= self.cross_modal_consistency <= 1.0:
            raise InvalidInput("cross_modal_consistency must lie in [0, 1]")
        if self.dim_a < 1 or self.dim_v < 1:
            raise InvalidInput("feature dimensions must be >= 1")
        if self.class_prior is not None and self.class_prior.k != self.k_true:
            raise InvalidInput("class_prior.k must equal k_true")

    def prior(self) -> MarginalSpec:
        return self.class_prior or MarginalSpec("uniform", k=self.k_true)


@dataclass
class MultiModalDataset:
    features_a: np.ndarray  # dim_a x N
    features_v: np.ndarray  # dim_v x N
    truth: np.ndarray
    centroids_a: np.ndarray = field(default=None, repr=False)
    centroids_v: np.ndarray = field(default=None, repr=False)

    @property
    def n(self):
        return self.truth.size


def cluster_sizes(n, r) -> np.ndarray:
    """Largest-remainder rounding of ``n * r`` with every cluster non-empty."""
    raw = n * np.asarray(r)
    sizes = np.floor(raw).astype(np.int64)
    short = n - sizes.sum()
    order = np.argsort(-(raw - sizes), kind="stable")
    sizes[order[:short]] += 1
    while np.any(sizes == 0):
        sizes[np.argmax(sizes)] -= 1
        sizes[np.argmin(sizes)] += 1
    return sizes


def _centroids(k, dim, radius, rng):
    c = rng.normal(size=(dim, k))
    return radius * c / np.linalg.norm(c, axis=0, keepdims=True)


def generate_dataset(spec: SyntheticDatasetSpec) -> MultiModalDataset:
    rng = np.random.default_rng(spec.seed)
    k = spec.k_true
    sizes = cluster_sizes(spec.n, realize_marginal(spec.prior()))
    truth = rng.permutation(np.repeat(np.arange(k), sizes))

    sep_a = spec.separation if spec.separation_a is None else spec.separation_a
    cen_a = _centroids(k, spec.dim_a, sep_a, rng)
    cen_v = _centroids(k, spec.dim_v, spec.separation, rng)
    latent_a = truth.copy()
    flip = rng.random(spec.n) >= spec.cross_modal_consistency
    latent_a[flip] = rng.integers(0, k, size=int(flip.sum()))

    feats_a = cen_a[:, latent_a] + rng.normal(size=(spec.dim_a, spec.n))
    feats_v = cen_v[:, truth] + rng.normal(size=(spec.dim_v, spec.n))
    return MultiModalDataset(feats_a, feats_v, truth, cen_a, cen_v)


def nearest_centroid_labels(features, centroids) -> np.ndarray:
    d2 = (
        (features**2).sum(axis=0)[None, :]
        - 2 * centroids.T @ features
        + (centroids**2).sum(axis=0)[:, None]
    )
    return np.argmin(d2, axis=0)


def degrade_modality(features, factor, rng) -> np.ndarray:
    """Feature-space stand-in for down/up-sampling a modality.

    Each coordinate is averaged with ``ceil(factor) - 1`` random other
    coordinates, then Gaussian noise of ``(factor - 1)`` per-dimension stds is
    added. ``factor == 1`` returns an exact copy.
    """
    if factor < 1:
        raise InvalidInput("degradation factor must be >= 1")
    x = np.array(features, dtype=np.float64)
    if factor == 1:
        return x
    d = x.shape[0]
    std = x.std(axis=1)
    # noise first: with a shared seed, larger factors scale the same draw
    z = rng.normal(size=x.shape)
    m = min(math.ceil(factor) - 1, d - 1)
    blurred = x.copy()
    if m > 0:
        for i in range(d):
            others = rng.choice(np.delete(np.arange(d), i), size=m, replace=False)
            blurred[i] = (x[i] + x[others].sum(axis=0)) / (m + 1)
    return blurred + z * ((factor - 1) * std)[:, None]
