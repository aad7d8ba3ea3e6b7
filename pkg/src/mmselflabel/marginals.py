"""Prior cluster-size marginals and the optimal cluster-to-marginal permutation."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, ShapeError, TooLarge

KINDS = ("uniform", "gaussian_perturbed", "zipf", "explicit")
GAUSSIAN_FLOOR = 0.01
BRUTE_FORCE_MAX_K = 8


@dataclass(frozen=True)
class MarginalSpec:
    kind: str = "uniform"
    k: int = 10
    mu: float = 1.0
    sigma: float = 0.1
    exponent: float = 1.0
    weights: tuple = field(default=())
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown marginal kind {self.kind!r}; expected one of {KINDS}")
        if self.k < 1:
            raise InvalidInput("k must be >= 1")
        if self.kind == "zipf" and not self.exponent > 0:
            raise InvalidInput("zipf exponent must be positive")
        if self.kind == "explicit":
            w = np.asarray(self.weights, dtype=np.float64)
            if w.size != self.k or np.any(w <= 0):
                raise InvalidInput("explicit weights must be k positive reals")


def realize_marginal(spec: MarginalSpec) -> np.ndarray:
    k = spec.k
    if spec.kind == "uniform":
        w = np.ones(k)
    elif spec.kind == "gaussian_perturbed":
        rng = np.random.default_rng(spec.seed)
        w = np.maximum(rng.normal(spec.mu, spec.sigma, size=k), GAUSSIAN_FLOOR)
    elif spec.kind == "zipf":
        w = np.arange(1, k + 1, dtype=np.float64) ** -spec.exponent
    else:
        w = np.asarray(spec.weights, dtype=np.float64)
    return w / w.sum()


def _check(counts, r):
    counts = np.asarray(counts, dtype=np.float64).ravel()
    r = np.asarray(r, dtype=np.float64).ravel()
    if counts.size != r.size:
        raise ShapeError(f"counts has length {counts.size}, r has length {r.size}")
    return counts, r


def permutation_energy(perm, counts, r) -> float:
    """Variable part of the permuted-marginal energy: ``sum_y -counts[y] log r[perm[y]]``."""
    counts, r = _check(counts, r)
    perm = np.asarray(perm, dtype=np.int64)
    if perm.size != r.size:
        raise ShapeError("permutation length does not match r")
    return float(-np.sum(counts * np.log(r[perm])))


def optimal_marginal_permutation(counts, r) -> np.ndarray:
    """Pair clusters with marginal slots so that larger mass gets larger ``r``.

    Cluster ``y`` is given the prior mass ``r[perm[y]]``. Both sides are
    stable-sorted ascending and matched rank for rank; within a run of equal
    ``r`` values the slots go to their clusters in index order, so a uniform
    prior returns the identity.
    """
    counts, r = _check(counts, r)
    q_order = np.argsort(counts, kind="stable")
    r_order = np.argsort(r, kind="stable")
    perm = np.empty(r.size, dtype=np.int64)
    perm[q_order] = r_order

    r_sorted = r[r_order]
    start = 0
    for end in range(1, r.size + 1):
        if end == r.size or r_sorted[end] != r_sorted[start]:
            if end - start > 1:
                slots = r_order[start:end]
                clusters = q_order[start:end]
                perm[np.sort(clusters)] = np.sort(slots)
            start = end
    return perm


def brute_force_marginal_permutation(counts, r) -> np.ndarray:
    counts, r = _check(counts, r)
    k = r.size
    if k > BRUTE_FORCE_MAX_K:
        raise TooLarge(f"brute force limited to K <= {BRUTE_FORCE_MAX_K}, got {k}")
    log_r = np.log(r)
    best, best_e = None, np.inf
    # lexicographic enumeration; strict improvement keeps the first minimizer
    for p in itertools.permutations(range(k)):
        e = -float(np.dot(counts, log_r[list(p)]))
        if e < best_e - 1e-14 * max(1.0, abs(best_e) if np.isfinite(best_e) else 1.0):
            best, best_e = p, e
    return np.array(best, dtype=np.int64)


def is_permutation(perm, k=None) -> bool:
    perm = np.asarray(perm)
    k = perm.size if k is None else k
    return perm.size == k and np.array_equal(np.sort(perm), np.arange(k))


def invert_permutation(perm) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.int64)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv
