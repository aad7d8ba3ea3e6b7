"""Greedy pair-switching alignment of two clustering heads' output rows.

The cost of a row permutation ``R`` is the L1 distance between the two
modalities' posteriors summed over items, with modality ``a`` reindexed by
``R``. It decomposes over rows, so a ``K x K`` table of row-to-row distances
makes every swap proposal O(1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, ShapeError
from .matrix import as_matrix, probabilities


@dataclass(frozen=True)
class AlignmentConfig:
    switch_proposals: int = 50_000
    restarts: int = 5
    seed: int = 0
    sample_items: int | None = None

    def __post_init__(self):
        if self.switch_proposals < 1 or self.restarts < 1:
            raise InvalidInput("switch_proposals and restarts must be >= 1")
        if self.sample_items is not None and self.sample_items < 1:
            raise InvalidInput("sample_items must be >= 1")


@dataclass
class AlignmentResult:
    permutation: np.ndarray
    cost: float
    cost_trace: list = field(default_factory=list)
    restart_index: int = 0

    def to_dict(self):
        return {
            "permutation": [int(x) for x in self.permutation],
            "cost": self.cost,
            "trace_length": len(self.cost_trace),
            "cost_trace": list(self.cost_trace),
            "restart_index": self.restart_index,
        }


def _pair(p_a, p_b):
    p_a, p_b = as_matrix(p_a), as_matrix(p_b)
    if p_a.shape != p_b.shape:
        raise ShapeError(f"posterior shapes differ: {p_a.shape} vs {p_b.shape}")
    return p_a, p_b


def alignment_cost(p_a, p_b, perm) -> float:
    """``sum_i sum_y |softmax_a[perm[y], i] - softmax_b[y, i]|`` from log-posteriors."""
    p_a, p_b = _pair(p_a, p_b)
    perm = np.asarray(perm, dtype=np.int64)
    if perm.size != p_a.shape[0]:
        raise ShapeError("permutation length does not match K")
    return float(np.abs(probabilities(p_a)[perm] - probabilities(p_b)).sum())


def row_distances(prob_a, prob_b) -> np.ndarray:
    """``D[j, y] = sum_i |prob_a[j, i] - prob_b[y, i]|``."""
    k = prob_a.shape[0]
    d = np.empty((k, k))
    for j in range(k):
        d[j] = np.abs(prob_a[j][None, :] - prob_b).sum(axis=1)
    return d


def swap_delta(dist, perm, y1, y2) -> float:
    """Change in cost from exchanging ``perm[y1]`` and ``perm[y2]``."""
    j1, j2 = perm[y1], perm[y2]
    return (dist[j2, y1] + dist[j1, y2]) - (dist[j1, y1] + dist[j2, y2])


def _run(dist, start, proposals, rng):
    k = dist.shape[0]
    perm = [int(x) for x in start]
    cost = math.fsum(dist[start, np.arange(k)].tolist())
    trace = [cost]
    if k < 2:
        return np.array(perm, dtype=np.int64), cost, trace
    y1s = rng.integers(0, k, size=proposals)
    # second index uniform over the other k - 1 rows
    y2s = (y1s + rng.integers(1, k, size=proposals)) % k
    d = dist.tolist()
    for y1, y2 in zip(y1s.tolist(), y2s.tolist()):
        j1, j2 = perm[y1], perm[y2]
        delta = (d[j2][y1] + d[j1][y2]) - (d[j1][y1] + d[j2][y2])
        if delta < 0:
            perm[y1], perm[y2] = j2, j1
            # exact recomputation on acceptance (rare) keeps rounding from drifting
            new = math.fsum(d[perm[y]][y] for y in range(k))
            if new < cost:
                cost = new
                trace.append(cost)
            else:
                perm[y1], perm[y2] = j1, j2
    return np.array(perm, dtype=np.int64), cost, trace


def greedy_align(p_a, p_b, cfg: AlignmentConfig | None = None) -> AlignmentResult:
    cfg = cfg or AlignmentConfig()
    p_a, p_b = _pair(p_a, p_b)
    k, n = p_a.shape
    prob_a, prob_b = probabilities(p_a), probabilities(p_b)
    if cfg.sample_items is not None and cfg.sample_items < n:
        idx = np.sort(np.random.default_rng([cfg.seed, 2**31]).choice(n, cfg.sample_items, replace=False))
        prob_a, prob_b = prob_a[:, idx], prob_b[:, idx]
    dist = row_distances(prob_a, prob_b)

    best = None
    for restart in range(cfg.restarts):
        rng = np.random.default_rng([cfg.seed, restart])
        start = np.arange(k) if restart == 0 else rng.permutation(k)
        perm, cost, trace = _run(dist, start, cfg.switch_proposals, rng)
        if best is None or cost < best.cost:
            best = AlignmentResult(perm, cost, trace, restart)
    return best


def apply_head_permutation(weights, perm) -> np.ndarray:
    """Reorder head rows so that ``out[y] = weights[perm[y]]``.

    After this, the permuted head scored with the identity permutation has
    the same alignment cost the original head had under ``perm``.
    """
    w = np.asarray(weights, dtype=np.float64)
    perm = np.asarray(perm, dtype=np.int64)
    if w.ndim not in (1, 2) or w.shape[0] != perm.size:
        raise ShapeError(f"weights with {w.shape[0]} rows cannot take a permutation of length {perm.size}")
    return w[perm].copy()
