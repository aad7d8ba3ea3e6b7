"""Clustering evaluation: NMI, ARI, Hungarian accuracy, mean entropy and purity.

All entropies use the natural log. Labels are integer arrays; ``k_pred`` and
``k_true`` give the declared label-space sizes and default to ``max + 1``.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInput, ShapeError


def as_labels(labels, k=None) -> np.ndarray:
    a = np.asarray(labels)
    if a.ndim != 1 or a.size < 1:
        raise InvalidInput("labels must be a non-empty 1-d sequence")
    if not np.issubdtype(a.dtype, np.integer):
        if not np.all(np.equal(np.mod(a, 1), 0)):
            raise InvalidInput("labels must be integers")
        a = a.astype(np.int64)
    if a.min() < 0:
        raise InvalidInput("labels must be non-negative")
    if k is not None and a.max() >= k:
        raise InvalidInput(f"label {a.max()} outside declared range 0..{k - 1}")
    return a.astype(np.int64)


def contingency(pred, truth, k_pred=None, k_true=None) -> np.ndarray:
    """``counts[a, b] = #{i : pred[i] == a and truth[i] == b}``."""
    pred, truth = as_labels(pred, k_pred), as_labels(truth, k_true)
    if pred.size != truth.size:
        raise ShapeError(f"label lengths differ: {pred.size} vs {truth.size}")
    kp = k_pred if k_pred is not None else int(pred.max()) + 1
    kt = k_true if k_true is not None else int(truth.max()) + 1
    table = np.zeros((kp, kt), dtype=np.int64)
    np.add.at(table, (pred, truth), 1)
    return table


def _entropy(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    counts = counts[counts > 0]
    p = counts / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth) -> float:
    table = contingency(pred, truth).astype(np.float64)
    n = table.sum()
    h_u = _entropy(table.sum(axis=1))
    h_v = _entropy(table.sum(axis=0))
    if h_u == 0.0 and h_v == 0.0:
        # both labelings are a single cluster, hence the same partition
        return 1.0
    if h_u == 0.0 or h_v == 0.0:
        return 0.0
    pij = table / n
    pi = pij.sum(axis=1, keepdims=True)
    pj = pij.sum(axis=0, keepdims=True)
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / (pi @ pj)[nz])))
    return float(np.clip(mi / (0.5 * h_u + 0.5 * h_v), 0.0, 1.0))


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2


def ari(pred, truth) -> float:
    table = contingency(pred, truth)
    n = int(table.sum())
    if n < 2:
        raise InvalidInput("ARI needs at least two items")
    index = _comb2(table).sum()
    a = _comb2(table.sum(axis=1)).sum()
    b = _comb2(table.sum(axis=0)).sum()
    expected = a * b / _comb2(n)
    max_index = 0.5 * (a + b)
    if max_index == expected:
        # both partitions trivial (all-one-cluster or all-singletons)
        return 1.0 if a == b else 0.0
    return float((index - expected) / (max_index - expected))


def hungarian_accuracy(pred, truth):
    """Accuracy under the best one-to-one cluster matching.

    Returns ``(accuracy, matching)`` where ``matching`` maps predicted cluster
    ids to ground-truth ids; clusters left unmatched after padding are omitted.
    """
    table = contingency(pred, truth)
    kp, kt = table.shape
    size = max(kp, kt)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[:kp, :kt] = table
    rows, cols = linear_sum_assignment(padded, maximize=True)
    matched = int(padded[rows, cols].sum())
    matching = {int(a): int(b) for a, b in zip(rows, cols) if a < kp and b < kt}
    return matched / int(table.sum()), matching


def mean_cluster_entropy(pred, truth, k_pred=None, k_true=None) -> float:
    """Average ground-truth entropy inside each predicted cluster; empty clusters count 0."""
    table = contingency(pred, truth, k_pred, k_true)
    ent = [_entropy(row) if row.sum() > 0 else 0.0 for row in table]
    return float(np.mean(ent))


def mean_max_purity(pred, truth, k_pred=None, k_true=None) -> float:
    """Average dominant ground-truth fraction per predicted cluster; empty clusters count 1/k_true."""
    table = contingency(pred, truth, k_pred, k_true).astype(np.float64)
    sizes = table.sum(axis=1)
    chance = 1.0 / table.shape[1]
    pur = np.where(sizes > 0, table.max(axis=1) / np.maximum(sizes, 1), chance)
    return float(pur.mean())


def evaluate(pred, truth, k_pred=None, k_true=None) -> dict:
    acc, matching = hungarian_accuracy(pred, truth)
    return {
        "nmi": nmi(pred, truth),
        "ari": ari(pred, truth),
        "accuracy": acc,
        "mean_entropy": mean_cluster_entropy(pred, truth, k_pred, k_true),
        "mean_max_purity": mean_max_purity(pred, truth, k_pred, k_true),
        "matching": {str(a): b for a, b in sorted(matching.items())},
    }
