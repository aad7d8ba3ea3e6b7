import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmselflabel.alignment import (
    AlignmentConfig,
    alignment_cost,
    apply_head_permutation,
    greedy_align,
    row_distances,
    swap_delta,
)
from mmselflabel.errors import ShapeError
from mmselflabel.marginals import invert_permutation
from mmselflabel.matrix import softmax_columns

from instances import planted_alignment


def one_hot_columns(k, n, row):
    p = np.full((k, n), 1e-300)
    p[row] = 1.0
    return np.log(p)


def test_identical_posteriors_cost_zero(rng):
    p = softmax_columns(rng.normal(size=(4, 10)))
    assert alignment_cost(p, p, np.arange(4)) == 0.0
    res = greedy_align(p, p, AlignmentConfig(switch_proposals=1000))
    assert list(res.permutation) == [0, 1, 2, 3]
    assert res.cost == 0.0
    assert res.cost_trace == [0.0]


def test_swapped_one_hots():
    n = 6
    a, b = one_hot_columns(2, n, 0), one_hot_columns(2, n, 1)
    assert alignment_cost(a, b, [0, 1]) == pytest.approx(2 * n)
    assert alignment_cost(a, b, [1, 0]) == pytest.approx(0.0, abs=1e-12)
    res = greedy_align(a, b, AlignmentConfig(switch_proposals=10, restarts=1))
    assert list(res.permutation) == [1, 0]
    assert res.cost == pytest.approx(0.0, abs=1e-12)


def test_cost_direct_summation():
    rng = np.random.default_rng(31)
    a = softmax_columns(rng.normal(size=(3, 2)))
    b = softmax_columns(rng.normal(size=(3, 2)))
    perm = [2, 0, 1]
    expected = 0.0
    for i in range(2):
        for y in range(3):
            expected += abs(np.exp(a[perm[y], i]) - np.exp(b[y, i]))
    assert alignment_cost(a, b, perm) == pytest.approx(expected, abs=1e-15)


def test_shape_errors():
    with pytest.raises(ShapeError):
        alignment_cost(np.zeros((2, 3)), np.zeros((3, 3)), [0, 1])
    with pytest.raises(ShapeError):
        greedy_align(np.zeros((2, 3)), np.zeros((2, 4)))
    with pytest.raises(ShapeError):
        apply_head_permutation(np.zeros((3, 4)), [0, 1])


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 7), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_incremental_delta_matches_full(k, n, seed):
    rng = np.random.default_rng(seed)
    a = softmax_columns(rng.normal(size=(k, n)))
    b = softmax_columns(rng.normal(size=(k, n)))
    perm = rng.permutation(k)
    y1, y2 = rng.choice(k, 2, replace=False)
    swapped = perm.copy()
    swapped[[y1, y2]] = swapped[[y2, y1]]
    dist = row_distances(np.exp(a), np.exp(b))
    full = alignment_cost(a, b, swapped) - alignment_cost(a, b, perm)
    assert swap_delta(dist, perm, y1, y2) == pytest.approx(full, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_trace_and_consistency(k, seed):
    rng = np.random.default_rng(seed)
    a = softmax_columns(rng.normal(size=(k, 40)))
    b = softmax_columns(rng.normal(size=(k, 40)))
    res = greedy_align(a, b, AlignmentConfig(switch_proposals=500, restarts=3, seed=seed))
    assert all(y < x for x, y in zip(res.cost_trace, res.cost_trace[1:]))
    assert res.cost == res.cost_trace[-1]
    assert res.cost == pytest.approx(alignment_cost(a, b, res.permutation), abs=1e-9)
    assert sorted(res.permutation) == list(range(k))


def test_deterministic_per_seed(rng):
    a = softmax_columns(rng.normal(size=(6, 50)))
    b = softmax_columns(rng.normal(size=(6, 50)))
    cfg = AlignmentConfig(switch_proposals=2000, seed=9)
    r1, r2 = greedy_align(a, b, cfg), greedy_align(a, b, cfg)
    assert np.array_equal(r1.permutation, r2.permutation) and r1.cost_trace == r2.cost_trace


def test_subsampled_cost_uses_items_subset(rng):
    a = softmax_columns(rng.normal(size=(4, 200)))
    b = softmax_columns(rng.normal(size=(4, 200)))
    res = greedy_align(a, b, AlignmentConfig(switch_proposals=500, sample_items=50))
    assert res.cost < alignment_cost(a, b, res.permutation)


@pytest.mark.parametrize("seed", range(3))
def test_planted_matches_brute_force(seed):
    log_a, log_b, planted = planted_alignment(seed)
    res = greedy_align(log_a, log_b, AlignmentConfig(seed=seed))
    pa, pb = np.exp(log_a), np.exp(log_b)
    perms = np.array(list(itertools.permutations(range(8))))
    best = np.inf
    for chunk in np.array_split(perms, 40):
        costs = np.abs(pa[chunk] - pb[None]).sum(axis=(1, 2))
        best = min(best, costs.min())
    assert np.array_equal(res.permutation, planted)
    assert res.cost == pytest.approx(best, rel=1e-12)


def test_apply_head_permutation():
    w = np.arange(12.0).reshape(4, 3)
    assert np.array_equal(apply_head_permutation(w, [0, 1, 2, 3]), w)
    w2 = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(apply_head_permutation(w2, [1, 0]), w2[::-1])
    perm = np.random.default_rng(4).permutation(4)
    back = apply_head_permutation(apply_head_permutation(w, perm), invert_permutation(perm))
    assert np.array_equal(back, w)


def test_permuted_head_cost_identity(rng):
    # logits of a permuted head scored with the identity equal the original scored with perm
    wa, wb = rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
    x = rng.normal(size=(4, 30))
    perm = rng.permutation(5)
    la, lb = softmax_columns(wa @ x), softmax_columns(wb @ x)
    la_perm = softmax_columns(apply_head_permutation(wa, perm) @ x)
    assert alignment_cost(la_perm, lb, np.arange(5)) == pytest.approx(alignment_cost(la, lb, perm), abs=1e-12)
