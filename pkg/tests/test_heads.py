import numpy as np
import pytest

from mmselflabel.errors import InvalidInput, ShapeError
from mmselflabel.heads import HeadSet, LinearHead, head_logits, inter_head_agreement, partition_heads
from mmselflabel.matrix import softmax_columns
from mmselflabel.metrics import nmi


def test_partition_sizes():
    assert sorted(partition_heads(2, np.random.default_rng(0))) == [0, 1]
    for seed in range(20):
        v = partition_heads(10, np.random.default_rng(seed))
        assert (v == 0).sum() == 5
    odd = partition_heads(7, np.random.default_rng(1))
    assert abs((odd == 0).sum() - (odd == 1).sum()) <= 1
    with pytest.raises(InvalidInput):
        partition_heads(0, np.random.default_rng(0))


def test_partition_deterministic_and_varies():
    a = partition_heads(10, np.random.default_rng(42))
    b = partition_heads(10, np.random.default_rng(42))
    assert np.array_equal(a, b)
    seen = {tuple(partition_heads(10, np.random.default_rng(s))) for s in range(20)}
    assert len(seen) > 1


def test_partition_frequency():
    counts = np.zeros(10)
    for seed in range(10_000):
        counts += partition_heads(10, np.random.default_rng(seed)) == 0
    assert np.all(np.abs(counts / 10_000 - 0.5) <= 0.02)


def test_zero_head_gives_uniform_posteriors(rng):
    head = LinearHead(np.zeros((4, 3)), np.zeros(4))
    z = head_logits(head, rng.normal(size=(3, 5)))
    assert np.array_equal(z, np.zeros((4, 5)))
    assert np.allclose(np.exp(softmax_columns(z)), 0.25)


def test_logit_arithmetic():
    head = LinearHead([[2.0]], [1.0])
    assert head_logits(head, [[3.0]]).tolist() == [[7.0]]


def test_logits_match_loop_matmul():
    rng = np.random.default_rng(3)
    w, b, x = rng.normal(size=(3, 4)), rng.normal(size=3), rng.normal(size=(4, 2))
    ref = [[sum(w[k, d] * x[d, i] for d in range(4)) + b[k] for i in range(2)] for k in range(3)]
    assert np.allclose(head_logits(LinearHead(w, b), x), ref, atol=1e-14)


def test_logits_shape_error():
    with pytest.raises(ShapeError):
        head_logits(LinearHead(np.zeros((2, 3)), np.zeros(2)), np.zeros((4, 1)))
    with pytest.raises(ShapeError):
        LinearHead(np.zeros((2, 3)), np.zeros(3))


def test_head_isolation(rng):
    hs = HeadSet.random(3, [4], 3, rng)
    x = rng.normal(size=(4, 6))
    before = [head_logits(h, x) for h in hs.heads[0]]
    hs.heads[0][1].weights += 1.0
    after = [head_logits(h, x) for h in hs.heads[0]]
    assert np.array_equal(before[0], after[0]) and np.array_equal(before[2], after[2])
    assert not np.array_equal(before[1], after[1])


def test_agreement_examples(rng):
    x = rng.integers(0, 4, 50)
    assert inter_head_agreement([x, x, x]) == pytest.approx(1.0)
    perm = np.array([2, 0, 3, 1])
    assert inter_head_agreement([x, perm[x]]) == pytest.approx(1.0)
    with pytest.raises(InvalidInput):
        inter_head_agreement([x])


def test_agreement_matches_pairwise_nmi():
    rng = np.random.default_rng(200)
    labs = [rng.integers(0, 4, 200) for _ in range(3)]
    ref = (nmi(labs[0], labs[1]) + nmi(labs[0], labs[2]) + nmi(labs[1], labs[2])) / 3
    assert inter_head_agreement(labs) == pytest.approx(ref, abs=1e-15)


def test_agreement_invariant_to_single_head_relabel(rng):
    labs = [rng.integers(0, 3, 40) for _ in range(4)]
    base = inter_head_agreement(labs)
    labs[2] = np.array([1, 2, 0])[labs[2]]
    assert inter_head_agreement(labs) == pytest.approx(base, abs=1e-12)


def test_headset_roundtrip(tmp_path, rng):
    hs = HeadSet.random(3, [4, 2], 2, rng)
    hs.save(tmp_path / "heads")
    loaded = HeadSet.load(tmp_path / "heads")
    for m in range(2):
        for h in range(2):
            assert np.array_equal(loaded.heads[m][h].weights, hs.heads[m][h].weights)
            assert np.array_equal(loaded.heads[m][h].bias, hs.heads[m][h].bias)
    assert (tmp_path / "heads" / "manifest.json").exists()


def test_headset_validation(rng):
    with pytest.raises(InvalidInput):
        HeadSet([[LinearHead.random(3, 4, rng)], []])
