"""Desk-scale experiment protocols shared by ``scripts/`` and the acceptance suite."""
from dataclasses import replace

import numpy as np

from .alignment import AlignmentConfig
from .data import SyntheticDatasetSpec, degrade_modality, generate_dataset
from .metrics import hungarian_accuracy, mean_max_purity, nmi
from .trainer import TrainConfig, train

# shorter schedule for protocols that need many runs
REDUCED = dict(epochs=50, num_clusterings=25, num_heads=4)

# per-modality separation giving 60-70% single-modality accuracy under REDUCED
CALIBRATED_SEPARATION = 3.15

DEGRADE_FACTORS = (1, 4, 8, 16)
DEGRADE_SEPARATION_A = 4.0
DEGRADE_SEPARATION_V = 8.0


def head0_scores(data, cfg):
    labels = train(data, cfg)[1][0]
    acc = hungarian_accuracy(labels, data.truth)[0]
    return {
        "accuracy": acc,
        "nmi": nmi(labels, data.truth),
        "mean_max_purity": mean_max_purity(labels, data.truth, cfg.k, int(data.truth.max()) + 1),
    }


def benchmark(seed=0, **train_kw):
    data = generate_dataset(SyntheticDatasetSpec(separation=8.0, seed=seed))
    return head0_scores(data, TrainConfig(seed=seed, **train_kw))


def modality_runs(seed, separation=CALIBRATED_SEPARATION, separation_a=None, **train_kw):
    """Head-0 accuracy for the a-only, v-only and joint runs on one dataset."""
    kw = dict(REDUCED, **train_kw)
    data = generate_dataset(SyntheticDatasetSpec(separation=separation, separation_a=separation_a, seed=seed))
    out = {}
    for name, mods in (("a", ("a",)), ("v", ("v",)), ("av", ("a", "v"))):
        out[name] = head0_scores(data, TrainConfig(seed=seed, modalities=mods, **kw))["accuracy"]
    return out


def k_sweep(ks=(8, 10, 20), seed=0, **train_kw):
    data = generate_dataset(SyntheticDatasetSpec(separation=8.0, seed=seed))
    return {k: head0_scores(data, TrainConfig(k=k, seed=seed, **train_kw)) for k in ks}


def degradation_curve(seed, factors=DEGRADE_FACTORS, **train_kw):
    """Joint and degraded-only accuracy as modality ``a`` is corrupted.

    The degradation noise is drawn from the same generator state at every
    factor, so the curve compares common random numbers.
    """
    kw = dict(REDUCED, **train_kw)
    data = generate_dataset(
        SyntheticDatasetSpec(separation=DEGRADE_SEPARATION_V, separation_a=DEGRADE_SEPARATION_A, seed=seed)
    )
    joint, single = [], []
    for f in factors:
        noisy = replace(data, features_a=degrade_modality(data.features_a, f, np.random.default_rng(seed)))
        joint.append(head0_scores(noisy, TrainConfig(seed=seed, **kw))["accuracy"])
        single.append(head0_scores(noisy, TrainConfig(seed=seed, modalities=("a",), **kw))["accuracy"])
    return joint, single
