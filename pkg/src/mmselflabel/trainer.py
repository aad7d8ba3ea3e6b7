"""Self-labelling loop: Sinkhorn pseudo-labels alternating with head training.

Features are fixed; only the linear heads learn. Every head of every modality
is trained with cross-entropy against that head's current pseudo-labels, and
the pseudo-labels come from a transport solve on the modality-averaged
log-softmax of the head.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .alignment import AlignmentConfig, apply_head_permutation, greedy_align
from .errors import InvalidInput, TrainingDiverged
from .heads import HeadSet, LinearHead, inter_head_agreement, partition_heads
from .marginals import MarginalSpec, optimal_marginal_permutation, realize_marginal
from .matrix import average_log_softmax, softmax_columns
from .metrics import hungarian_accuracy, mean_cluster_entropy, mean_max_purity, nmi
from .sinkhorn import SinkhornConfig, hard_assign, sinkhorn_solve

log = logging.getLogger(__name__)

SCHEDULES = ("inverse_quadratic", "quadratic", "uniform")

# named RNG streams derived from the top-level seed
_INIT, _ALIGN, _PARTITION, _AUGMENT, _BATCH = range(5)


@dataclass(frozen=True)
class TrainConfig:
    k: int = 10
    epochs: int = 200
    lr: float = 0.01
    warmup_epochs: int = 10
    batch_size: int = 256
    lam: float = 20.0
    num_heads: int = 10
    num_clusterings: int = 100
    marginal: MarginalSpec | None = None
    align_at_init: bool = True
    seed: int = 0
    momentum: float = 0.9
    weight_decay: float = 1e-5
    schedule: str = "inverse_quadratic"
    init_std: float = 0.01
    augment_std: float = 0.05
    modalities: tuple = ("a", "v")
    standardize: bool = True
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)
    alignment: AlignmentConfig = field(default_factory=AlignmentConfig)

    def __post_init__(self):
        for name in ("k", "num_heads", "num_clusterings", "batch_size"):
            if getattr(self, name) < 1:
                raise InvalidInput(f"{name} must be >= 1")
        if self.epochs < 0 or self.warmup_epochs < 0:
            raise InvalidInput("epochs and warmup_epochs must be >= 0")
        if not self.lr > 0 or not self.lam > 0:
            raise InvalidInput("lr and lam must be positive")
        if self.schedule not in SCHEDULES:
            raise InvalidInput(f"schedule must be one of {SCHEDULES}")
        if not self.modalities or any(m not in ("a", "v") for m in self.modalities):
            raise InvalidInput("modalities must be a non-empty subset of ('a', 'v')")
        if len(set(self.modalities)) != len(self.modalities):
            raise InvalidInput("modalities must not repeat")
        if self.marginal is not None and self.marginal.k != self.k:
            raise InvalidInput("marginal.k must equal k")

    def marginal_spec(self) -> MarginalSpec:
        return self.marginal or MarginalSpec("uniform", k=self.k)


@dataclass
class RunTrace:
    rounds: list = field(default_factory=list)
    final: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def clustering_schedule(num_clusterings, total_steps, kind="inverse_quadratic") -> list:
    """Step indices at which pseudo-labels are recomputed.

    ``inverse_quadratic`` places event ``i`` at ``T (i/M)^2``, so clustering
    gets rarer as training goes on; ``quadratic`` mirrors it (dense late) and
    ``uniform`` spaces events evenly. The first event is always step 0,
    collisions are bumped forward and the result fits in ``[0, T-1]``.
    """
    m, t = num_clusterings, total_steps
    if m < 1 or t < 1:
        raise InvalidInput("need at least one clustering and one step")
    if m > t:
        raise InvalidInput(f"{m} clusterings do not fit into {t} steps")
    i = np.arange(1, m + 1, dtype=np.float64)
    if kind == "inverse_quadratic":
        raw = t * (i / m) ** 2
    elif kind == "quadratic":
        raw = t * (1.0 - (1.0 - (i - 1) / m) ** 2)
    elif kind == "uniform":
        raw = t * (i - 1) / m
    else:
        raise InvalidInput(f"unknown schedule {kind!r}")
    steps = [min(int(math.floor(x + 0.5)), t - 1) for x in raw]
    steps[0] = 0
    for j in range(1, m):
        steps[j] = max(steps[j], steps[j - 1] + 1)
    steps[-1] = min(steps[-1], t - 1)
    for j in range(m - 2, -1, -1):
        steps[j] = min(steps[j], steps[j + 1] - 1)
    return steps


def heads_loss_and_grad(w, b, x, labels):
    """Mean softmax cross-entropy of stacked linear heads and its gradients.

    ``w`` is ``H x K x D``, ``b`` is ``H x K``, ``x`` is ``D x B`` and
    ``labels`` is ``H x B``. Returns per-head losses and ``(dw, db)``.
    """
    z = w @ x + b[:, :, None]
    z = z - z.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    bsz = log_p.shape[2]
    idx = labels[:, None, :]
    loss = -np.take_along_axis(log_p, idx, axis=1)[:, 0, :].mean(axis=1)
    dz = np.exp(log_p)
    np.put_along_axis(dz, idx, np.take_along_axis(dz, idx, axis=1) - 1.0, axis=1)
    dz /= bsz
    return loss, dz @ x.T, dz.sum(axis=2)


def _standardize(x):
    mu = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1, keepdims=True)
    return (x - mu) / np.where(sd > 0, sd, 1.0)


def _stack_logits(w, b, x):
    return w @ x + b[:, :, None]


class _Run:
    def __init__(self, feats, truth, cfg: TrainConfig):
        self.cfg = cfg
        self.feats = feats
        self.truth = truth
        self.n = feats[0].shape[1]
        seed = cfg.seed
        self.rngs = {s: np.random.default_rng([seed, s]) for s in (_INIT, _ALIGN, _PARTITION, _AUGMENT, _BATCH)}
        hs = HeadSet.random(cfg.k, [f.shape[0] for f in feats], cfg.num_heads, self.rngs[_INIT], cfg.init_std)
        self.w = [np.stack([hd.weights for hd in mod]) for mod in hs.heads]
        self.b = [np.stack([hd.bias for hd in mod]) for mod in hs.heads]
        self.vel_w = [np.zeros_like(x) for x in self.w]
        self.vel_b = [np.zeros_like(x) for x in self.b]
        self.r = realize_marginal(cfg.marginal_spec())
        self.c = np.full(self.n, 1.0 / self.n)
        self.masses = np.full((cfg.num_heads, cfg.k), 1.0 / cfg.k)
        self.labels = np.zeros((cfg.num_heads, self.n), dtype=np.int64)

    def align(self):
        cfg = self.cfg
        perms, costs = [], []
        for h in range(cfg.num_heads):
            la = softmax_columns(_stack_logits(self.w[0][h : h + 1], self.b[0][h : h + 1], self.feats[0])[0])
            lv = softmax_columns(_stack_logits(self.w[1][h : h + 1], self.b[1][h : h + 1], self.feats[1])[0])
            acfg = AlignmentConfig(
                cfg.alignment.switch_proposals,
                cfg.alignment.restarts,
                int(self.rngs[_ALIGN].integers(2**63)),
                cfg.alignment.sample_items,
            )
            res = greedy_align(la, lv, acfg)
            aug = apply_head_permutation(np.hstack([self.w[0][h], self.b[0][h][:, None]]), res.permutation)
            self.w[0][h], self.b[0][h] = aug[:, :-1], aug[:, -1]
            perms.append([int(x) for x in res.permutation])
            costs.append(res.cost)
        return {"permutations": perms, "costs": costs}

    def head_log_scores(self, h, feats):
        views = [_stack_logits(self.w[m][h : h + 1], self.b[m][h : h + 1], feats[m])[0] for m in range(len(feats))]
        return average_log_softmax(views)

    def assign(self, h, log_p):
        perm = optimal_marginal_permutation(self.masses[h], self.r)
        q, diag = sinkhorn_solve(log_p, self.r[perm], self.c, self.sinkhorn_cfg)
        return hard_assign(q), diag

    @property
    def sinkhorn_cfg(self):
        s = self.cfg.sinkhorn
        return SinkhornConfig(self.cfg.lam, s.max_iters, s.tol, s.log_domain)

    def cluster(self):
        cfg = self.cfg
        partition = partition_heads(cfg.num_heads, self.rngs[_PARTITION])
        rng = self.rngs[_AUGMENT]
        augmented = [
            [f + rng.normal(size=f.shape) * (cfg.augment_std * f.std(axis=1, keepdims=True)) for f in self.feats]
            for _ in range(2)
        ]
        diags = []
        for h in range(cfg.num_heads):
            labels, diag = self.assign(h, self.head_log_scores(h, augmented[partition[h]]))
            self.labels[h] = labels
            self.masses[h] = np.bincount(labels, minlength=cfg.k) / self.n
            diags.append(diag.to_dict())
        return partition, diags

    def step(self, idx, lr):
        cfg = self.cfg
        lab = self.labels[:, idx]
        total = 0.0
        for m, x in enumerate(self.feats):
            loss, gw, gb = heads_loss_and_grad(self.w[m], self.b[m], x[:, idx], lab)
            gw = gw + cfg.weight_decay * self.w[m]
            self.vel_w[m] = cfg.momentum * self.vel_w[m] + gw
            self.vel_b[m] = cfg.momentum * self.vel_b[m] + gb
            self.w[m] -= lr * self.vel_w[m]
            self.b[m] -= lr * self.vel_b[m]
            total += float(loss.mean())
        return total / len(self.feats)

    def metrics(self, labels):
        if self.truth is None:
            return None
        acc, _ = hungarian_accuracy(labels, self.truth)
        return {
            "accuracy": acc,
            "nmi": nmi(labels, self.truth),
            "mean_entropy": mean_cluster_entropy(labels, self.truth, self.cfg.k),
            "mean_max_purity": mean_max_purity(labels, self.truth, self.cfg.k),
        }

    def head_set(self):
        return HeadSet(
            [[LinearHead(w[h].copy(), b[h].copy()) for h in range(self.cfg.num_heads)] for w, b in zip(self.w, self.b)]
        )


def select_features(data, modalities, standardize=True):
    feats = [data.features_a if m == "a" else data.features_v for m in modalities]
    return [_standardize(f) if standardize else np.array(f, dtype=np.float64) for f in feats]


def train(data, cfg: TrainConfig, on_round=None):
    """Run the self-labelling loop on ``data``.

    Returns ``(head_set, labels, trace)`` where ``labels`` is ``H x N`` (head 0
    is the reporting head). ``on_round`` is called with each round record.
    """
    feats = select_features(data, cfg.modalities, cfg.standardize)
    n = feats[0].shape[1]
    truth = getattr(data, "truth", None)
    run = _Run(feats, truth, cfg)
    trace = RunTrace(metadata={
        "view_partition": "redrawn every clustering round",
        "alignment": "once at initialization" if cfg.align_at_init and len(feats) == 2 else "none",
        "modalities": list(cfg.modalities),
        "schedule": cfg.schedule,
    })
    if cfg.align_at_init and len(feats) == 2:
        trace.metadata["alignment_result"] = run.align()

    steps_per_epoch = math.ceil(n / cfg.batch_size)
    total = cfg.epochs * steps_per_epoch
    if total == 0 and cfg.num_clusterings != 1:
        raise InvalidInput("without training steps only a single clustering is possible")
    events = clustering_schedule(cfg.num_clusterings, max(total, 1), cfg.schedule)
    event_set = {s: i for i, s in enumerate(events)}
    warmup = cfg.warmup_epochs * steps_per_epoch
    batch_rng = run.rngs[_BATCH]

    losses = []
    record = None

    def close_round():
        if record is not None:
            record["train_loss"] = float(np.mean(losses)) if losses else None
            first = losses[:steps_per_epoch]
            record["first_epoch_loss"] = float(np.mean(first)) if first else None
            trace.rounds.append(record)
            if on_round is not None:
                on_round(record)

    def open_round(idx, step):
        partition, diags = run.cluster()
        rec = {
            "round": idx,
            "step": step,
            "epoch": step // steps_per_epoch if total else 0,
            "view_partition": [int(v) for v in partition],
            "sinkhorn": diags,
            "head_metrics": [run.metrics(run.labels[h]) for h in range(cfg.num_heads)] if truth is not None else None,
            "inter_head_agreement": inter_head_agreement(run.labels) if cfg.num_heads > 1 else None,
        }
        return rec

    if total == 0:
        record = open_round(0, 0)
    step = 0
    for epoch in range(cfg.epochs):
        order = batch_rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            if step in event_set:
                close_round()
                losses = []
                record = open_round(event_set[step], step)
            lr = cfg.lr * min(1.0, (step + 1) / warmup) if warmup else cfg.lr
            loss = run.step(order[start : start + cfg.batch_size], lr)
            if not math.isfinite(loss):
                raise TrainingDiverged(record["round"])
            losses.append(loss)
            step += 1
    close_round()

    # final labelling on clean features with the trained heads
    final_labels = np.empty_like(run.labels)
    final_diags = []
    for h in range(cfg.num_heads):
        final_labels[h], diag = run.assign(h, run.head_log_scores(h, feats))
        final_diags.append(diag.to_dict())
    trace.final = {
        "sinkhorn": final_diags,
        "head_metrics": [run.metrics(final_labels[h]) for h in range(cfg.num_heads)] if truth is not None else None,
        "inter_head_agreement": inter_head_agreement(final_labels) if cfg.num_heads > 1 else None,
    }
    return run.head_set(), final_labels, trace
