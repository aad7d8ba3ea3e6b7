"""Multi-modal self-labelling with optimal-transport pseudo-labels."""

__version__ = "0.1.0"

from .alignment import AlignmentConfig, AlignmentResult, alignment_cost, apply_head_permutation, greedy_align
from .data import MultiModalDataset, SyntheticDatasetSpec, degrade_modality, generate_dataset
from .heads import HeadSet, LinearHead, head_logits, inter_head_agreement, partition_heads
from .marginals import (
    MarginalSpec,
    brute_force_marginal_permutation,
    optimal_marginal_permutation,
    permutation_energy,
    realize_marginal,
)
from .matrix import average_log_softmax, logsumexp, read_matrix, softmax_columns, write_matrix
from .metrics import ari, contingency, hungarian_accuracy, mean_cluster_entropy, mean_max_purity, nmi
from .sinkhorn import SinkhornConfig, SinkhornDiagnostics, hard_assign, sinkhorn_solve, transport_objective
from .trainer import RunTrace, TrainConfig, clustering_schedule, train
