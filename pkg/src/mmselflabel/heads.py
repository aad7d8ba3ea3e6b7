"""Linear clustering heads, decorrelated view partitions, inter-head agreement."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInput, ShapeError
from .matrix import as_matrix, read_matrix, write_matrix
from .metrics import nmi


@dataclass
class LinearHead:
    weights: np.ndarray  # K x D
    bias: np.ndarray  # K

    def __post_init__(self):
        self.weights = as_matrix(self.weights)
        self.bias = np.asarray(self.bias, dtype=np.float64).ravel()
        if self.bias.size != self.weights.shape[0]:
            raise ShapeError("bias length must equal the number of weight rows")

    @property
    def k(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        return self.weights.shape[1]

    @classmethod
    def random(cls, k, dim, rng, std=0.01):
        return cls(rng.normal(0.0, std, size=(k, dim)), rng.normal(0.0, std, size=k))

    def augmented(self) -> np.ndarray:
        """Weights with the bias appended as a final column, ``K x (D + 1)``."""
        return np.hstack([self.weights, self.bias[:, None]])

    @classmethod
    def from_augmented(cls, w):
        w = as_matrix(w)
        return cls(w[:, :-1].copy(), w[:, -1].copy())


def head_logits(head: LinearHead, features) -> np.ndarray:
    x = as_matrix(features)
    if x.shape[0] != head.dim:
        raise ShapeError(f"head expects {head.dim}-d features, got {x.shape[0]}")
    return head.weights @ x + head.bias[:, None]


@dataclass
class HeadSet:
    """``heads[m][h]`` is head ``h`` of modality ``m``."""

    heads: list

    def __post_init__(self):
        if not self.heads or not self.heads[0]:
            raise InvalidInput("a HeadSet needs at least one modality and one head")
        h = len(self.heads[0])
        for mod in self.heads:
            if len(mod) != h:
                raise InvalidInput("every modality needs the same number of heads")
            if any(x.k != mod[0].k or x.dim != mod[0].dim for x in mod):
                raise InvalidInput("heads within a modality must share K and D")

    @property
    def num_heads(self):
        return len(self.heads[0])

    @property
    def num_modalities(self):
        return len(self.heads)

    @classmethod
    def random(cls, k, dims, num_heads, rng, std=0.01):
        return cls([[LinearHead.random(k, d, rng, std) for _ in range(num_heads)] for d in dims])

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        entries = []
        for m, mod in enumerate(self.heads):
            for h, head in enumerate(mod):
                name = f"head_m{m}_h{h}.txt"
                write_matrix(directory / name, head.augmented())
                entries.append({"modality": m, "head": h, "file": name})
        (directory / "manifest.json").write_text(json.dumps({"heads": entries}, indent=2) + "\n")

    @classmethod
    def load(cls, directory):
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        n_mod = 1 + max(e["modality"] for e in manifest["heads"])
        n_head = 1 + max(e["head"] for e in manifest["heads"])
        grid = [[None] * n_head for _ in range(n_mod)]
        for e in manifest["heads"]:
            grid[e["modality"]][e["head"]] = LinearHead.from_augmented(read_matrix(directory / e["file"]))
        return cls(grid)


def partition_heads(h, rng) -> np.ndarray:
    """Assign ``h // 2`` randomly chosen heads to view 0 and the rest to view 1."""
    if h < 1:
        raise InvalidInput("need at least one head")
    views = np.ones(h, dtype=np.int64)
    views[rng.permutation(h)[: h // 2]] = 0
    return views


def inter_head_agreement(labelings) -> float:
    """Mean NMI over all unordered pairs of heads."""
    labelings = [np.asarray(x) for x in labelings]
    if len(labelings) < 2:
        raise InvalidInput("need at least two labelings")
    n = labelings[0].size
    if any(x.size != n for x in labelings):
        raise ShapeError("labelings must share length")
    scores = [nmi(a, b) for a, b in itertools.combinations(labelings, 2)]
    return float(np.mean(scores))
