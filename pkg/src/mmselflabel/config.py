"""JSON run configuration: parsing, validation and seed derivation.

A config is one JSON object with a ``version`` field and optional sections
``sinkhorn``, ``marginal``, ``alignment``, ``train``, ``dataset``, ``degrade``
and ``output``. Component seeds that are not set explicitly are derived from
the top-level ``seed``::

    component_seed = SeedSequence([seed, stream]).generate_state(2, uint64)[0]

with streams dataset=0, train=1, alignment=2, marginal=3, degrade=4.
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .alignment import AlignmentConfig
from .data import SyntheticDatasetSpec
from .marginals import MarginalSpec
from .sinkhorn import SinkhornConfig
from .trainer import TrainConfig

CONFIG_VERSION = 1
STREAMS = {"dataset": 0, "train": 1, "alignment": 2, "marginal": 3, "degrade": 4}
SECTIONS = ("version", "seed", "sinkhorn", "marginal", "alignment", "train", "dataset", "degrade", "output")


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def derive_seed(seed, stream) -> int:
    return int(np.random.SeedSequence([int(seed), STREAMS[stream]]).generate_state(2, np.uint64)[0] >> 1)


def _section(doc, name):
    val = doc.get(name, {})
    if not isinstance(val, dict):
        raise ConfigError(name, "must be an object")
    return dict(val)


def _build(cls, values, path, renames=None):
    renames = renames or {}
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, val in values.items():
        field = renames.get(key, key)
        if field not in names:
            raise ConfigError(f"{path}.{key}", "unknown field")
        kwargs[field] = val
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def sinkhorn_config(doc) -> SinkhornConfig:
    return _build(SinkhornConfig, _section(doc, "sinkhorn"), "sinkhorn", {"lambda": "lam"})


def marginal_spec(values, path, k, seed) -> MarginalSpec:
    values = dict(values)
    if "k" in values and values["k"] != k:
        raise ConfigError(f"{path}.k", f"is {values['k']} but the problem has {k} clusters")
    values["k"] = k
    values.setdefault("seed", derive_seed(seed, "marginal"))
    if "weights" in values:
        values["weights"] = tuple(values["weights"])
    return _build(MarginalSpec, values, path)


def alignment_config(doc, seed) -> AlignmentConfig:
    values = _section(doc, "alignment")
    values.setdefault("seed", derive_seed(seed, "alignment"))
    return _build(AlignmentConfig, values, "alignment")


def dataset_spec(doc, seed) -> SyntheticDatasetSpec:
    values = _section(doc, "dataset")
    values.setdefault("seed", derive_seed(seed, "dataset"))
    prior = values.pop("class_prior", None)
    k_true = values.get("k_true", SyntheticDatasetSpec.k_true)
    if prior is not None:
        if not isinstance(prior, dict):
            raise ConfigError("dataset.class_prior", "must be an object")
        values["class_prior"] = marginal_spec(prior, "dataset.class_prior", k_true, seed)
    return _build(SyntheticDatasetSpec, values, "dataset")


def train_config(doc, seed) -> TrainConfig:
    values = _section(doc, "train")
    values.setdefault("seed", derive_seed(seed, "train"))
    if "lambda" in values:
        values["lam"] = values.pop("lambda")
    k = values.get("k", TrainConfig.k)
    marginal = values.pop("marginal", doc.get("marginal"))
    if marginal is not None:
        values["marginal"] = marginal_spec(marginal, "train.marginal", k, seed)
    if "modalities" in values:
        values["modalities"] = tuple(values["modalities"])
    values["sinkhorn"] = sinkhorn_config(doc)
    values["alignment"] = alignment_config(doc, seed)
    if "lam" not in values and "lambda" in doc.get("sinkhorn", {}):
        values["lam"] = doc["sinkhorn"]["lambda"]
    return _build(TrainConfig, values, "train", {"lambda": "lam"})


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read ({exc.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return validate(doc)


def validate(doc) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in doc:
        if key not in SECTIONS:
            raise ConfigError(key, "unknown section")
    version = doc.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError("version", f"unsupported version {version!r}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", "must be a non-negative integer")
    return doc


def set_path(doc, dotted, value) -> None:
    """Apply a command-line override such as ``train.epochs=5``."""
    keys = dotted.split(".")
    node = doc
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(dotted, "cannot descend into a non-object")
    node[keys[-1]] = value
