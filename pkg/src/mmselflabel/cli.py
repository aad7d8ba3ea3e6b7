"""Batch command line: ``cluster``, ``align``, ``evaluate`` and ``simulate``.

Exit codes: 0 on success (including a Sinkhorn solve that hit ``max_iters``),
2 for usage, parse and validation errors, 1 for anything unexpected.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .alignment import greedy_align
from .config import (
    ConfigError,
    alignment_config,
    dataset_spec,
    derive_seed,
    load_config,
    marginal_spec,
    set_path,
    sinkhorn_config,
    train_config,
    validate,
)
from .data import degrade_modality, generate_dataset
from .errors import InvalidInput, ShapeError
from .marginals import optimal_marginal_permutation, realize_marginal
from .matrix import average_log_softmax, read_matrix, softmax_columns, write_matrix
from .metrics import evaluate as evaluate_labels
from .sinkhorn import hard_assign, sinkhorn_solve
from .trainer import train

USAGE_ERROR = 2


class UsageError(Exception):
    pass


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_ints(path, values) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in values))


def read_labels(path) -> np.ndarray:
    out = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"{path}: cannot read ({exc.strerror})") from None
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        if not text.isdigit():
            raise UsageError(f"{path}:{lineno}: expected a non-negative integer, got {text!r}")
        out.append(int(text))
    if not out:
        raise UsageError(f"{path}: no labels")
    return np.array(out, dtype=np.int64)


def _config(args) -> dict:
    doc = load_config(args.config) if getattr(args, "config", None) else validate({})
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(item, "override must look like section.field=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        set_path(doc, key, value)
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    return validate(doc)


def _read_views(paths):
    views = [read_matrix(p) for p in paths]
    for p, v in zip(paths[1:], views[1:]):
        if v.shape != views[0].shape:
            raise UsageError(f"{p}: shape {v.shape} differs from {paths[0]}: {views[0].shape}")
    return views


def cmd_cluster(args) -> int:
    doc = _config(args)
    views = _read_views(args.logits)
    k, n = views[0].shape
    cfg = sinkhorn_config(doc)
    if args.lam is not None:
        cfg = replace(cfg, lam=args.lam)
    spec = marginal_spec(doc.get("marginal", {}), "marginal", k, doc.get("seed", 0))
    log_p = average_log_softmax(views)

    # soft cluster masses of the (renormalized) averaged posterior
    post = np.exp(log_p - log_p.max(axis=0))
    post /= post.sum(axis=0)
    masses = post.mean(axis=1)
    r = realize_marginal(spec)
    perm = optimal_marginal_permutation(masses, r)
    q, diag = sinkhorn_solve(log_p, r[perm], np.full(n, 1.0 / n), cfg)
    labels = hard_assign(q)

    write_ints(args.out_labels, labels)
    report = {
        "command": "cluster",
        "inputs": [str(p) for p in args.logits],
        "k": k,
        "n": n,
        "lambda": cfg.lam,
        "converged": diag.converged,
        "diagnostics": diag.to_dict(),
        "marginal_violation": diag.final_marginal_violation,
        "marginal": {"kind": spec.kind, "r": r.tolist(), "permutation": perm.tolist()},
        "cluster_histogram": np.bincount(labels, minlength=k).tolist(),
    }
    write_json(args.out_report, report)
    return 0


def cmd_align(args) -> int:
    doc = _config(args)
    a, b = _read_views([args.logits_a, args.logits_b])
    cfg = alignment_config(doc, doc.get("seed", 0))
    over = {k: v for k, v in (("switch_proposals", args.proposals), ("restarts", args.restarts)) if v is not None}
    if over:
        cfg = replace(cfg, **over)
    res = greedy_align(softmax_columns(a), softmax_columns(b), cfg)
    write_ints(args.out_permutation, res.permutation)
    report = {
        "command": "align",
        "cost": res.cost,
        "initial_cost": res.cost_trace[0],
        "trace_length": len(res.cost_trace),
        "restart_index": res.restart_index,
        "switch_proposals": cfg.switch_proposals,
        "restarts": cfg.restarts,
        "permutation": res.permutation.tolist(),
    }
    write_json(args.out_report, report)
    return 0


def cmd_evaluate(args) -> int:
    pred, truth = read_labels(args.pred), read_labels(args.truth)
    if pred.size != truth.size:
        raise UsageError(f"label files differ in length: {pred.size} vs {truth.size}")
    report = evaluate_labels(pred, truth, args.k_pred, args.k_true)
    if args.percent:
        report["percent"] = {key: 100.0 * report[key] for key in ("nmi", "ari", "accuracy", "mean_max_purity")}
    if args.out_report:
        write_json(args.out_report, report)
    else:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


def _round_line(rec):
    parts = [f"round {rec['round']:3d}", f"step {rec['step']:6d}", f"epoch {rec['epoch']:4d}"]
    if rec.get("train_loss") is not None:
        parts.append(f"loss {rec['train_loss']:.4f}")
    if rec.get("head_metrics"):
        m = rec["head_metrics"][0]
        parts.append(f"acc {m['accuracy']:.4f} nmi {m['nmi']:.4f}")
    if rec.get("inter_head_agreement") is not None:
        parts.append(f"agree {rec['inter_head_agreement']:.4f}")
    return "  ".join(parts)


def cmd_simulate(args) -> int:
    doc = _config(args)
    seed = doc.get("seed", 0)
    spec = dataset_spec(doc, seed)
    cfg = train_config(doc, seed)
    over = {k: v for k, v in (("epochs", args.epochs), ("k", args.k)) if v is not None}
    if over:
        try:
            cfg = replace(cfg, **over)
        except ValueError as exc:
            raise ConfigError("train", str(exc)) from None
    output = doc.get("output", {})
    out_dir = Path(args.out_dir or output.get("dir", "simulate_out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    data = generate_dataset(spec)
    degrade = doc.get("degrade")
    if degrade:
        factor = float(degrade.get("factor", 1.0))
        modality = degrade.get("modality", "a")
        if modality not in ("a", "v"):
            raise ConfigError("degrade.modality", "must be 'a' or 'v'")
        rng = np.random.default_rng(degrade.get("seed", derive_seed(seed, "degrade")))
        field = "features_a" if modality == "a" else "features_v"
        data = replace(data, **{field: degrade_modality(getattr(data, field), factor, rng)})

    if output.get("write_dataset", False):
        write_matrix(out_dir / "features_a.txt", data.features_a)
        write_matrix(out_dir / "features_v.txt", data.features_v)
        write_ints(out_dir / "truth.txt", data.truth)

    trace_path = out_dir / "trace.jsonl"
    with trace_path.open("w") as fh:

        def on_round(rec):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
            print(_round_line(rec))

        heads, labels, trace = train(data, cfg, on_round=on_round)

    for h in range(labels.shape[0]):
        write_ints(out_dir / f"labels_head{h}.txt", labels[h])
    heads.save(out_dir / "heads")
    final_metrics = evaluate_labels(labels[0], data.truth, cfg.k)
    summary = {
        "command": "simulate",
        "seed": seed,
        "dataset": {"n": spec.n, "k_true": spec.k_true, "separation": spec.separation, "seed": spec.seed},
        "train": {"k": cfg.k, "epochs": cfg.epochs, "num_heads": cfg.num_heads, "num_clusterings": cfg.num_clusterings,
                  "lambda": cfg.lam, "modalities": list(cfg.modalities), "seed": cfg.seed},
        "rounds": len(trace.rounds),
        "metadata": trace.metadata,
        "final": trace.final,
        "head0": final_metrics,
    }
    write_json(out_dir / "summary.json", summary)
    print(f"final head 0: accuracy {final_metrics['accuracy']:.4f} nmi {final_metrics['nmi']:.4f} "
          f"ari {final_metrics['ari']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmselflabel", description="Optimal-transport self-labelling tools")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=None, help="BLAS thread count (default: all cores)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--set", action="append", metavar="SECTION.FIELD=VALUE", help="override a config field")
        sp.add_argument("--seed", type=int, help="top-level seed")

    c = sub.add_parser("cluster", help="Sinkhorn pseudo-labels from one or more logit matrices")
    c.add_argument("logits", nargs="+", type=Path)
    c.add_argument("--out-labels", required=True, type=Path)
    c.add_argument("--out-report", required=True, type=Path)
    c.add_argument("--lambda", dest="lam", type=float)
    common(c)
    c.set_defaults(func=cmd_cluster)

    a = sub.add_parser("align", help="permutation aligning the rows of two logit matrices")
    a.add_argument("logits_a", type=Path)
    a.add_argument("logits_b", type=Path)
    a.add_argument("--out-permutation", required=True, type=Path)
    a.add_argument("--out-report", required=True, type=Path)
    a.add_argument("--proposals", type=int)
    a.add_argument("--restarts", type=int)
    common(a)
    a.set_defaults(func=cmd_align)

    e = sub.add_parser("evaluate", help="clustering metrics against ground truth")
    e.add_argument("pred", type=Path)
    e.add_argument("truth", type=Path)
    e.add_argument("--out-report", type=Path)
    e.add_argument("--k-pred", type=int)
    e.add_argument("--k-true", type=int)
    e.add_argument("--percent", action="store_true", help="add a percentage rendering of the fractions")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("simulate", help="synthetic two-modality self-labelling run")
    s.add_argument("config", type=Path)
    s.add_argument("--out-dir", type=Path)
    s.add_argument("--epochs", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--set", action="append", metavar="SECTION.FIELD=VALUE")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    threads = args.threads or os.cpu_count() or 1
    try:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=threads):
            return args.func(args)
    except (ConfigError, UsageError, InvalidInput, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
