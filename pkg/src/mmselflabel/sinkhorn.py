"""Entropic optimal transport by Sinkhorn-Knopp matrix scaling.

Solves ``min_{Q in U(r, c)} <Q, -log P> + (1/lambda) KL(Q || r c^T)`` whose
minimizer has the form ``Q = diag(u) exp(lambda log P) diag(v)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, InvalidMarginal, NumericalUnderflow, ShapeError
from .matrix import as_matrix, logsumexp

MARGINAL_SUM_TOL = 1e-9


@dataclass(frozen=True)
class SinkhornConfig:
    lam: float = 20.0
    max_iters: int = 1000
    tol: float = 1e-3
    log_domain: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidInput("lambda must be positive")
        if not self.tol > 0:
            raise InvalidInput("tol must be positive")
        if self.max_iters < 1:
            raise InvalidInput("max_iters must be at least 1")


@dataclass
class SinkhornDiagnostics:
    iterations_used: int
    final_marginal_violation: float
    converged: bool
    objective: float

    def to_dict(self):
        return {
            "iterations_used": self.iterations_used,
            "final_marginal_violation": self.final_marginal_violation,
            "converged": self.converged,
            "objective": self.objective,
        }


def check_marginal(m, name="marginal") -> np.ndarray:
    m = np.asarray(m, dtype=np.float64).ravel()
    if m.size == 0 or not np.all(np.isfinite(m)):
        raise InvalidMarginal(f"{name} must be a non-empty finite vector")
    if np.any(m <= 0):
        raise InvalidMarginal(f"{name} has non-positive entries")
    if abs(m.sum() - 1.0) > MARGINAL_SUM_TOL:
        raise InvalidMarginal(f"{name} sums to {m.sum():.12g}, not 1")
    return m


def _violation(q, r, c):
    return max(np.abs(q.sum(axis=1) - r).sum(), np.abs(q.sum(axis=0) - c).sum())


def _lse(a, axis):
    # inputs are finite by construction; skip the public validation
    m = a.max(axis=axis, keepdims=True)
    return np.squeeze(m + np.log(np.exp(a - m).sum(axis=axis, keepdims=True)), axis=axis)


def _solve_log(log_k, log_r, log_c, cfg):
    # f, g are log scaling vectors: log Q = f[:, None] + log_k + g[None, :]
    r = np.exp(log_r)
    g = np.zeros(log_k.shape[1])
    row = _lse(log_k, 1)
    f = log_r - row
    it = 0
    viol = np.inf
    while it < cfg.max_iters:
        it += 1
        g = log_c - _lse(log_k + f[:, None], 0)
        # columns are exact after the g-update; only rows can be off
        row = _lse(log_k + g[None, :], 1)
        viol = np.abs(np.exp(f + row) - r).sum()
        if viol <= cfg.tol:
            break
        f = log_r - row
    return np.exp(f[:, None] + log_k + g[None, :]), f, g, it, viol


def _solve_linear(log_k, r, c, cfg):
    kern = np.exp(log_k)
    if np.any(kern.sum(axis=1) == 0) or np.any(kern.sum(axis=0) == 0):
        raise NumericalUnderflow("kernel row or column underflowed to zero; use log_domain")
    v = np.ones(kern.shape[1])
    it = 0
    viol = np.inf
    while it < cfg.max_iters:
        it += 1
        kv = kern @ v
        if np.any(kv == 0):
            raise NumericalUnderflow("row scaling underflowed; use log_domain")
        u = r / kv
        ku = kern.T @ u
        if np.any(ku == 0):
            raise NumericalUnderflow("column scaling underflowed; use log_domain")
        v = c / ku
        q = u[:, None] * kern * v[None, :]
        viol = np.abs(q.sum(axis=1) - r).sum()
        if viol <= cfg.tol:
            break
    if not np.all(np.isfinite(q)):
        raise NumericalUnderflow("scaling vectors overflowed; use log_domain")
    with np.errstate(divide="ignore"):
        return q, np.log(u), np.log(v), it, viol


def sinkhorn_solve(log_p, r, c, cfg: SinkhornConfig | None = None, return_scalings=False):
    """Project the Gibbs kernel ``exp(lam * log_p)`` onto ``U(r, c)``.

    Returns ``(Q, diagnostics)``; with ``return_scalings`` the log scaling
    vectors ``(log u, log v)`` are appended, ``Q = diag(u) exp(lam * log_p) diag(v)``.
    """
    cfg = cfg or SinkhornConfig()
    log_p = as_matrix(log_p)
    if not np.all(np.isfinite(log_p)):
        raise InvalidInput("log_p contains non-finite values")
    k, n = log_p.shape
    r = check_marginal(r, "r")
    c = check_marginal(c, "c")
    if r.size != k or c.size != n:
        raise ShapeError(f"marginals {r.size}, {c.size} do not match log_p {log_p.shape}")

    log_k = cfg.lam * log_p
    if cfg.log_domain:
        q, log_u, log_v, it, viol = _solve_log(log_k, np.log(r), np.log(c), cfg)
    else:
        q, log_u, log_v, it, viol = _solve_linear(log_k, r, c, cfg)

    converged = bool(viol <= cfg.tol)
    # exact column renormalization so each item's distribution sums to c_i
    fix = c / q.sum(axis=0)
    q = q * fix[None, :]
    log_v = log_v + np.log(fix)
    final_viol = float(_violation(q, r, c))
    diag = SinkhornDiagnostics(
        iterations_used=it,
        final_marginal_violation=final_viol,
        converged=converged,
        objective=transport_objective(q, log_p, r, c, cfg.lam),
    )
    if return_scalings:
        return q, diag, log_u, log_v
    return q, diag


def hard_assign(q) -> np.ndarray:
    """Per-column argmax; ``np.argmax`` returns the lowest index on ties."""
    return np.argmax(as_matrix(q), axis=0).astype(np.int64)


def transport_objective(q, log_p, r, c, lam) -> float:
    """``<Q, -log P> + (1/lam) KL(Q || r c^T)`` with ``0 log 0 = 0``."""
    q = as_matrix(q)
    log_p = as_matrix(log_p)
    r = np.asarray(r, dtype=np.float64).ravel()
    c = np.asarray(c, dtype=np.float64).ravel()
    if q.shape != log_p.shape or q.shape != (r.size, c.size):
        raise ShapeError(f"shapes disagree: Q {q.shape}, log_p {log_p.shape}, r {r.size}, c {c.size}")
    ref = np.outer(r, c)
    pos = q > 0
    kl = float(np.sum(q[pos] * (np.log(q[pos]) - np.log(ref[pos]))))
    return float(np.sum(q * -log_p) + kl / lam)
