"""Dense-matrix helpers: stable log-sum-exp / log-softmax and the matrix text format.

Matrices are plain float64 numpy arrays. Columns index items, rows index
clusters, so a ``K x N`` log-posterior has one normalized log-distribution per
column.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidInput, ShapeError

LOG_FLOOR = 1e-300


class MatrixFormatError(InvalidInput):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def _check_finite(a, name="input"):
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} contains non-finite values")


def as_matrix(data) -> np.ndarray:
    a = np.asarray(data, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def logsumexp(values, axis=None, pairwise=True):
    """``log(sum(exp(values)))`` evaluated as ``m + log(sum(exp(values - m)))``.

    ``pairwise=False`` forces strict left-to-right accumulation, which is
    slower and only useful for reproducing sequential references.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise InvalidInput("logsumexp of an empty vector")
    _check_finite(v)
    m = np.max(v, axis=axis, keepdims=True)
    e = np.exp(v - m)
    if pairwise:
        s = np.sum(e, axis=axis, keepdims=True)
    elif axis is None:
        s = np.add.accumulate(e.ravel())[-1:].reshape(m.shape)
    else:
        s = np.add.accumulate(e, axis=axis).take([-1], axis=axis)
    out = m + np.log(s)
    if axis is None:
        return float(out.ravel()[0])
    return np.squeeze(out, axis=axis)


def softmax_columns(logits, pairwise=True) -> np.ndarray:
    """Column-wise log-softmax of a ``K x N`` logit matrix."""
    z = as_matrix(logits)
    if z.shape[0] < 1 or z.shape[1] < 1:
        raise InvalidInput("logits must have at least one row and one column")
    _check_finite(z, "logits")
    return z - logsumexp(z, axis=0, pairwise=pairwise)[None, :]


def average_log_softmax(logit_views) -> np.ndarray:
    """Mean over views of each view's column log-softmax.

    The result is deliberately not renormalized; it is a log-score matrix for
    the transport solver rather than a proper log-posterior.
    """
    views = [as_matrix(v) for v in logit_views]
    if not views:
        raise InvalidInput("need at least one view")
    shape = views[0].shape
    for v in views[1:]:
        if v.shape != shape:
            raise ShapeError(f"view shapes differ: {shape} vs {v.shape}")
    base = softmax_columns(views[0])
    # base + mean of offsets: identical views give back ``base`` bit for bit
    offset = np.zeros(shape)
    for v in views[1:]:
        offset += softmax_columns(v) - base
    return base + offset / len(views)


def safe_log(p) -> np.ndarray:
    return np.log(np.maximum(p, LOG_FLOOR))


def probabilities(log_p) -> np.ndarray:
    return np.exp(np.asarray(log_p, dtype=np.float64))


def read_matrix(path) -> np.ndarray:
    """Parse ``<rows> <cols>`` followed by ``rows`` lines of ``cols`` reals."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise MatrixFormatError(path, 0, f"cannot read file ({exc.strerror})") from exc
    if not lines:
        raise MatrixFormatError(path, 1, "empty file")
    header = lines[0].split()
    if len(header) != 2:
        raise MatrixFormatError(path, 1, "header must be '<rows> <cols>'")
    try:
        rows, cols = int(header[0]), int(header[1])
    except ValueError:
        raise MatrixFormatError(path, 1, "header entries must be integers") from None
    if rows < 0 or cols < 0:
        raise MatrixFormatError(path, 1, "negative dimension")
    body = [ln for ln in enumerate(lines[1:], start=2) if ln[1].strip()]
    if len(body) != rows:
        raise MatrixFormatError(path, len(lines), f"expected {rows} data rows, found {len(body)}")
    out = np.empty((rows, cols))
    for r, (lineno, text) in enumerate(body):
        parts = text.split()
        if len(parts) != cols:
            raise MatrixFormatError(path, lineno, f"expected {cols} values, found {len(parts)}")
        try:
            out[r] = [float(x) for x in parts]
        except ValueError:
            raise MatrixFormatError(path, lineno, "unparseable number") from None
    if not np.all(np.isfinite(out)):
        raise MatrixFormatError(path, 0, "non-finite value")
    return out


def format_matrix(m) -> str:
    a = as_matrix(m)
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines += [" ".join(f"{x:.17g}" for x in row) for row in a]
    return "\n".join(lines) + "\n"


def write_matrix(path, m) -> None:
    Path(path).write_text(format_matrix(m))
