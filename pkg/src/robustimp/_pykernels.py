"""Numpy implementations of the batch kernels (fallback when the extension is absent)."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray


def _segment_slopes(xs: NDArray, ys: NDArray) -> NDArray:
    dx = np.diff(xs, axis=1)
    dy = np.diff(ys, axis=1)
    return np.divide(dy, dx, out=np.zeros_like(dy), where=dx > 0)


def batch_utilities(xs, ys, left, right, values: NDArray) -> NDArray:
    """``out[t, ...] = u_t(values[...])`` for padded knot rows.

    Uses the sum-of-clipped-ramps form, exact for padded (zero-length)
    segments because their slope is taken as zero.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    T, K = xs.shape
    v = np.asarray(values, dtype=float)[None, ...]
    shape = (T,) + (1,) * (v.ndim - 1)
    x0 = xs[:, 0].reshape(shape)
    xk = xs[:, -1].reshape(shape)
    out = ys[:, 0].reshape(shape) + np.asarray(left).reshape(shape) * np.minimum(v - x0, 0.0)
    if K > 1:
        slopes = _segment_slopes(xs, ys)
        lo = xs[:, :-1].reshape((T,) + (1,) * (v.ndim - 1) + (K - 1,))
        width = np.diff(xs, axis=1).reshape(lo.shape)
        s = slopes.reshape(lo.shape)
        ramp = np.clip(v[..., None] - lo, 0.0, width)
        out = out + np.sum(s * ramp, axis=-1)
    out = out + np.asarray(right).reshape(shape) * np.maximum(v - xk, 0.0)
    return out


def batch_expected_utilities(xs, ys, left, right, payoffs, beliefs) -> NDArray:
    """``out[t, i] = sum_s beliefs[t, s] * u_t(payoffs[i, s])``."""
    vals = batch_utilities(xs, ys, left, right, np.asarray(payoffs, dtype=float))
    return np.einsum("tis,ts->ti", vals, np.asarray(beliefs, dtype=float))


def first_chain_violation(xs, ys, left, right, payoffs, beliefs, eps: float) -> int:
    """Index of the first trial with ``a > max(alts) + eps > ahat + 2*eps``; -1 if none."""
    eu = batch_expected_utilities(xs, ys, left, right, payoffs, beliefs)
    best = eu[:, 2:].max(axis=1)
    hits = np.flatnonzero((eu[:, 0] > best + eps) & (best > eu[:, 1] + eps))
    return int(hits[0]) if hits.size else -1
