"""Pure-Python/numpy implementations of the hot kernels.

Mirrors ``_ckernels.pyx`` function for function. All window sums accumulate
column by column, left to right, so both backends round identically.
"""
from __future__ import annotations

import itertools

import numpy as np


def _window_sums(x: np.ndarray, lo: int, hi: int) -> np.ndarray:
    acc = x[..., lo].copy()
    for j in range(lo + 1, hi):
        acc += x[..., j]
    return acc


def robust_scores(dists, kprime: int) -> np.ndarray:
    """(N, C, K) sorted distances -> (N, C) trimmed means."""
    d = np.ascontiguousarray(dists, dtype=np.float64)
    k = d.shape[-1]
    return _window_sums(d, kprime, k - kprime) / (k - 2 * kprime)


def _bound_tables(d: np.ndarray, kprime: int):
    """Upper/lower bound tables of shape (N, C, K'+1)."""
    n, c, k = d.shape
    width = k - 2 * kprime
    upper = np.empty((n, c, kprime + 1))
    lower = np.empty((n, c, kprime + 1))
    for t in range(kprime + 1):
        upper[..., t] = _window_sums(d, kprime + t, k - kprime + t) / width
        lower[..., t] = _window_sums(d, kprime - t, k - kprime - t) / width
    return upper, lower


def certify_batch(dists, predicted, kprime: int, group: bool) -> np.ndarray:
    """Certified sizes for N instances by linear scan over T = 0..K'."""
    d = np.ascontiguousarray(dists, dtype=np.float64)
    pred = np.asarray(predicted, dtype=np.int64)
    n, c, _ = d.shape
    upper, lower = _bound_tables(d, kprime)
    rows = np.arange(n)
    up = upper[rows, pred]  # (N, K'+1)
    lower = lower.copy()
    lower[rows, pred] = np.inf
    out = np.zeros(n, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    for t in range(kprime + 1):
        if group:
            ok = np.ones(n, dtype=bool)
            for s in range(t + 1):
                ok &= up[:, s] < lower[:, :, t - s].min(axis=1)
        else:
            ok = up[:, t] < lower[:, :, t].min(axis=1)
        alive &= ok
        out[alive] = t
    return out


def extrema(d, budget: int, candidates):
    """Exhaustive max/min trimmed mean after changing ``budget`` entries.

    Every size-``budget`` subset of positions (lexicographic) receives every
    assignment of candidate values (mixed-radix order); the tuple is re-sorted
    and trimmed for each K' in ``0..(K-1)//2``. Entries with K' < budget are NaN.
    """
    d = np.asarray(d, dtype=np.float64)
    cand = np.asarray(candidates, dtype=np.float64)
    k = d.size
    kmax = (k - 1) // 2
    hi = np.full(kmax + 1, np.nan)
    lo = np.full(kmax + 1, np.nan)
    if budget > kmax:
        return hi, lo
    if budget == 0:
        rows = d[None, :]
    else:
        assign = np.array(list(itertools.product(cand, repeat=budget)))
        blocks = []
        for subset in itertools.combinations(range(k), budget):
            block = np.repeat(d[None, :], len(assign), axis=0)
            block[:, list(subset)] = assign
            blocks.append(block)
        rows = np.concatenate(blocks)
    rows = np.sort(rows, axis=1)
    for kp in range(budget, kmax + 1):
        means = _window_sums(rows, kp, k - kp) / (k - 2 * kp)
        hi[kp] = means.max()
        lo[kp] = means.min()
    return hi, lo
