"""Rank statistics over per-model scores.

Kendall's coefficient is computed directly on score vectors via the
sign-pair sum tau = 2/(n(n-1)) * sum_{i<j} sign(x_i - x_j) * sign(y_i - y_j);
tied pairs contribute zero and the normalization stays n(n-1)/2 regardless
of ties.
"""

from __future__ import annotations

import numpy as np


def kendall_tau(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
        raise ValueError(f"expected equal-length 1-d vectors, got {x.shape} and {y.shape}")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two entries to correlate")
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    s = np.triu(dx * dy, k=1).sum()
    return float(2.0 * s / (n * (n - 1)))


def aggregate_seeds(scores) -> tuple[float, float]:
    """Mean and sample standard deviation (ddof=1) of per-seed scores.

    A single run has std 0 by definition.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or len(scores) == 0:
        raise ValueError("need at least one score")
    if len(scores) == 1:
        return float(scores[0]), 0.0
    return float(scores.mean()), float(scores.std(ddof=1))


def rank_models(scores) -> np.ndarray:
    """Display ranks, descending; ties share the best rank of their group.

    rank_i = 1 + number of scores strictly greater than score_i.
    """
    scores = np.asarray(scores, dtype=np.float64)
    return 1 + (scores[None, :] > scores[:, None]).sum(axis=1)
