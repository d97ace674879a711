"""Minimum-cost one-to-one assignment of prediction queries to targets."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def hungarian_match(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Assign queries (rows) to all T targets (columns), minimizing total cost.

    Returns (query_indices, target_indices) with target_indices == arange(T).
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValueError(f"expected a 2-d cost matrix, got shape {cost.shape}")
    q, t = cost.shape
    if t > q:
        raise ValueError(f"{t} targets exceed {q} available queries")
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(cost)
    order = np.argsort(cols)
    return rows[order], cols[order]
