import itertools

import numpy as np
import pytest

from segbench.decoders.matching import hungarian_match


def brute_force_min_cost(cost):
    """Exhaustive minimum over all query-permutations (oracle)."""
    q, t = cost.shape
    best, best_perm = float("inf"), None
    for perm in itertools.permutations(range(q), t):
        total = sum(cost[perm[j], j] for j in range(t))
        if total < best:
            best, best_perm = total, perm
    return best, best_perm


class TestHungarianMatch:
    def test_diagonal_zeros_give_identity(self):
        cost = np.ones((3, 3)) - np.eye(3)
        queries, targets = hungarian_match(cost)
        assert list(queries) == [0, 1, 2]
        assert list(targets) == [0, 1, 2]

    def test_antidiagonal_case(self):
        queries, targets = hungarian_match(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert list(targets) == [0, 1]
        assert list(queries) == [1, 0]
        assert sum(np.array([[1.0, 0.0], [0.0, 1.0]])[q, t] for q, t in zip(queries, targets)) == 0

    def test_matches_brute_force_on_random_6x6(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            cost = rng.normal(size=(6, 6))
            queries, targets = hungarian_match(cost)
            total = sum(cost[q, t] for q, t in zip(queries, targets))
            oracle_total, _ = brute_force_min_cost(cost)
            assert total == pytest.approx(oracle_total, abs=1e-12)

    def test_rectangular_assigns_every_target(self):
        rng = np.random.default_rng(7)
        cost = rng.normal(size=(5, 3))
        queries, targets = hungarian_match(cost)
        assert list(targets) == [0, 1, 2]
        assert len(set(queries)) == 3
        total = sum(cost[q, t] for q, t in zip(queries, targets))
        oracle_total, _ = brute_force_min_cost(cost)
        assert total == pytest.approx(oracle_total, abs=1e-12)

    def test_more_targets_than_queries_rejected(self):
        with pytest.raises(ValueError, match="exceed"):
            hungarian_match(np.zeros((2, 3)))

    def test_non_finite_cost_rejected(self):
        cost = np.zeros((3, 2))
        cost[0, 0] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            hungarian_match(cost)
