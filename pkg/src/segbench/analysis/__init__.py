from segbench.analysis.ranking import aggregate_seeds, kendall_tau, rank_models
from segbench.analysis.comparison import (
    RankingComparison,
    TauResult,
    compare_settings,
    tau_on_seed_means,
    tau_per_seed_mean,
)
from segbench.analysis.reference import load_reference_results, reference_path

__all__ = [
    "RankingComparison",
    "TauResult",
    "aggregate_seeds",
    "compare_settings",
    "kendall_tau",
    "load_reference_results",
    "rank_models",
    "reference_path",
    "tau_on_seed_means",
    "tau_per_seed_mean",
]
