"""Ranking-stability comparisons between two benchmark settings.

A score table maps setting -> model -> per-seed scores. Tau is reported in
two modes: computed once on per-model seed means, and (when seed counts
align across models and settings) computed per seed and averaged. The two
modes genuinely differ, so both are always surfaced.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from segbench.analysis.ranking import kendall_tau

ScoreTable = Mapping[str, Mapping[str, Sequence[float]]]

MODE_SEED_MEANS = "on-seed-means"
MODE_PER_SEED = "mean-of-per-seed"


@dataclass
class RankingComparison:
    """Paired per-model score vectors from two settings, same model order."""

    models: list[str]
    x: list[float]
    y: list[float]

    def __post_init__(self):
        if not (len(self.models) == len(self.x) == len(self.y)):
            raise ValueError("models, x and y must have equal lengths")
        if len(self.models) < 2:
            raise ValueError("need at least two models to compare rankings")

    def tau(self) -> float:
        return kendall_tau(self.x, self.y)


@dataclass
class TauResult:
    tau: float
    n: int
    mode: str

    def __post_init__(self):
        if not -1.0 - 1e-12 <= self.tau <= 1.0 + 1e-12:
            raise ValueError(f"tau {self.tau} outside [-1, 1]")
        if self.mode not in (MODE_SEED_MEANS, MODE_PER_SEED):
            raise ValueError(f"unknown mode {self.mode!r}")


def _common_models(scores: ScoreTable, setting_a: str, setting_b: str) -> list[str]:
    for name in (setting_a, setting_b):
        if name not in scores:
            raise KeyError(f"setting {name!r} not present in the score table")
    models_a = set(scores[setting_a])
    models_b = set(scores[setting_b])
    if models_a != models_b:
        only_a = sorted(models_a - models_b)
        only_b = sorted(models_b - models_a)
        raise ValueError(
            f"model sets differ between {setting_a!r} and {setting_b!r}: "
            f"only in {setting_a}: {only_a or '[]'}; only in {setting_b}: {only_b or '[]'}"
        )
    return sorted(models_a)


def tau_on_seed_means(scores: ScoreTable, setting_a: str, setting_b: str) -> TauResult:
    models = _common_models(scores, setting_a, setting_b)
    x = [float(np.mean(scores[setting_a][m])) for m in models]
    y = [float(np.mean(scores[setting_b][m])) for m in models]
    return TauResult(tau=RankingComparison(models, x, y).tau(), n=len(models), mode=MODE_SEED_MEANS)


def tau_per_seed_mean(scores: ScoreTable, setting_a: str, setting_b: str) -> TauResult | None:
    """Average of per-seed tau values; None when seed counts do not align."""
    models = _common_models(scores, setting_a, setting_b)
    counts = {len(scores[s][m]) for s in (setting_a, setting_b) for m in models}
    if len(counts) != 1:
        return None
    n_seeds = counts.pop()
    taus = []
    for s in range(n_seeds):
        x = [float(scores[setting_a][m][s]) for m in models]
        y = [float(scores[setting_b][m][s]) for m in models]
        taus.append(RankingComparison(models, x, y).tau())
    return TauResult(tau=float(np.mean(taus)), n=len(models), mode=MODE_PER_SEED)


@dataclass
class SettingComparison:
    setting_a: str
    setting_b: str
    seed_means: TauResult
    per_seed: TauResult | None = None
    notes: list[str] = field(default_factory=list)


def compare_settings(scores: ScoreTable, setting_a: str, setting_b: str) -> SettingComparison:
    """Tau between two settings, in both aggregation modes where available."""
    if setting_a == setting_b:
        models = _common_models(scores, setting_a, setting_b)
        one = TauResult(tau=1.0, n=len(models), mode=MODE_SEED_MEANS)
        return SettingComparison(setting_a, setting_b, seed_means=one,
                                 per_seed=TauResult(1.0, len(models), MODE_PER_SEED))
    result = SettingComparison(
        setting_a,
        setting_b,
        seed_means=tau_on_seed_means(scores, setting_a, setting_b),
        per_seed=tau_per_seed_mean(scores, setting_a, setting_b),
    )
    if result.per_seed is None:
        result.notes.append("per-seed mode unavailable: seed counts do not align")
    return result
