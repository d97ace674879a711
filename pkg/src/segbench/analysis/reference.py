"""Loader for the bundled published reference results."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml


def reference_path() -> Path:
    return Path(__file__).parent / "data" / "reference_results.yaml"


@dataclass
class ReferenceResults:
    model_names: dict[str, str]
    settings: dict[str, dict]
    means: dict[str, dict[str, float]]
    stds: dict[str, dict[str, float]]
    # only means and stds were published; per-seed tau cannot be recomputed
    has_per_seed: bool = False

    def score_table(self) -> dict[str, dict[str, list[float]]]:
        return {
            setting: {model: [mean] for model, mean in per_model.items()}
            for setting, per_model in self.means.items()
        }

    def published_tau(self, setting: str, versus: str) -> float | None:
        return (self.settings.get(setting, {}).get("published_tau") or {}).get(versus)


def load_reference_results(path: Path | None = None) -> ReferenceResults:
    with open(path or reference_path()) as fh:
        data = yaml.safe_load(fh)
    means: dict[str, dict[str, float]] = {}
    stds: dict[str, dict[str, float]] = {}
    for setting, per_model in data["scores"].items():
        means[setting] = {m: float(pair[0]) for m, pair in per_model.items()}
        stds[setting] = {m: float(pair[1]) for m, pair in per_model.items()}
    return ReferenceResults(
        model_names=data["models"],
        settings=data["settings"],
        means=means,
        stds=stds,
    )
