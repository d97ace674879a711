"""Analysis assembly and static-report emission.

The analysis compares every non-baseline setting against the baseline:
Kendall tau in both aggregation modes, training-time ratios and
trainable-parameter deltas. When a published correlation exists and the
recomputed mean-based value rounds differently, the row is flagged (the
published values for some settings were computed per seed, and per-seed
scores are not public).

Reports are deterministic: identical inputs produce identical bytes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from segbench.analysis.comparison import SettingComparison, compare_settings
from segbench.analysis.ranking import aggregate_seeds, rank_models
from segbench.analysis.reference import ReferenceResults

PER_SEED_UNAVAILABLE = "per-seed scores unavailable from published data"


@dataclass
class TauRow:
    setting: str
    versus: str
    n_models: int
    tau_seed_means: float
    tau_per_seed: float | None = None
    published_tau: float | None = None
    note: str | None = None
    time_ratio: float | None = None
    params_m: float | None = None
    params_delta_m: float | None = None

    @property
    def flagged(self) -> bool:
        return self.published_tau is not None and round(self.tau_seed_means, 2) != round(
            self.published_tau, 2
        )


@dataclass
class Analysis:
    source: str
    baseline: str
    rows: list[TauRow] = field(default_factory=list)
    extra_rows: list[TauRow] = field(default_factory=list)
    scores: dict = field(default_factory=dict)       # setting -> model -> [seed scores]
    stds: dict = field(default_factory=dict)         # setting -> model -> std (fixture only)
    model_names: dict = field(default_factory=dict)  # slug -> display name

    def display_name(self, model: str) -> str:
        return self.model_names.get(model, model)


def _tau_row(scores, setting, versus, published=None, per_seed_available=True) -> TauRow:
    comparison: SettingComparison = compare_settings(scores, setting, versus)
    per_seed = comparison.per_seed.tau if (comparison.per_seed and per_seed_available) else None
    row = TauRow(
        setting=setting,
        versus=versus,
        n_models=comparison.seed_means.n,
        tau_seed_means=comparison.seed_means.tau,
        tau_per_seed=per_seed,
        published_tau=published,
    )
    notes = []
    if not per_seed_available:
        notes.append(PER_SEED_UNAVAILABLE)
    if row.flagged:
        notes.append(
            f"mean-based tau {row.tau_seed_means:.4f} deviates from published "
            f"{row.published_tau:.2f}"
        )
    row.note = "; ".join(notes) or None
    return row


def build_analysis_from_reference(ref: ReferenceResults, baseline: str = "default") -> Analysis:
    if baseline not in ref.means:
        raise KeyError(f"baseline setting {baseline!r} absent from reference results")
    scores = ref.score_table()
    analysis = Analysis(source="bundled reference results", baseline=baseline,
                        scores=scores, stds=ref.stds, model_names=ref.model_names)
    for setting in sorted(ref.means):
        if setting == baseline:
            continue
        meta = ref.settings.get(setting, {})
        row = _tau_row(scores, setting, baseline,
                       published=ref.published_tau(setting, baseline),
                       per_seed_available=ref.has_per_seed)
        row.time_ratio = meta.get("time_ratio")
        row.params_m = meta.get("trainable_params_m")
        baseline_params = ref.settings.get(baseline, {}).get("trainable_params_m")
        if row.params_m is not None and baseline_params is not None:
            row.params_delta_m = row.params_m - baseline_params
        analysis.rows.append(row)
        for versus, published in (meta.get("published_tau") or {}).items():
            if versus != baseline:
                analysis.extra_rows.append(
                    _tau_row(scores, setting, versus, published=published,
                             per_seed_available=ref.has_per_seed)
                )
    return analysis


def scores_from_records(records: list[dict]):
    """Group ok-status records: setting -> model -> seed-ordered mIoU list.

    A forced re-run appends a second record for the same cell; the latest
    one wins.
    """
    cells: dict[tuple, dict] = {}
    for record in records:
        if record.get("status") != "ok":
            continue
        setting = record.get("setting_name") or ",".join(
            f"{k}={v}" for k, v in sorted((record.get("setting") or {}).items())
        )
        cells[(setting, record["model"], record["seed"])] = record
    scores: dict[str, dict[str, dict[int, float]]] = {}
    times: dict[str, list[float]] = {}
    params: dict[str, list[int]] = {}
    for (setting, model, seed), record in cells.items():
        scores.setdefault(setting, {}).setdefault(model, {})[seed] = float(record["miou"])
        times.setdefault(setting, []).append(float(record["train_time_s"]))
        params.setdefault(setting, []).append(int(record["trainable_params"]))
    ordered = {
        setting: {
            model: [by_seed[s] for s in sorted(by_seed)]
            for model, by_seed in by_model.items()
        }
        for setting, by_model in scores.items()
    }
    return ordered, times, params


def build_analysis_from_records(
    records: list[dict], baseline: str, extra_pairs: list[tuple[str, str]] = (),
    allow_empty: bool = False,
) -> Analysis:
    scores, times, params = scores_from_records(records)
    if not scores and allow_empty:
        return Analysis(source="results store", baseline=baseline)
    if baseline not in scores:
        raise KeyError(
            f"baseline setting {baseline!r} has no completed runs; "
            f"available: {', '.join(sorted(scores)) or '(none)'}"
        )
    analysis = Analysis(source="results store", baseline=baseline, scores=scores)
    baseline_time = float(np.mean(times[baseline]))
    baseline_params = float(np.mean(params[baseline]))
    for setting in sorted(scores):
        if setting == baseline:
            continue
        row = _tau_row(scores, setting, baseline)
        row.time_ratio = float(np.mean(times[setting])) / baseline_time
        row.params_m = float(np.mean(params[setting])) / 1e6
        row.params_delta_m = row.params_m - baseline_params / 1e6
        analysis.rows.append(row)
    for a, b in extra_pairs:
        analysis.extra_rows.append(_tau_row(scores, a, b))
    return analysis


def _fmt(value, precision=2, none="-"):
    if value is None:
        return none
    return f"{value:.{precision}f}"


def render_analysis_text(analysis: Analysis) -> str:
    lines = [
        f"source: {analysis.source}",
        f"baseline: {analysis.baseline}",
        "",
        "setting | tau(seed means) | tau(per-seed mean) | published | time ratio | params (M) | delta params (M) | note",
    ]
    for row in analysis.rows:
        lines.append(
            f"{row.setting} | {row.tau_seed_means:.4f} | {_fmt(row.tau_per_seed, 4)} | "
            f"{_fmt(row.published_tau)} | {_fmt(row.time_ratio, 1)} | {_fmt(row.params_m, 1)} | "
            f"{_fmt(row.params_delta_m, 1)} | {row.note or ''}"
        )
    if analysis.extra_rows:
        lines.append("")
        lines.append("additional comparisons:")
        for row in analysis.extra_rows:
            lines.append(
                f"{row.setting} vs {row.versus} | {row.tau_seed_means:.4f} | "
                f"{_fmt(row.tau_per_seed, 4)} | {_fmt(row.published_tau)} | {row.note or ''}"
            )
    if not analysis.rows and not analysis.extra_rows:
        lines.append("(only the baseline setting is present; nothing to compare)")
    return "\n".join(lines) + "\n"


def _setting_table(analysis: Analysis, setting: str) -> list[tuple[str, float, float, int]]:
    """Per-model (display name, mean, std, rank) rows, best first."""
    per_model = analysis.scores[setting]
    models = sorted(per_model)
    means, stds = [], []
    for model in models:
        mean, std = aggregate_seeds(per_model[model])
        if analysis.stds:
            std = analysis.stds.get(setting, {}).get(model, std)
        means.append(mean)
        stds.append(std)
    ranks = rank_models(means)
    rows = [
        (analysis.display_name(m), means[i], stds[i], int(ranks[i]))
        for i, m in enumerate(models)
    ]
    return sorted(rows, key=lambda r: (r[3], r[0]))


def render_report_markdown(analysis: Analysis) -> str:
    lines = ["# Benchmark report", ""]
    lines.append(f"Source: {analysis.source}. Baseline setting: `{analysis.baseline}`.")
    lines.append("")
    if not analysis.scores:
        lines.append("No runs recorded.")
        return "\n".join(lines) + "\n"

    lines.append("## Ranking stability (Kendall tau vs baseline)")
    lines.append("")
    lines.append("| setting | tau (seed means) | tau (per-seed mean) | published | note |")
    lines.append("|---|---|---|---|---|")
    for row in analysis.rows:
        lines.append(
            f"| {row.setting} | {row.tau_seed_means:.4f} | {_fmt(row.tau_per_seed, 4)} | "
            f"{_fmt(row.published_tau)} | {row.note or ''} |"
        )
    if analysis.extra_rows:
        lines.append("")
        lines.append("## Additional comparisons")
        lines.append("")
        lines.append("| comparison | tau (seed means) | published | note |")
        lines.append("|---|---|---|---|")
        for row in analysis.extra_rows:
            lines.append(
                f"| {row.setting} vs {row.versus} | {row.tau_seed_means:.4f} | "
                f"{_fmt(row.published_tau)} | {row.note or ''} |"
            )
    if any(r.time_ratio is not None or r.params_m is not None for r in analysis.rows):
        lines.append("")
        lines.append("## Training efficiency")
        lines.append("")
        lines.append("| setting | time ratio | trainable params (M) | delta (M) |")
        lines.append("|---|---|---|---|")
        for row in analysis.rows:
            lines.append(
                f"| {row.setting} | {_fmt(row.time_ratio, 1)} | {_fmt(row.params_m, 1)} | "
                f"{_fmt(row.params_delta_m, 1)} |"
            )
    for setting in sorted(analysis.scores):
        lines.append("")
        lines.append(f"## Scores: {setting}")
        lines.append("")
        lines.append("| rank | model | mIoU | std |")
        lines.append("|---|---|---|---|")
        for name, mean, std, rank in _setting_table(analysis, setting):
            lines.append(f"| {rank} | {name} | {mean:.1f} | {std:.1f} |")
    return "\n".join(lines) + "\n"


def render_report(analysis: Analysis, out_dir: str | Path) -> list[Path]:
    """Write report.md plus bar-chart images; byte-stable for identical inputs."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create report directory {out_dir}: {err}") from err
    if not os.access(out_dir, os.W_OK):
        raise OSError(f"report directory {out_dir} is not writable")

    written = []
    report = out_dir / "report.md"
    report.write_text(render_report_markdown(analysis))
    written.append(report)

    for setting in sorted(analysis.scores):
        rows = _setting_table(analysis, setting)
        names = [r[0] for r in rows]
        means = [r[1] for r in rows]
        stds = [r[2] for r in rows]
        fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(names)), 4), dpi=100)
        ax.bar(range(len(names)), means, yerr=stds, capsize=3)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=35, ha="right", fontsize=8)
        ax.set_ylabel("validation mIoU")
        ax.set_title(f"scores: {setting}")
        ax.grid(axis="y", alpha=0.4)
        fig.tight_layout()
        path = out_dir / f"scores_{_slug(setting)}.png"
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
        written.append(path)

    if analysis.rows:
        names = [row.setting for row in analysis.rows]
        taus = [row.tau_seed_means for row in analysis.rows]
        fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(names)), 4), dpi=100)
        ax.bar(range(len(names)), taus)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=35, ha="right", fontsize=8)
        ax.set_ylabel("Kendall rank correlation")
        ax.set_ylim(-1.0, 1.0)
        ax.set_title(f"ranking stability vs {analysis.baseline}")
        ax.grid(axis="y", alpha=0.4)
        fig.tight_layout()
        path = out_dir / "tau_vs_baseline.png"
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
        written.append(path)
    return written


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)
