"""Command-line interface: run, matrix, analyze, report."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import torch

from segbench.analysis.reference import load_reference_results
from segbench.runner.config import (
    DEFAULT_PATCH_SIZES,
    ConfigError,
    ExperimentConfig,
    load_config_file,
    load_matrix,
)
from segbench.runner.reporting import (
    build_analysis_from_records,
    build_analysis_from_reference,
    render_analysis_text,
    render_report,
)
from segbench.runner.store import ResultsStore
from segbench.training.loop import run_training


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="YAML config file (flags override it)")
    parser.add_argument("--model", help="encoder name from the registry")
    parser.add_argument("--variant", choices=["B", "L"])
    parser.add_argument("--patch", type=int, choices=list(DEFAULT_PATCH_SIZES),
                        help="patch size in pixels (other values need a config file)")
    parser.add_argument("--decoder", choices=["linear", "mask"])
    parser.add_argument("--freeze", action="store_true", default=None,
                        help="freeze the encoder (linear probing)")
    parser.add_argument("--dataset", "--train-dataset", dest="train_dataset")
    parser.add_argument("--eval-dataset")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--steps", type=int)
    parser.add_argument("--no-augment", action="store_true", default=None)
    parser.add_argument("--train-subset", type=int)
    parser.add_argument("--eval-subset", type=int)
    parser.add_argument("--setting-name")


def _config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config:
        data.update(load_config_file(args.config).to_dict())
    overrides = {
        "model": args.model,
        "variant": args.variant,
        "patch_size": args.patch,
        "decoder": args.decoder,
        "freeze": args.freeze,
        "train_dataset": args.train_dataset,
        "eval_dataset": args.eval_dataset,
        "seed": args.seed,
        "steps": args.steps,
        "train_subset": args.train_subset,
        "eval_subset": args.eval_subset,
        "setting_name": args.setting_name,
    }
    if args.no_augment:
        overrides["augment"] = False
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "model" not in data:
        raise ConfigError("--model is required (or provide it in --config)")
    config = ExperimentConfig.from_dict(data)
    # flag values were already restricted by argparse; config files may use
    # any geometry-compatible patch size
    config.validate(strict_patch=False)
    return config


def _run_one(config: ExperimentConfig, store: ResultsStore, args, log=print) -> None:
    if store.has(config.fingerprint(), config.seed) and not args.force:
        log(f"skip {config.model} seed {config.seed} ({config.fingerprint()}): already recorded")
        return
    save_dir = Path(args.store).parent / "checkpoints" if args.save_model else None
    result = run_training(
        config, data_root=args.data_root, weights_root=args.weights_root,
        log=log if args.verbose else None, save_dir=save_dir,
        audit_path=getattr(args, "audit_confusion", None),
    )
    store.append(result)
    if result.status == "ok":
        log(
            f"{config.model} seed {config.seed}: mIoU {100 * result.miou:.2f} "
            f"({result.train_time_s:.1f}s, {result.trainable_params / 1e6:.2f}M trainable params)"
        )
    else:
        log(f"{config.model} seed {config.seed}: {result.status}")


def cmd_run(args) -> int:
    config = _config_from_args(args)
    store = ResultsStore(args.store)
    _run_one(config, store, args)
    return 0


def cmd_matrix(args) -> int:
    configs = load_matrix(args.file)
    for config in configs:
        config.validate(strict_patch=False)
    store = ResultsStore(args.store)
    completed = store.completed_keys()
    pending = [c for c in configs if (c.fingerprint(), c.seed) not in completed]
    print(f"matrix: {len(configs)} cells, {len(configs) - len(pending)} already recorded")
    for i, config in enumerate(pending, start=1):
        print(f"[{i}/{len(pending)}] {config.setting_key()} / {config.model} / seed {config.seed}")
        _run_one(config, store, args)
    return 0


def _build_analysis(args, allow_empty: bool = False):
    extra_pairs = []
    for pair in args.compare or []:
        if ":" not in pair:
            raise ConfigError(f"--compare expects SETTING_A:SETTING_B, got {pair!r}")
        extra_pairs.append(tuple(pair.split(":", 1)))
    if args.fixture:
        return build_analysis_from_reference(load_reference_results(), baseline=args.baseline)
    if not args.store:
        raise ConfigError("provide --store PATH or --fixture")
    records = ResultsStore(args.store).load_records()
    return build_analysis_from_records(records, baseline=args.baseline,
                                       extra_pairs=extra_pairs, allow_empty=allow_empty)


def cmd_analyze(args) -> int:
    analysis = _build_analysis(args)
    text = render_analysis_text(analysis)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "analysis.txt").write_text(text)
    print(text, end="")
    return 0


def cmd_report(args) -> int:
    analysis = _build_analysis(args, allow_empty=True)
    written = render_report(analysis, args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segbench",
        description="Fine-tuning benchmark for ViT segmentation encoders",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train and evaluate one configuration")
    _add_run_flags(run)
    run.add_argument("--store", default="runs.jsonl", help="results store (JSON lines)")
    run.add_argument("--data-root", default=None)
    run.add_argument("--weights-root", default=None)
    run.add_argument("--force", action="store_true", help="re-run recorded cells")
    run.add_argument("--verbose", action="store_true")
    run.add_argument("--save-model", action="store_true",
                     help="write the final model weights next to the store")
    run.add_argument("--audit-confusion", default=None, metavar="PATH",
                     help="dump per-image confusion counts to a TSV file")
    run.set_defaults(func=cmd_run)

    matrix = sub.add_parser("matrix", help="run every incomplete cell of a matrix file")
    matrix.add_argument("--file", type=Path, required=True)
    matrix.add_argument("--store", default="runs.jsonl")
    matrix.add_argument("--data-root", default=None)
    matrix.add_argument("--weights-root", default=None)
    matrix.add_argument("--force", action="store_true")
    matrix.add_argument("--verbose", action="store_true")
    matrix.add_argument("--save-model", action="store_true",
                        help="write final model weights next to the store")
    matrix.set_defaults(func=cmd_matrix)

    analyze = sub.add_parser("analyze", help="ranking-stability and efficiency comparison")
    analyze.add_argument("--store", default=None)
    analyze.add_argument("--fixture", action="store_true",
                         help="analyze the bundled published reference results")
    analyze.add_argument("--baseline", default="default")
    analyze.add_argument("--compare", action="append",
                         help="extra comparison pair SETTING_A:SETTING_B (repeatable)")
    analyze.add_argument("--out", default=None)
    analyze.set_defaults(func=cmd_analyze)

    report = sub.add_parser("report", help="emit a static report with charts")
    report.add_argument("--store", default=None)
    report.add_argument("--fixture", action="store_true")
    report.add_argument("--baseline", default="default")
    report.add_argument("--compare", action="append")
    report.add_argument("--out", required=True)
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    torch.set_num_threads(max(1, torch.get_num_threads()))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KeyError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
