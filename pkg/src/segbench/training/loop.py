"""One fine-tuning run: accumulation loop, end-of-run evaluation, result record.

AdamW with two parameter groups (encoder and decoder learning rates, shared
weight decay), micro-batches of one image with gradient accumulation up to
the effective batch, and per-step polynomial decay of both learning rates.
Evaluation happens once, at the end, with sliding-window inference.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
import torch

from segbench.data.datasets import dataset_spec, load_dataset
from segbench.data.transforms import augment_train, prepare_eval, resize_to_crop
from segbench.data.types import SegmentationSample
from segbench.encoders.checkpoint import load_checkpoint
from segbench.encoders.spec import get_encoder_spec
from segbench.encoders.vit import set_trainable
from segbench.metrics.confusion import ConfusionMatrix, accumulate_confusion, compute_miou
from segbench.metrics.sliding import sliding_window_logits
from segbench.training.model import SegmentationModel, build_model, image_to_tensor, label_to_tensor
from segbench.training.results import RunResult
from segbench.training.schedule import poly_lr

if TYPE_CHECKING:
    from segbench.runner.config import ExperimentConfig

LOSS_TRACE_EVERY = 50

_ORDER_STREAM = 101
_AUGMENT_STREAM = 202


class NonFiniteLossError(RuntimeError):
    pass


def count_trainable_params(module: torch.nn.Module) -> int:
    """Number of parameters that receive gradient updates."""
    return sum(p.numel() for p in module.parameters() if p.requires_grad)


def accumulate_step(
    model: SegmentationModel,
    optimizer: torch.optim.Optimizer,
    batch: Sequence[tuple[torch.Tensor, torch.Tensor]],
) -> float:
    """Accumulate per-sample gradients of the batch-mean loss, then update once."""
    optimizer.zero_grad(set_to_none=True)
    n = len(batch)
    total = 0.0
    for image, label in batch:
        loss = model.loss(image, label) / n
        if not torch.isfinite(loss):
            raise NonFiniteLossError(f"non-finite loss {float(loss.detach())}")
        loss.backward()
        total += float(loss.detach())
    optimizer.step()
    return total


def build_optimizer(model: SegmentationModel, config: ExperimentConfig) -> torch.optim.Optimizer:
    groups = []
    encoder_params = [p for p in model.encoder.parameters() if p.requires_grad]
    if encoder_params:
        groups.append({"params": encoder_params, "lr": config.encoder_lr,
                       "base_lr": config.encoder_lr})
    decoder_params = [p for p in model.decoder.parameters() if p.requires_grad]
    groups.append({"params": decoder_params, "lr": config.decoder_lr,
                   "base_lr": config.decoder_lr})
    return torch.optim.AdamW(groups, weight_decay=config.weight_decay)


def _subset_indices(length: int, subset: int | None) -> list[int]:
    return list(range(length if subset is None else min(subset, length)))


def _training_stream(dataset, indices: list[int], seed: int) -> Iterable[SegmentationSample]:
    epoch = 0
    while True:
        order = np.random.default_rng(
            np.random.SeedSequence([seed, _ORDER_STREAM, epoch])
        ).permutation(indices)
        for i in order:
            yield dataset[int(i)]
        epoch += 1


def _prepare_sample(sample, crop: int, seed: int, draw_index: int, augment: bool):
    if augment:
        rng = np.random.default_rng(np.random.SeedSequence([seed, _AUGMENT_STREAM, draw_index]))
        sample = augment_train(sample, crop, rng)
    else:
        sample = resize_to_crop(sample, crop)
    return image_to_tensor(sample.image), label_to_tensor(sample.label)


def evaluate_model(
    model: SegmentationModel,
    dataset,
    crop: int,
    subset: int | None = None,
    ignore_index: int = 255,
    audit_path=None,
) -> tuple[np.ndarray, float]:
    """Sliding-window evaluation of a dataset split: (per-class IoU, mIoU).

    With ``audit_path`` set, per-image confusion counts are dumped as TSV
    rows (image_id, gt_class, pred_class, count).
    """
    model.eval()
    cm = ConfusionMatrix(model.num_classes)
    audit = None
    if audit_path is not None:
        Path(audit_path).parent.mkdir(parents=True, exist_ok=True)
        audit = open(audit_path, "w")
        audit.write("image_id\tgt_class\tpred_class\tcount\n")
    try:
        with torch.no_grad():
            for i in _subset_indices(len(dataset), subset):
                sample = dataset[i]
                ev = prepare_eval(sample, crop)
                logits = sliding_window_logits(
                    model.window_fn, image_to_tensor(ev.image), crop, out_hw=ev.original_size
                )
                pred = logits.numpy().argmax(axis=0)
                image_cm = accumulate_confusion(
                    ConfusionMatrix(model.num_classes), pred, ev.label, ignore_index
                )
                if audit is not None:
                    for g, p in zip(*np.nonzero(image_cm.counts)):
                        audit.write(f"{ev.id}\t{g}\t{p}\t{image_cm.counts[g, p]}\n")
                cm = cm + image_cm
    finally:
        if audit is not None:
            audit.close()
    model.train()
    return compute_miou(cm)


def run_training(
    config: ExperimentConfig,
    data_root=None,
    weights_root=None,
    log=None,
    save_dir=None,
    audit_path=None,
) -> RunResult:
    """Execute one configuration to completion and return its result record."""
    torch.manual_seed(config.seed)

    train_spec = dataset_spec(config.train_dataset)
    crop = train_spec.crop
    if crop % config.patch_size != 0:
        raise ValueError(f"crop {crop} not divisible by patch size {config.patch_size}")

    encoder_spec = get_encoder_spec(config.model, config.variant)
    encoder = load_checkpoint(
        encoder_spec,
        target_patch=config.patch_size,
        target_grid=crop // config.patch_size,
        weights_root=weights_root,
    )
    model = build_model(encoder, config.decoder, train_spec.num_classes)
    set_trainable(encoder, config.freeze)
    optimizer = build_optimizer(model, config)
    trainable = count_trainable_params(model)

    train_ds = load_dataset(config.train_dataset, train_spec.splits[0], root=data_root)
    stream = _training_stream(train_ds, _subset_indices(len(train_ds), config.train_subset),
                              config.seed)
    schedule = config.schedule()
    total_steps = schedule.total_steps

    run_id = f"{config.fingerprint()}-s{config.seed}"
    trace: list[list[float]] = []
    draw_index = 0
    failed = None

    start = time.perf_counter()
    for step in range(total_steps):
        for group in optimizer.param_groups:
            group["lr"] = poly_lr(step, total_steps, group["base_lr"], schedule.poly_power)
        # one update sees the full effective batch; gradients accumulate
        # sample by sample regardless of the micro-batch setting
        batch = []
        for _ in range(schedule.effective_batch):
            batch.append(_prepare_sample(next(stream), crop, config.seed, draw_index,
                                         config.augment))
            draw_index += 1
        try:
            mean_loss = accumulate_step(model, optimizer, batch)
        except NonFiniteLossError as err:
            failed = str(err)
            break
        if step % LOSS_TRACE_EVERY == 0 or step == total_steps - 1:
            trace.append([step, mean_loss])
            if log:
                log(f"step {step}/{total_steps} loss {mean_loss:.4f}")
    train_time = time.perf_counter() - start

    if failed is not None:
        return RunResult(
            run_id=run_id, fingerprint=config.fingerprint(), seed=config.seed,
            model=config.model, setting=config.setting(), setting_name=config.setting_name,
            miou=float("nan"), per_class_iou=[], train_time_s=max(train_time, 1e-9),
            trainable_params=trainable, steps=total_steps, loss_trace=trace,
            status=f"failed: {failed}", config=config.to_dict(),
        )

    if save_dir is not None:
        save_dir = Path(save_dir)
        save_dir.mkdir(parents=True, exist_ok=True)
        torch.save(model.state_dict(), save_dir / f"{run_id}.pt")

    eval_name = config.resolved_eval_dataset
    eval_spec = dataset_spec(eval_name)
    eval_split = config.eval_split or eval_spec.splits[-1]
    eval_ds = load_dataset(eval_name, eval_split, root=data_root)
    per_class, miou = evaluate_model(
        model, eval_ds, eval_spec.crop, config.eval_subset, audit_path=audit_path
    )

    return RunResult(
        run_id=run_id, fingerprint=config.fingerprint(), seed=config.seed,
        model=config.model, setting=config.setting(), setting_name=config.setting_name,
        miou=miou, per_class_iou=[float(v) for v in per_class],
        train_time_s=train_time, trainable_params=trainable, steps=total_steps,
        loss_trace=trace, status="ok", config=config.to_dict(),
    )
