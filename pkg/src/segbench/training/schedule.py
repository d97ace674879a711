"""Optimization schedule: decoupled weight decay, two learning rates, poly decay."""

from __future__ import annotations

from dataclasses import dataclass, field

DATASET_STEPS = {"ade20k": 40_000, "pascal_voc": 20_000, "cityscapes": 20_000, "gta5": 20_000}
TOY_STEPS = 500


def default_total_steps(train_dataset: str) -> int:
    return DATASET_STEPS.get(train_dataset, TOY_STEPS)


@dataclass(frozen=True)
class TrainSchedule:
    total_steps: int
    effective_batch: int = 16
    micro_batch: int = 1
    encoder_lr: float = 1e-5
    decoder_lr: float = 1e-4
    weight_decay: float = 0.05
    poly_power: float = 0.9
    seeds: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError("total_steps must be positive")
        if self.effective_batch % self.micro_batch != 0:
            raise ValueError(
                f"micro batch {self.micro_batch} must divide effective batch {self.effective_batch}"
            )
        if self.encoder_lr <= 0 or self.decoder_lr <= 0:
            raise ValueError("learning rates must be positive")

    @property
    def accumulation(self) -> int:
        return self.effective_batch // self.micro_batch


def poly_lr(step: int, total_steps: int, base_lr: float, power: float = 0.9) -> float:
    """base_lr * (1 - step/total_steps) ** power."""
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    return base_lr * (1.0 - step / total_steps) ** power
