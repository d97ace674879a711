"""Persisted record of one training/evaluation run."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict


@dataclass
class RunResult:
    run_id: str
    fingerprint: str
    seed: int
    model: str
    setting: dict
    setting_name: str | None
    miou: float
    per_class_iou: list
    train_time_s: float
    trainable_params: int
    steps: int
    loss_trace: list = field(default_factory=list)
    status: str = "ok"
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status == "ok":
            if not 0.0 <= self.miou <= 1.0:
                raise ValueError(f"mIoU {self.miou} outside [0, 1]")
            if not self.train_time_s > 0:
                raise ValueError("train_time_s must be positive")

    def to_record(self) -> dict:
        record = asdict(self)
        record["per_class_iou"] = [
            None if isinstance(v, float) and math.isnan(v) else v for v in record["per_class_iou"]
        ]
        if isinstance(record["miou"], float) and math.isnan(record["miou"]):
            record["miou"] = None
        return record

    @classmethod
    def from_record(cls, record: dict) -> "RunResult":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in record.items() if k in known})
