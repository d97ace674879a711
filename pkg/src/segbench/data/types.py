from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

IGNORE_INDEX = 255


@dataclass
class SegmentationSample:
    """One image/label pair: uint8 [3, H, W] image, [H, W] train-id label map."""

    image: np.ndarray
    label: np.ndarray
    id: str

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[0] != 3:
            raise ValueError(f"expected [3, H, W] image, got {self.image.shape}")
        if self.label.shape != self.image.shape[1:]:
            raise ValueError(
                f"label dims {self.label.shape} != image dims {self.image.shape[1:]}"
            )

    def validate_labels(self, num_classes: int, ignore_index: int = IGNORE_INDEX) -> None:
        values = np.unique(self.label)
        bad = values[(values != ignore_index) & (values >= num_classes)]
        if bad.size:
            raise ValueError(f"label values {bad.tolist()} outside [0, {num_classes}) + ignore")


@dataclass
class EvalSample:
    """Inference-ready pair: image resized so its shortest side equals the crop,
    label kept at the original size for metric computation."""

    image: np.ndarray
    label: np.ndarray
    id: str
    original_size: tuple[int, int]


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    num_classes: int
    crop: int
    splits: tuple[str, ...]
    class_names: tuple[str, ...] = field(default=())
    ignore_index: int = IGNORE_INDEX
    root: str | None = None
