"""Dataset loaders for the four benchmark datasets plus a synthetic toy set.

Loaders resolve the datasets' standard on-disk layouts into deterministic,
index-stable sample sequences with labels remapped to train ids
(ignore = 255). The toy dataset is generated on demand from a seed and
needs no files.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

from segbench.data import label_tables
from segbench.data.types import DatasetSpec, SegmentationSample

DATA_ROOT_ENV_VAR = "SEGBENCH_DATA_ROOT"

_SPECS = {
    "ade20k": DatasetSpec(
        name="ade20k", num_classes=150, crop=512,
        splits=("training", "validation"),
        class_names=label_tables.ADE20K_CLASS_NAMES,
    ),
    "pascal_voc": DatasetSpec(
        name="pascal_voc", num_classes=21, crop=512,
        splits=("train", "val"),
        class_names=label_tables.VOC_CLASS_NAMES,
    ),
    "cityscapes": DatasetSpec(
        name="cityscapes", num_classes=19, crop=1024,
        splits=("train", "val"),
        class_names=label_tables.CITYSCAPES_CLASS_NAMES,
    ),
    "gta5": DatasetSpec(
        name="gta5", num_classes=19, crop=1024,
        splits=("train",),
        class_names=label_tables.CITYSCAPES_CLASS_NAMES,
    ),
    "toy-shapes": DatasetSpec(
        name="toy-shapes", num_classes=4, crop=64,
        splits=("train", "val"),
        class_names=label_tables.TOY_CLASS_NAMES,
    ),
}


def registered_datasets() -> list[str]:
    return sorted(_SPECS)


def dataset_spec(name: str) -> DatasetSpec:
    if name not in _SPECS:
        raise KeyError(f"unknown dataset {name!r}; registered: {', '.join(sorted(_SPECS))}")
    return _SPECS[name]


def resolve_root(name: str, root: str | Path | None = None) -> Path:
    if root is not None:
        return Path(root)
    per_dataset = os.environ.get(f"SEGBENCH_{name.replace('-', '_').upper()}_ROOT")
    if per_dataset:
        return Path(per_dataset)
    base = os.environ.get(DATA_ROOT_ENV_VAR, ".")
    return Path(base) / name


def _read_image(path: Path) -> np.ndarray:
    if not path.exists():
        raise FileNotFoundError(f"missing dataset file: {path}")
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return arr.transpose(2, 0, 1)


def _read_label(path: Path) -> np.ndarray:
    if not path.exists():
        raise FileNotFoundError(f"missing dataset file: {path}")
    with Image.open(path) as img:
        return np.asarray(img, dtype=np.uint8)


class FileDataset:
    """Lazy, index-stable sequence of samples backed by (image, label) paths."""

    def __init__(self, spec: DatasetSpec, pairs: list[tuple[Path, Path]], remap=None):
        self.spec = spec
        self.pairs = pairs
        self.remap = remap

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, index: int) -> SegmentationSample:
        image_path, label_path = self.pairs[index]
        label = _read_label(label_path)
        if self.remap is not None:
            label = self.remap(label)
        return SegmentationSample(
            image=_read_image(image_path), label=label, id=image_path.stem
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def _check_split(spec: DatasetSpec, split: str) -> None:
    if split not in spec.splits:
        raise ValueError(f"dataset {spec.name!r} has splits {spec.splits}, not {split!r}")


def _ade20k_pairs(root: Path, split: str) -> list[tuple[Path, Path]]:
    image_dir = root / "images" / split
    if not image_dir.is_dir():
        raise FileNotFoundError(f"missing dataset file: {image_dir}")
    pairs = []
    for image_path in sorted(image_dir.glob("*.jpg")):
        pairs.append((image_path, root / "annotations" / split / f"{image_path.stem}.png"))
    return pairs


def _voc_pairs(root: Path, split: str) -> list[tuple[Path, Path]]:
    listing = root / "ImageSets" / "Segmentation" / f"{split}.txt"
    if not listing.exists():
        raise FileNotFoundError(f"missing dataset file: {listing}")
    ids = [line.strip() for line in listing.read_text().splitlines() if line.strip()]
    return [
        (root / "JPEGImages" / f"{i}.jpg", root / "SegmentationClass" / f"{i}.png")
        for i in sorted(ids)
    ]


def _cityscapes_pairs(root: Path, split: str) -> list[tuple[Path, Path]]:
    image_dir = root / "leftImg8bit" / split
    if not image_dir.is_dir():
        raise FileNotFoundError(f"missing dataset file: {image_dir}")
    pairs = []
    for image_path in sorted(image_dir.glob("*/*_leftImg8bit.png")):
        base = image_path.name.replace("_leftImg8bit.png", "")
        label_path = root / "gtFine" / split / image_path.parent.name / f"{base}_gtFine_labelIds.png"
        pairs.append((image_path, label_path))
    return pairs


def _gta5_pairs(root: Path, split: str) -> list[tuple[Path, Path]]:
    image_dir = root / "images"
    if not image_dir.is_dir():
        raise FileNotFoundError(f"missing dataset file: {image_dir}")
    return [
        (image_path, root / "labels" / image_path.name)
        for image_path in sorted(image_dir.glob("*.png"))
    ]


class ToyShapesDataset:
    """Random colored rectangles, ellipses and bars on a noise background.

    Every sample is a pure function of (split, index, base seed), so the
    dataset is identical across runs and worker processes.
    """

    SIZES = (64, 96, 128)
    # per-class base color (background drawn as gray noise)
    COLORS = {1: (200, 60, 60), 2: (60, 180, 60), 3: (60, 80, 200)}

    def __init__(self, spec: DatasetSpec, split: str, length: int, base_seed: int = 7):
        self.spec = spec
        self.split = split
        self.length = length
        self.base_seed = base_seed

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, index: int) -> SegmentationSample:
        if not 0 <= index < self.length:
            raise IndexError(index)
        split_code = {"train": 0, "val": 1}[self.split]
        rng = np.random.default_rng(np.random.SeedSequence([self.base_seed, split_code, index]))
        size = int(rng.choice(self.SIZES))
        image = rng.integers(90, 150, size=(3, size, size), dtype=np.uint8) \
            .astype(np.int16)
        label = np.zeros((size, size), dtype=np.uint8)
        yy, xx = np.mgrid[0:size, 0:size]
        for cls in rng.permutation([1, 2, 3])[: rng.integers(2, 4)]:
            cy, cx = rng.integers(12, size - 12, size=2)
            hh, ww = rng.integers(size // 5, size // 3 + 1, size=2)
            if cls == 1:
                mask = (np.abs(yy - cy) <= hh) & (np.abs(xx - cx) <= ww)
            elif cls == 2:
                mask = ((yy - cy) / hh) ** 2 + ((xx - cx) / ww) ** 2 <= 1.0
            else:
                mask = np.abs(yy - cy) <= max(6, hh // 2)
            color = np.array(self.COLORS[int(cls)], dtype=np.int16)
            jitter = rng.integers(-45, 46, size=3).astype(np.int16)
            image[:, mask] = (color + jitter)[:, None]
            label[mask] = cls
        noise = rng.integers(-8, 9, size=image.shape, dtype=np.int16)
        image = np.clip(image + noise, 0, 255).astype(np.uint8)
        return SegmentationSample(image=image, label=label, id=f"{self.split}-{index:04d}")

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def load_dataset(name: str, split: str, root: str | Path | None = None):
    """Ordered sample sequence for one dataset split (deterministic order)."""
    spec = dataset_spec(name)
    _check_split(spec, split)
    if name == "toy-shapes":
        return ToyShapesDataset(spec, split, length=16 if split == "train" else 8)
    resolved = resolve_root(name, root)
    if name == "ade20k":
        return FileDataset(spec, _ade20k_pairs(resolved, split), remap=label_tables.ade20k_remap)
    if name == "pascal_voc":
        return FileDataset(spec, _voc_pairs(resolved, split))
    if name == "cityscapes":
        return FileDataset(spec, _cityscapes_pairs(resolved, split), remap=label_tables.map_labels)
    if name == "gta5":
        return FileDataset(spec, _gta5_pairs(resolved, split), remap=label_tables.map_labels)
    raise KeyError(name)
