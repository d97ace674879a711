"""Class-name lists and raw-id -> train-id tables.

Cityscapes and GTA V share one raw-id taxonomy; both are remapped to the 19
train classes with the same lookup table. ADE20K annotations store class 0
as unlabeled and classes 1..150 as semantic ids, shifted down by one here.
"""

from __future__ import annotations

import numpy as np

IGNORE = 255

CITYSCAPES_CLASS_NAMES = (
    "road", "sidewalk", "building", "wall", "fence", "pole", "traffic light",
    "traffic sign", "vegetation", "terrain", "sky", "person", "rider", "car",
    "truck", "bus", "train", "motorcycle", "bicycle",
)

# raw labelId -> train id for the 19 evaluated classes; everything else is ignore
CITYSCAPES_ID_TO_TRAIN_ID = {
    7: 0, 8: 1, 11: 2, 12: 3, 13: 4, 17: 5, 19: 6, 20: 7, 21: 8, 22: 9,
    23: 10, 24: 11, 25: 12, 26: 13, 27: 14, 28: 15, 31: 16, 32: 17, 33: 18,
}

VOC_CLASS_NAMES = (
    "background", "aeroplane", "bicycle", "bird", "boat", "bottle", "bus",
    "car", "cat", "chair", "cow", "diningtable", "dog", "horse", "motorbike",
    "person", "pottedplant", "sheep", "sofa", "train", "tvmonitor",
)

ADE20K_CLASS_NAMES = (
    "wall", "building", "sky", "floor", "tree", "ceiling", "road", "bed",
    "windowpane", "grass", "cabinet", "sidewalk", "person", "earth", "door",
    "table", "mountain", "plant", "curtain", "chair", "car", "water",
    "painting", "sofa", "shelf", "house", "sea", "mirror", "rug", "field",
    "armchair", "seat", "fence", "desk", "rock", "wardrobe", "lamp",
    "bathtub", "railing", "cushion", "base", "box", "column", "signboard",
    "chest of drawers", "counter", "sand", "sink", "skyscraper", "fireplace",
    "refrigerator", "grandstand", "path", "stairs", "runway", "case",
    "pool table", "pillow", "screen door", "stairway", "river", "bridge",
    "bookcase", "blind", "coffee table", "toilet", "flower", "book", "hill",
    "bench", "countertop", "stove", "palm", "kitchen island", "computer",
    "swivel chair", "boat", "bar", "arcade machine", "hovel", "bus", "towel",
    "light", "truck", "tower", "chandelier", "awning", "streetlight",
    "booth", "television", "airplane", "dirt track", "apparel", "pole",
    "land", "bannister", "escalator", "ottoman", "bottle", "buffet",
    "poster", "stage", "van", "ship", "fountain", "conveyer belt", "canopy",
    "washer", "plaything", "swimming pool", "stool", "barrel", "basket",
    "waterfall", "tent", "bag", "minibike", "cradle", "oven", "ball",
    "food", "step", "tank", "trade name", "microwave", "pot", "animal",
    "bicycle", "lake", "dishwasher", "screen", "blanket", "sculpture",
    "hood", "sconce", "vase", "traffic light", "tray", "ashcan", "fan",
    "pier", "crt screen", "plate", "monitor", "bulletin board", "shower",
    "radiator", "glass", "clock", "flag",
)

TOY_CLASS_NAMES = ("background", "rectangle", "ellipse", "bar")


def cityscapes_train_id_lut() -> np.ndarray:
    """256-entry lookup table: raw labelId -> train id (ignore elsewhere)."""
    lut = np.full(256, IGNORE, dtype=np.uint8)
    for raw, train in CITYSCAPES_ID_TO_TRAIN_ID.items():
        lut[raw] = train
    return lut


def map_labels(raw_label: np.ndarray) -> np.ndarray:
    """Remap a raw-id label map (GTA V / Cityscapes taxonomy) to train ids."""
    raw_label = np.asarray(raw_label)
    if raw_label.dtype != np.uint8:
        if raw_label.min() < 0 or raw_label.max() > 255:
            raise ValueError("raw label ids outside uint8 range")
        raw_label = raw_label.astype(np.uint8)
    return cityscapes_train_id_lut()[raw_label]


def ade20k_remap(raw_label: np.ndarray) -> np.ndarray:
    """ADE20K annotation ids: 0 (unlabeled) -> ignore, 1..150 -> 0..149."""
    raw_label = np.asarray(raw_label)
    out = np.where(raw_label == 0, np.uint8(IGNORE), raw_label - 1).astype(np.uint8)
    return out
