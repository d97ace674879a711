"""Training augmentations and evaluation resizing.

Training: horizontal flip, color jitter (image only), uniform scaling in
[0.5, 2.0] (bilinear image / nearest label), padding up to the crop size
(image 0, label ignore) and a random crop. All randomness flows through the
passed generator, so identical (seed, index) pairs produce identical
outputs regardless of worker layout.

Evaluation: the image's shortest side is resized to the crop size with the
aspect ratio preserved; the label stays at the original size.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from segbench.data.types import IGNORE_INDEX, EvalSample, SegmentationSample

SCALE_RANGE = (0.5, 2.0)
BRIGHTNESS_DELTA = 32.0          # additive, on the 0..255 scale
CONTRAST_RANGE = (0.5, 1.5)
SATURATION_RANGE = (0.5, 1.5)
HUE_DELTA = 18.0 / 360.0
JITTER_PROB = 0.5
FLIP_PROB = 0.5


def _rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    r, g, b = rgb
    maxc = np.max(rgb, axis=0)
    minc = np.min(rgb, axis=0)
    v = maxc
    spread = maxc - minc
    s = np.where(maxc > 0, spread / np.maximum(maxc, 1e-12), 0.0)
    safe = np.maximum(spread, 1e-12)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.where(maxc == r, bc - gc, np.where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(spread == 0, 0.0, (h / 6.0) % 1.0)
    return np.stack([h, s, v])


def _hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(np.int64) % 6
    choices = [
        np.stack([v, t, p]), np.stack([q, v, p]), np.stack([p, v, t]),
        np.stack([p, q, v]), np.stack([t, p, v]), np.stack([v, p, q]),
    ]
    out = np.select([i == k for k in range(6)], [c for c in choices])
    return out


def color_jitter(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Brightness/contrast/saturation/hue jitter, each applied with prob 0.5."""
    img = image.astype(np.float64)
    if rng.random() < JITTER_PROB:
        img = img + rng.uniform(-BRIGHTNESS_DELTA, BRIGHTNESS_DELTA)
    if rng.random() < JITTER_PROB:
        factor = rng.uniform(*CONTRAST_RANGE)
        mean = img.mean(axis=0, keepdims=True).mean()
        img = (img - mean) * factor + mean
    if rng.random() < JITTER_PROB:
        factor = rng.uniform(*SATURATION_RANGE)
        gray = img.mean(axis=0, keepdims=True)
        img = (img - gray) * factor + gray
    if rng.random() < JITTER_PROB:
        delta = rng.uniform(-HUE_DELTA, HUE_DELTA)
        hsv = _rgb_to_hsv(np.clip(img, 0, 255) / 255.0)
        hsv[0] = (hsv[0] + delta) % 1.0
        img = _hsv_to_rgb(hsv) * 255.0
    return np.clip(img, 0.0, 255.0)


def _resize_image_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    t = torch.from_numpy(np.ascontiguousarray(image)).to(torch.float64).unsqueeze(0)
    resized = F.interpolate(t, size=(out_h, out_w), mode="bilinear", align_corners=False)
    return resized.squeeze(0).numpy()


def _resize_label_nearest(label: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = label.shape
    rows = np.clip(np.floor((np.arange(out_h) + 0.5) * h / out_h), 0, h - 1).astype(np.int64)
    cols = np.clip(np.floor((np.arange(out_w) + 0.5) * w / out_w), 0, w - 1).astype(np.int64)
    return label[rows[:, None], cols[None, :]]


def augment_train(sample: SegmentationSample, crop: int, rng: np.random.Generator) -> SegmentationSample:
    """Training transform chain; output is always crop x crop."""
    image = sample.image.astype(np.float64)
    label = sample.label

    if rng.random() < FLIP_PROB:
        image = image[:, :, ::-1]
        label = label[:, ::-1]

    image = color_jitter(image, rng)

    scale = rng.uniform(*SCALE_RANGE)
    h, w = label.shape
    out_h = max(1, int(round(h * scale)))
    out_w = max(1, int(round(w * scale)))
    image = _resize_image_bilinear(image, out_h, out_w)
    label = _resize_label_nearest(label, out_h, out_w)

    pad_h = max(0, crop - out_h)
    pad_w = max(0, crop - out_w)
    if pad_h or pad_w:
        image = np.pad(image, ((0, 0), (0, pad_h), (0, pad_w)), constant_values=0.0)
        label = np.pad(label, ((0, pad_h), (0, pad_w)), constant_values=IGNORE_INDEX)

    y = int(rng.integers(0, label.shape[0] - crop + 1))
    x = int(rng.integers(0, label.shape[1] - crop + 1))
    image = image[:, y : y + crop, x : x + crop]
    label = label[y : y + crop, x : x + crop]

    return SegmentationSample(
        image=np.clip(np.rint(image), 0, 255).astype(np.uint8),
        label=np.ascontiguousarray(label),
        id=sample.id,
    )


def resize_to_crop(sample: SegmentationSample, crop: int) -> SegmentationSample:
    """Deterministic crop-sized view: shortest side scaled to crop, center crop."""
    h, w = sample.label.shape
    scale = crop / min(h, w)
    out_h = max(crop, int(round(h * scale)))
    out_w = max(crop, int(round(w * scale)))
    image = sample.image
    label = sample.label
    if (out_h, out_w) != (h, w):
        image = np.clip(
            np.rint(_resize_image_bilinear(image.astype(np.float64), out_h, out_w)), 0, 255
        ).astype(np.uint8)
        label = _resize_label_nearest(label, out_h, out_w)
    y = (out_h - crop) // 2
    x = (out_w - crop) // 2
    return SegmentationSample(
        image=np.ascontiguousarray(image[:, y : y + crop, x : x + crop]),
        label=np.ascontiguousarray(label[y : y + crop, x : x + crop]),
        id=sample.id,
    )


def prepare_eval(sample: SegmentationSample, crop: int) -> EvalSample:
    """Resize the shortest image side to the crop size, keep the label as is."""
    h, w = sample.label.shape
    if min(h, w) == crop:
        image = sample.image
    else:
        scale = crop / min(h, w)
        if h <= w:
            out_h, out_w = crop, int(round(w * scale))
        else:
            out_h, out_w = int(round(h * scale)), crop
        resized = _resize_image_bilinear(sample.image.astype(np.float64), out_h, out_w)
        image = np.clip(np.rint(resized), 0, 255).astype(np.uint8)
    return EvalSample(image=image, label=sample.label, id=sample.id, original_size=(h, w))
