"""Sliding-window inference over images whose shortest side equals the crop.

Windows tile the longer side at stride = crop, with the final window
shifted to end exactly at the image edge; per-pixel logits are the
arithmetic mean over all covering windows, bilinearly resized back to the
original image size afterwards. A single covering window short-circuits to
one forward pass, bit-for-bit.
"""

from __future__ import annotations

from typing import Callable

import torch
import torch.nn.functional as F


def window_offsets(size: int, crop: int, stride: int | None = None) -> list[int]:
    """Window start offsets along one axis; last window is edge-aligned."""
    if size < crop:
        raise ValueError(f"axis size {size} smaller than crop {crop}")
    stride = stride or crop
    offsets = list(range(0, size - crop + 1, stride))
    if offsets[-1] + crop < size:
        offsets.append(size - crop)
    return offsets


def sliding_window_logits(
    model: Callable[[torch.Tensor], torch.Tensor],
    image: torch.Tensor,
    crop: int,
    out_hw: tuple[int, int] | None = None,
    stride: int | None = None,
) -> torch.Tensor:
    """Stitch per-window [K, crop, crop] logits into full-image logits.

    ``image`` is [3, H, W] with min(H, W) == crop (see prepare_eval);
    ``model`` maps a [3, crop, crop] window to [K, crop, crop] logits.
    Returns [K, out_h, out_w] where out_hw defaults to the input size.
    """
    _, h, w = image.shape
    if min(h, w) != crop:
        raise ValueError(f"expected shortest side == crop ({crop}), got {h}x{w}")
    ys = window_offsets(h, crop, stride)
    xs = window_offsets(w, crop, stride)

    if len(ys) == 1 and len(xs) == 1:
        logits = model(image)
    else:
        acc: torch.Tensor | None = None
        count = torch.zeros(1, h, w, dtype=torch.float64)
        for y in ys:
            for x in xs:
                win = model(image[:, y : y + crop, x : x + crop])
                if acc is None:
                    acc = torch.zeros(win.shape[0], h, w, dtype=torch.float64)
                acc[:, y : y + crop, x : x + crop] += win.double()
                count[:, y : y + crop, x : x + crop] += 1.0
        logits = (acc / count).to(win.dtype)

    if out_hw is not None and tuple(out_hw) != (h, w):
        logits = F.interpolate(
            logits.unsqueeze(0), size=tuple(out_hw), mode="bilinear", align_corners=False
        ).squeeze(0)
    return logits
