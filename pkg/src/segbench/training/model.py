"""Encoder + decoder composition used by training and inference."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from segbench.decoders.linear import LinearDecoder, LinearDecoderConfig
from segbench.decoders.losses import mask_loss
from segbench.decoders.mask import MaskDecoder, MaskDecoderConfig, semantic_inference
from segbench.encoders.vit import VisionTransformer


class SegmentationModel(nn.Module):
    """Maps uint8 images to per-pixel class scores and computes training losses."""

    def __init__(self, encoder: VisionTransformer, decoder: nn.Module, num_classes: int,
                 ignore_index: int = 255):
        super().__init__()
        self.encoder = encoder
        self.decoder = decoder
        self.num_classes = num_classes
        self.ignore_index = ignore_index

    def normalize(self, image: torch.Tensor) -> torch.Tensor:
        """uint8 [.., 3, H, W] -> float in [-1, 1], at the model's dtype."""
        dtype = next(self.encoder.parameters()).dtype
        return image.to(dtype) / 127.5 - 1.0

    def pixel_scores(self, images: torch.Tensor) -> torch.Tensor:
        """uint8 [B, 3, H, W] -> [B, K, H, W] class scores at input resolution."""
        tokens = self.encoder(self.normalize(images))
        out_hw = images.shape[-2:]
        if isinstance(self.decoder, LinearDecoder):
            return self.decoder.pixel_logits(tokens, out_hw)
        class_logits, mask_logits = self.decoder(tokens)
        scores = torch.stack(
            [
                semantic_inference(class_logits[i], mask_logits[i], self.num_classes)
                for i in range(tokens.shape[0])
            ]
        ).permute(0, 3, 1, 2)
        if scores.shape[-2:] != out_hw:
            scores = F.interpolate(scores, size=out_hw, mode="bilinear", align_corners=False)
        return scores

    def window_fn(self, window: torch.Tensor) -> torch.Tensor:
        """Single [3, c, c] window -> [K, c, c] scores (sliding-window callback)."""
        return self.pixel_scores(window.unsqueeze(0)).squeeze(0)

    def loss(self, image: torch.Tensor, label: torch.Tensor) -> torch.Tensor:
        """Per-sample training loss for a [3, H, W] image and [H, W] label map."""
        tokens = self.encoder(self.normalize(image.unsqueeze(0)))
        out_hw = image.shape[-2:]
        if isinstance(self.decoder, LinearDecoder):
            logits = self.decoder.pixel_logits(tokens, out_hw)
            return F.cross_entropy(logits, label.long().unsqueeze(0),
                                   ignore_index=self.ignore_index)
        class_logits, mask_logits = self.decoder(tokens)
        upsampled = F.interpolate(mask_logits, size=out_hw, mode="bilinear",
                                  align_corners=False)
        return mask_loss(class_logits[0], upsampled[0], label, self.decoder.config,
                         self.num_classes, self.ignore_index)


def build_model(
    encoder: VisionTransformer,
    decoder_kind: str,
    num_classes: int,
    mask_config: MaskDecoderConfig | None = None,
) -> SegmentationModel:
    if decoder_kind == "linear":
        decoder = LinearDecoder(LinearDecoderConfig(num_classes=num_classes, width=encoder.width))
    elif decoder_kind == "mask":
        decoder = MaskDecoder(encoder.width, num_classes, mask_config)
    else:
        raise ValueError(f"unknown decoder {decoder_kind!r}; expected 'linear' or 'mask'")
    return SegmentationModel(encoder, decoder, num_classes)


def image_to_tensor(image: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(image))


def label_to_tensor(label: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(label.astype(np.int64)))
