"""Per-token linear classification head with bilinear upsampling."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F


@dataclass(frozen=True)
class LinearDecoderConfig:
    num_classes: int
    width: int

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("need at least two classes")


class LinearDecoder(nn.Module):
    def __init__(self, config: LinearDecoderConfig):
        super().__init__()
        self.config = config
        self.proj = nn.Linear(config.width, config.num_classes)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        """[B, g, g, width] tokens -> [B, K, g, g] per-token class scores."""
        return self.proj(tokens).permute(0, 3, 1, 2)

    def pixel_logits(self, tokens: torch.Tensor, out_hw: tuple[int, int]) -> torch.Tensor:
        """[B, g, g, width] -> [B, K, out_h, out_w] bilinearly upsampled logits."""
        logits = self.forward(tokens)
        if logits.shape[-2:] != tuple(out_hw):
            logits = F.interpolate(logits, size=tuple(out_hw), mode="bilinear", align_corners=False)
        return logits


def linear_decode(decoder: LinearDecoder, tokens: torch.Tensor, crop: int) -> torch.Tensor:
    """Single token grid [g, g, width] -> [crop, crop, K] upsampled logits."""
    if not torch.isfinite(tokens).all():
        raise ValueError("token grid contains non-finite entries")
    logits = decoder.pixel_logits(tokens.unsqueeze(0), (crop, crop))
    return logits.squeeze(0).permute(1, 2, 0)
