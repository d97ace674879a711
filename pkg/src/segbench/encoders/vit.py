"""Plain ViT encoder producing a dense patch-token grid.

One token per non-overlapping patch; the class token (when present)
participates in attention but is excluded from the returned grid.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from segbench.encoders.resize import interpolate_grid


class Attention(nn.Module):
    def __init__(self, dim: int, num_heads: int):
        super().__init__()
        if dim % num_heads != 0:
            raise ValueError(f"dim {dim} not divisible by num_heads {num_heads}")
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.qkv = nn.Linear(dim, dim * 3)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, n, c = x.shape
        qkv = self.qkv(x).reshape(b, n, 3, self.num_heads, self.head_dim)
        q, k, v = qkv.permute(2, 0, 3, 1, 4).unbind(0)
        out = nn.functional.scaled_dot_product_attention(q, k, v)
        out = out.transpose(1, 2).reshape(b, n, c)
        return self.proj(out)


class Mlp(nn.Module):
    def __init__(self, dim: int, hidden: int):
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(hidden, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc2(self.act(self.fc1(x)))


class Block(nn.Module):
    """Pre-norm transformer block."""

    def __init__(self, dim: int, num_heads: int, mlp_ratio: float = 4.0):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = Attention(dim, num_heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = Mlp(dim, int(dim * mlp_ratio))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.norm1(x))
        x = x + self.mlp(self.norm2(x))
        return x


class VisionTransformer(nn.Module):
    """ViT encoder configured for a target (patch size, grid size) geometry.

    Positional embeddings are stored as a [grid, grid, width] parameter; when
    an input's token grid differs they are bicubic-resized on the fly.
    """

    def __init__(
        self,
        depth: int,
        width: int,
        heads: int,
        patch_size: int,
        grid_size: int,
        has_class_token: bool = True,
        mlp_ratio: float = 4.0,
        in_channels: int = 3,
    ):
        super().__init__()
        self.depth = depth
        self.width = width
        self.heads = heads
        self.patch_size = patch_size
        self.grid_size = grid_size
        self.has_class_token = has_class_token

        self.patch_embed = nn.Conv2d(in_channels, width, kernel_size=patch_size, stride=patch_size)
        self.pos_embed = nn.Parameter(torch.zeros(grid_size, grid_size, width))
        if has_class_token:
            self.cls_token = nn.Parameter(torch.zeros(width))
            self.cls_pos_embed = nn.Parameter(torch.zeros(width))
        else:
            self.cls_token = None
            self.cls_pos_embed = None
        self.blocks = nn.ModuleList(Block(width, heads, mlp_ratio) for _ in range(depth))
        self.norm = nn.LayerNorm(width)
        self._init_weights()

    def _init_weights(self):
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        if self.cls_token is not None:
            nn.init.trunc_normal_(self.cls_token, std=0.02)
            nn.init.trunc_normal_(self.cls_pos_embed, std=0.02)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """[B, 3, H, W] -> patch tokens [B, H/p, W/p, width]."""
        b, _, h, w = x.shape
        p = self.patch_size
        if h % p != 0 or w % p != 0:
            raise ValueError(f"image dims {h}x{w} not divisible by patch size {p}")
        gh, gw = h // p, w // p

        t = self.patch_embed(x)                      # [B, width, gh, gw]
        t = t.flatten(2).transpose(1, 2)             # [B, gh*gw, width]
        pos = interpolate_grid(self.pos_embed, gh, gw).reshape(1, gh * gw, self.width)
        t = t + pos
        if self.cls_token is not None:
            cls = (self.cls_token + self.cls_pos_embed).reshape(1, 1, self.width)
            t = torch.cat([cls.expand(b, -1, -1), t], dim=1)
        for block in self.blocks:
            t = block(t)
        t = self.norm(t)
        if self.cls_token is not None:
            t = t[:, 1:]
        return t.reshape(b, gh, gw, self.width)


def encode(encoder: VisionTransformer, image: torch.Tensor) -> torch.Tensor:
    """Encode a single [3, H, W] image into a [H/p, W/p, width] token grid."""
    if image.ndim != 3:
        raise ValueError(f"expected [3, H, W] image, got shape {tuple(image.shape)}")
    return encoder(image.unsqueeze(0)).squeeze(0)


def set_trainable(encoder: nn.Module, freeze: bool) -> None:
    """freeze=True turns the encoder into a fixed feature extractor."""
    for p in encoder.parameters():
        p.requires_grad = not freeze
