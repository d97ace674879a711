"""Single-scale mask-classification transformer decoder.

Pixel features are a plain linear projection of the final-layer patch
tokens; the learned queries run masked cross-attention against those same
single-scale features in every layer (no multi-scale features or level
embeddings). Mask logits are query/pixel-feature dot products at the token
grid resolution; class logits carry an extra no-object column.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F


@dataclass(frozen=True)
class MaskDecoderConfig:
    num_queries: int = 100
    num_layers: int = 9
    hidden_dim: int = 256
    num_heads: int = 8
    ffn_dim: int = 2048
    class_weight: float = 2.0
    mask_weight: float = 5.0
    dice_weight: float = 5.0
    no_object_weight: float = 0.1

    def __post_init__(self):
        if self.num_queries < 1:
            raise ValueError("need at least one query")
        if self.num_layers < 1:
            raise ValueError("need at least one decoder layer")
        for name in ("class_weight", "mask_weight", "dice_weight", "no_object_weight"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class _FFN(nn.Module):
    def __init__(self, dim: int, hidden: int):
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden)
        self.fc2 = nn.Linear(hidden, dim)

    def forward(self, x):
        return self.fc2(F.relu(self.fc1(x)))


class MaskDecoderLayer(nn.Module):
    """Masked cross-attention -> self-attention -> FFN, post-norm."""

    def __init__(self, dim: int, heads: int, ffn_dim: int):
        super().__init__()
        self.cross_attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm_cross = nn.LayerNorm(dim)
        self.self_attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm_self = nn.LayerNorm(dim)
        self.ffn = _FFN(dim, ffn_dim)
        self.norm_ffn = nn.LayerNorm(dim)

    def forward(self, queries, memory, query_pos, attn_mask):
        q = queries + query_pos
        attended, _ = self.cross_attn(q, memory, memory, attn_mask=attn_mask, need_weights=False)
        queries = self.norm_cross(queries + attended)
        q = queries + query_pos
        attended, _ = self.self_attn(q, q, queries, need_weights=False)
        queries = self.norm_self(queries + attended)
        queries = self.norm_ffn(queries + self.ffn(queries))
        return queries


class MaskDecoder(nn.Module):
    def __init__(self, width: int, num_classes: int, config: MaskDecoderConfig | None = None):
        super().__init__()
        self.config = config or MaskDecoderConfig()
        self.num_classes = num_classes
        cfg = self.config
        self.input_proj = nn.Linear(width, cfg.hidden_dim)
        self.query_feat = nn.Embedding(cfg.num_queries, cfg.hidden_dim)
        self.query_pos = nn.Embedding(cfg.num_queries, cfg.hidden_dim)
        self.layers = nn.ModuleList(
            MaskDecoderLayer(cfg.hidden_dim, cfg.num_heads, cfg.ffn_dim)
            for _ in range(cfg.num_layers)
        )
        self.decoder_norm = nn.LayerNorm(cfg.hidden_dim)
        self.class_head = nn.Linear(cfg.hidden_dim, num_classes + 1)
        self.mask_mlp = nn.Sequential(
            nn.Linear(cfg.hidden_dim, cfg.hidden_dim), nn.ReLU(),
            nn.Linear(cfg.hidden_dim, cfg.hidden_dim), nn.ReLU(),
            nn.Linear(cfg.hidden_dim, cfg.hidden_dim),
        )

    def _predict(self, queries: torch.Tensor, pixel_features: torch.Tensor):
        """Class and mask logits from the current query states."""
        normed = self.decoder_norm(queries)
        class_logits = self.class_head(normed)
        mask_embed = self.mask_mlp(normed)
        mask_logits = torch.einsum("bqc,bhwc->bqhw", mask_embed, pixel_features)
        return class_logits, mask_logits

    def _attention_mask(self, mask_logits: torch.Tensor) -> torch.Tensor:
        """[B, Q, g, g] mask logits -> bool attention mask, True = blocked.

        A query whose predicted mask blocks every location falls back to
        unmasked attention.
        """
        b, q = mask_logits.shape[:2]
        blocked = (mask_logits.sigmoid() < 0.5).flatten(2)        # [B, Q, N]
        degenerate = blocked.all(dim=-1, keepdim=True)
        blocked = blocked & ~degenerate
        return blocked.detach().repeat_interleave(self.config.num_heads, dim=0)

    def forward(self, tokens: torch.Tensor):
        """[B, g, g, width] tokens -> ([B, Q, K+1], [B, Q, g, g])."""
        b, gh, gw, _ = tokens.shape
        pixel_features = self.input_proj(tokens)                  # [B, gh, gw, hidden]
        memory = pixel_features.reshape(b, gh * gw, -1)
        queries = self.query_feat.weight.unsqueeze(0).expand(b, -1, -1)
        query_pos = self.query_pos.weight.unsqueeze(0).expand(b, -1, -1)

        class_logits, mask_logits = self._predict(queries, pixel_features)
        for layer in self.layers:
            attn_mask = self._attention_mask(mask_logits)
            queries = layer(queries, memory, query_pos, attn_mask)
            class_logits, mask_logits = self._predict(queries, pixel_features)
        return class_logits, mask_logits


def mask_decode(decoder: MaskDecoder, tokens: torch.Tensor):
    """Single token grid [g, g, width] -> ([Q, K+1], [Q, g, g])."""
    if not torch.isfinite(tokens).all():
        raise ValueError("token grid contains non-finite entries")
    class_logits, mask_logits = decoder(tokens.unsqueeze(0))
    return class_logits.squeeze(0), mask_logits.squeeze(0)


def semantic_inference(class_logits: torch.Tensor, mask_logits: torch.Tensor, num_classes: int):
    """Marginalize (class, mask) pairs into per-pixel scores [g, g, K].

    scores(x, c) = sum_q softmax(class_logits_q)[c] * sigmoid(mask_logits_q(x));
    the no-object column is excluded.
    """
    probs = class_logits.softmax(dim=-1)[:, :num_classes]        # [Q, K]
    masks = mask_logits.sigmoid()                                # [Q, g, g]
    return torch.einsum("qk,qhw->hwk", probs, masks)
