"""Resizing of patch-embedding kernels and positional-embedding grids.

Patch-embedding kernels are resized with a pseudo-inverse construction:
for the bilinear operator B that resizes a p x p patch to q x q, the new
kernel w_hat = pinv(B^T) @ w satisfies <w_hat, B x> = <w, x> for every
patch x when q >= p, and is the least-squares solution when q < p.

Positional grids are resized with corner-aligned bicubic interpolation;
the class-token embedding is never spatially resized.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import torch
import torch.nn.functional as F


@dataclass
class PatchEmbedKernel:
    """Patch-embedding weights [width, channels, p, p] at patch size p."""

    weights: torch.Tensor
    p: int

    def __post_init__(self):
        if self.weights.ndim != 4:
            raise ValueError(f"expected 4-d kernel, got shape {tuple(self.weights.shape)}")
        if self.weights.shape[-1] != self.p or self.weights.shape[-2] != self.p:
            raise ValueError(
                f"kernel spatial dims {tuple(self.weights.shape[-2:])} do not match p={self.p}"
            )
        if self.p < 1:
            raise ValueError("patch size must be >= 1")
        if not torch.isfinite(self.weights).all():
            raise ValueError("patch-embedding kernel contains non-finite entries")


@dataclass
class PositionalGrid:
    """Positional embeddings [g, g, width] plus optional class-token vector."""

    grid: torch.Tensor
    class_token_embedding: torch.Tensor | None = None

    def __post_init__(self):
        if self.grid.ndim != 3 or self.grid.shape[0] != self.grid.shape[1]:
            raise ValueError(f"expected square [g, g, width] grid, got {tuple(self.grid.shape)}")
        if self.grid.shape[0] < 2:
            raise ValueError("positional grid must have g >= 2")

    @property
    def g(self) -> int:
        return int(self.grid.shape[0])

    @property
    def width(self) -> int:
        return int(self.grid.shape[2])


def bilinear_resize_matrix_1d(p: int, q: int) -> np.ndarray:
    """[q, p] matrix resizing a length-p signal to length q.

    Half-pixel sample centers, border clamped, no antialiasing.
    """
    m = np.zeros((q, p))
    for i in range(q):
        src = (i + 0.5) * p / q - 0.5
        src = min(max(src, 0.0), p - 1.0)
        lo = int(np.floor(src))
        hi = min(lo + 1, p - 1)
        w = src - lo
        m[i, lo] += 1.0 - w
        m[i, hi] += w
    return m


def bilinear_resize_matrix(p: int, q: int) -> np.ndarray:
    """[q*q, p*p] operator resizing row-major flattened p x p patches to q x q."""
    m = bilinear_resize_matrix_1d(p, q)
    return np.kron(m, m)


@lru_cache(maxsize=64)
def _pseudo_inverse_projection(p: int, q: int) -> np.ndarray:
    """[q*q, p*p] map taking a flattened p x p kernel to its q x q replacement."""
    b = bilinear_resize_matrix(p, q)
    return np.linalg.pinv(b.T)


def resize_patch_embedding(kernel: PatchEmbedKernel, target_p: int) -> PatchEmbedKernel:
    """Resize a patch-embedding kernel to ``target_p`` pixels.

    Identity (bitwise) when target_p == kernel.p. Otherwise applies the
    cached pseudo-inverse projection per output channel.
    """
    if target_p < 4:
        raise ValueError(f"target patch size {target_p} is degenerate; must be >= 4")
    if not torch.isfinite(kernel.weights).all():
        raise ValueError("patch-embedding kernel contains non-finite entries")
    if target_p == kernel.p:
        return PatchEmbedKernel(weights=kernel.weights, p=kernel.p)

    proj = _pseudo_inverse_projection(kernel.p, target_p)
    width, channels = kernel.weights.shape[:2]
    flat = kernel.weights.detach().cpu().double().numpy().reshape(width * channels, -1)
    resized = flat @ proj.T
    out = torch.from_numpy(resized.reshape(width, channels, target_p, target_p))
    return PatchEmbedKernel(weights=out.to(kernel.weights.dtype), p=target_p)


def resize_positional_embedding(grid: PositionalGrid, target_g: int) -> PositionalGrid:
    """Resize the spatial positional grid g -> target_g per channel.

    Corner-aligned 2-D bicubic interpolation; the class-token embedding is
    passed through unchanged. Identity when target_g == g.
    """
    if target_g < 2:
        raise ValueError(f"target grid size {target_g} must be >= 2")
    if target_g == grid.g:
        return PositionalGrid(grid=grid.grid, class_token_embedding=grid.class_token_embedding)
    resized = interpolate_grid(grid.grid, target_g, target_g)
    return PositionalGrid(grid=resized, class_token_embedding=grid.class_token_embedding)


def interpolate_grid(grid: torch.Tensor, target_h: int, target_w: int) -> torch.Tensor:
    """Bicubic corner-aligned resize of an [h, w, width] grid to [target_h, target_w, width]."""
    if grid.shape[0] == target_h and grid.shape[1] == target_w:
        return grid
    x = grid.permute(2, 0, 1).unsqueeze(0)
    y = F.interpolate(x, size=(target_h, target_w), mode="bicubic", align_corners=True)
    return y.squeeze(0).permute(1, 2, 0).to(grid.dtype)
