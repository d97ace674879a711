"""Weight-archive ingestion with per-family key mapping.

Archives are numpy ``.npz`` files or torch ``.pt``/``.pth`` state dicts.
Two key-map styles are shipped: ``native`` (this package's parameter names)
and ``timm`` (the common released-ViT convention: ``patch_embed.proj.*``,
fused ``pos_embed`` with a leading class-token row, ``cls_token`` of shape
[1, 1, width]). Unmapped extra tensors are ignored with a warning; missing
tensors and geometry mismatches are hard errors.
"""

from __future__ import annotations

import os
import warnings
from pathlib import Path

import numpy as np
import torch

from segbench.encoders.resize import (
    PatchEmbedKernel,
    PositionalGrid,
    resize_patch_embedding,
    resize_positional_embedding,
)
from segbench.encoders.spec import EncoderSpec
from segbench.encoders.vit import VisionTransformer

WEIGHTS_ROOT_ENV_VAR = "SEGBENCH_WEIGHTS_ROOT"


class CheckpointError(RuntimeError):
    pass


def canonical_keys(spec: EncoderSpec) -> list[str]:
    keys = ["patch_embed.weight", "patch_embed.bias", "pos_embed"]
    if spec.has_class_token:
        keys += ["cls_token", "cls_pos_embed"]
    for i in range(spec.depth):
        for part in (
            "norm1.weight", "norm1.bias",
            "attn.qkv.weight", "attn.qkv.bias",
            "attn.proj.weight", "attn.proj.bias",
            "norm2.weight", "norm2.bias",
            "mlp.fc1.weight", "mlp.fc1.bias",
            "mlp.fc2.weight", "mlp.fc2.bias",
        ):
            keys.append(f"blocks.{i}.{part}")
    keys += ["norm.weight", "norm.bias"]
    return keys


def read_archive(path: Path) -> dict[str, torch.Tensor]:
    if not path.exists():
        raise CheckpointError(f"weight archive not found: {path}")
    if path.suffix == ".npz":
        with np.load(path) as archive:
            return {k: torch.from_numpy(np.asarray(archive[k])) for k in archive.files}
    if path.suffix in (".pt", ".pth"):
        state = torch.load(path, map_location="cpu", weights_only=True)
        if not isinstance(state, dict):
            raise CheckpointError(f"archive {path} does not contain a tensor dict")
        return {k: torch.as_tensor(v) for k, v in state.items()}
    raise CheckpointError(f"unsupported archive format {path.suffix!r} (use .npz, .pt or .pth)")


def _map_native(raw: dict, spec: EncoderSpec):
    expected = canonical_keys(spec)
    mapped = {k: raw[k] for k in expected if k in raw}
    missing = [k for k in expected if k not in raw]
    extras = [k for k in raw if k not in expected]
    return mapped, missing, extras


def _map_timm(raw: dict, spec: EncoderSpec):
    mapped: dict[str, torch.Tensor] = {}
    missing: list[str] = []
    used = set()

    def take(archive_key, canonical_key):
        if archive_key in raw:
            mapped[canonical_key] = raw[archive_key]
            used.add(archive_key)
        else:
            missing.append(f"{canonical_key} (archive key {archive_key!r})")

    take("patch_embed.proj.weight", "patch_embed.weight")
    take("patch_embed.proj.bias", "patch_embed.bias")
    for key in canonical_keys(spec):
        if key.startswith(("blocks.", "norm.")):
            take(key, key)

    if "pos_embed" in raw:
        used.add("pos_embed")
        pos = raw["pos_embed"]
        g = spec.native_grid
        expected_tokens = g * g + (1 if spec.has_class_token else 0)
        if pos.ndim != 3 or pos.shape[0] != 1 or pos.shape[1] != expected_tokens:
            raise CheckpointError(
                f"pos_embed shape {tuple(pos.shape)} does not match native grid {g} "
                f"(expected [1, {expected_tokens}, width])"
            )
        if spec.has_class_token:
            mapped["cls_pos_embed"] = pos[0, 0]
            mapped["pos_embed"] = pos[0, 1:].reshape(g, g, -1)
        else:
            mapped["pos_embed"] = pos[0].reshape(g, g, -1)
    else:
        missing.append("pos_embed (archive key 'pos_embed')")

    if spec.has_class_token:
        if "cls_token" in raw:
            used.add("cls_token")
            mapped["cls_token"] = raw["cls_token"].reshape(-1)
        else:
            missing.append("cls_token (archive key 'cls_token')")

    extras = [k for k in raw if k not in used]
    return mapped, missing, extras


_NAME_MAPS = {"native": _map_native, "timm": _map_timm}


def _check_geometry(mapped: dict, spec: EncoderSpec) -> None:
    checks = {
        "patch_embed.weight": (spec.width, 3, spec.native_patch, spec.native_patch),
        "pos_embed": (spec.native_grid, spec.native_grid, spec.width),
        "blocks.0.attn.qkv.weight": (3 * spec.width, spec.width),
    }
    for key, want in checks.items():
        got = tuple(mapped[key].shape)
        if got != want:
            raise CheckpointError(
                f"geometry mismatch for {key}: archive has {got}, spec requires {want}"
            )


def resolve_archive_path(ref: str, weights_root: str | Path | None = None) -> Path:
    candidate = Path(ref)
    if candidate.is_absolute():
        return candidate
    root = weights_root or os.environ.get(WEIGHTS_ROOT_ENV_VAR, ".")
    return Path(root) / candidate


def load_checkpoint(
    spec: EncoderSpec,
    target_patch: int | None = None,
    target_grid: int | None = None,
    weights_root: str | Path | None = None,
) -> VisionTransformer:
    """Build an encoder at the target geometry, loading pretrained weights if any.

    Specs without a checkpoint reference (the toy encoders) come back
    randomly initialized. Patch and positional embeddings from an archive are
    adapted native -> target with the two resize operations.
    """
    target_patch = target_patch or spec.native_patch
    target_grid = target_grid or spec.native_grid
    model = VisionTransformer(
        depth=spec.depth,
        width=spec.width,
        heads=spec.heads,
        patch_size=target_patch,
        grid_size=target_grid,
        has_class_token=spec.has_class_token,
    )
    if spec.checkpoint_ref is None:
        return model

    raw = read_archive(resolve_archive_path(spec.checkpoint_ref, weights_root))
    try:
        map_fn = _NAME_MAPS[spec.name_map]
    except KeyError:
        raise CheckpointError(f"unknown name-map style {spec.name_map!r}") from None
    mapped, missing, extras = map_fn(raw, spec)
    if missing:
        raise CheckpointError(
            f"archive for {spec.name} ({spec.variant}) is missing tensors: " + ", ".join(missing)
        )
    if extras:
        warnings.warn(
            f"ignoring {len(extras)} unmapped tensors in archive for {spec.name}: "
            + ", ".join(sorted(extras)[:8])
            + ("..." if len(extras) > 8 else ""),
            stacklevel=2,
        )
    mapped = {k: torch.as_tensor(v, dtype=torch.float32) for k, v in mapped.items()}
    _check_geometry(mapped, spec)

    kernel = resize_patch_embedding(
        PatchEmbedKernel(weights=mapped["patch_embed.weight"], p=spec.native_patch),
        target_patch,
    )
    mapped["patch_embed.weight"] = kernel.weights
    grid = resize_positional_embedding(
        PositionalGrid(
            grid=mapped["pos_embed"],
            class_token_embedding=mapped.get("cls_pos_embed"),
        ),
        target_grid,
    )
    mapped["pos_embed"] = grid.grid
    if grid.class_token_embedding is not None:
        mapped["cls_pos_embed"] = grid.class_token_embedding

    model.load_state_dict(mapped, strict=True)
    return model
