from segbench.encoders.resize import (
    PatchEmbedKernel,
    PositionalGrid,
    resize_patch_embedding,
    resize_positional_embedding,
)
from segbench.encoders.spec import EncoderSpec, load_registry, registry_path
from segbench.encoders.vit import VisionTransformer, encode, set_trainable
from segbench.encoders.checkpoint import load_checkpoint, CheckpointError

__all__ = [
    "CheckpointError",
    "EncoderSpec",
    "PatchEmbedKernel",
    "PositionalGrid",
    "VisionTransformer",
    "encode",
    "load_checkpoint",
    "load_registry",
    "registry_path",
    "resize_patch_embedding",
    "resize_positional_embedding",
    "set_trainable",
]
