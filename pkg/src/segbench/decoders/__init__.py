from segbench.decoders.linear import LinearDecoder, LinearDecoderConfig, linear_decode
from segbench.decoders.matching import hungarian_match
from segbench.decoders.mask import MaskDecoder, MaskDecoderConfig, mask_decode, semantic_inference
from segbench.decoders.losses import dice_loss, mask_loss, build_mask_targets

__all__ = [
    "LinearDecoder",
    "LinearDecoderConfig",
    "MaskDecoder",
    "MaskDecoderConfig",
    "build_mask_targets",
    "dice_loss",
    "hungarian_match",
    "linear_decode",
    "mask_decode",
    "mask_loss",
    "semantic_inference",
]
