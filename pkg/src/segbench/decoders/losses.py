"""Set-prediction loss for the mask decoder.

Targets are the per-class binary masks of a label map (empty classes
dropped, ignore pixels excluded everywhere). Matched pairs contribute
weighted classification cross-entropy plus mask binary cross-entropy plus
dice; unmatched queries contribute no-object classification down-weighted
by the no-object weight. Mask terms use mean reduction over matched pairs.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from segbench.decoders.mask import MaskDecoderConfig
from segbench.decoders.matching import hungarian_match


def build_mask_targets(label: torch.Tensor, num_classes: int, ignore_index: int = 255):
    """Label map [H, W] -> (class ids [T], binary masks [T, H, W], valid [H, W])."""
    valid = label != ignore_index
    present = torch.unique(label[valid]) if valid.any() else label.new_empty(0, dtype=label.dtype)
    present = present[present < num_classes]
    masks = torch.stack([label == c for c in present]) if len(present) else \
        torch.zeros(0, *label.shape, dtype=torch.bool)
    return present.long(), masks, valid


def dice_loss(pred_sigmoid: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Smoothed dice loss per (prediction, target) mask pair; 0 for identical binary masks."""
    num = 2.0 * (pred_sigmoid * target).sum(dim=-1) + 1.0
    den = pred_sigmoid.sum(dim=-1) + target.sum(dim=-1) + 1.0
    return 1.0 - num / den


@torch.no_grad()
def _matching_cost(class_logits, mask_logits, target_classes, target_masks, valid, cfg):
    probs = class_logits.softmax(dim=-1)                     # [Q, K+1]
    cost_class = -probs[:, target_classes]                   # [Q, T]
    pred = mask_logits[:, valid]                             # [Q, P]
    tgt = target_masks[:, valid].to(pred.dtype)              # [T, P]
    pos = F.softplus(-pred)                                  # -log sigmoid(x)
    neg = F.softplus(pred)                                   # -log (1 - sigmoid(x))
    cost_bce = (pos @ tgt.T + neg @ (1.0 - tgt).T) / max(1, pred.shape[1])
    p = pred.sigmoid()
    inter = p @ tgt.T
    cost_dice = 1.0 - (2.0 * inter + 1.0) / (p.sum(-1, keepdim=True) + tgt.sum(-1) + 1.0)
    return cfg.class_weight * cost_class + cfg.mask_weight * cost_bce + cfg.dice_weight * cost_dice


def mask_loss(
    class_logits: torch.Tensor,
    mask_logits: torch.Tensor,
    label: torch.Tensor,
    cfg: MaskDecoderConfig,
    num_classes: int,
    ignore_index: int = 255,
) -> torch.Tensor:
    """Total loss for one image: class_logits [Q, K+1], mask logits [Q, H, W]
    at label resolution, label map [H, W] with ignore pixels."""
    q = class_logits.shape[0]
    target_classes, target_masks, valid = build_mask_targets(label, num_classes, ignore_index)
    class_weights = torch.ones(num_classes + 1, dtype=class_logits.dtype)
    class_weights[num_classes] = cfg.no_object_weight

    ce_targets = torch.full((q,), num_classes, dtype=torch.long)
    if len(target_classes) == 0:
        return cfg.class_weight * F.cross_entropy(class_logits, ce_targets, weight=class_weights)

    cost = _matching_cost(class_logits, mask_logits, target_classes, target_masks, valid, cfg)
    query_idx, target_idx = hungarian_match(cost.numpy() if not cost.requires_grad else cost.detach().numpy())
    query_idx = torch.from_numpy(np.asarray(query_idx))
    target_idx = torch.from_numpy(np.asarray(target_idx))

    ce_targets[query_idx] = target_classes[target_idx]
    classification = F.cross_entropy(class_logits, ce_targets, weight=class_weights)

    pred = mask_logits[query_idx][:, valid]
    tgt = target_masks[target_idx][:, valid].to(pred.dtype)
    bce = F.binary_cross_entropy_with_logits(pred, tgt, reduction="none").mean(dim=-1)
    dice = dice_loss(pred.sigmoid(), tgt)

    return cfg.class_weight * classification + cfg.mask_weight * bce.mean() + cfg.dice_weight * dice.mean()
