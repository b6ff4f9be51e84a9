"""Deterministic loss formulas, usable as numerical oracles for training code.

The 3D L1 loss acts in the encoded (scaled-log) parameter space, i.e. on the
12 raw head outputs, not on decoded meters.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBox, EmptyMask, LengthMismatch, NonPositiveDepth

DEFAULT_LAMBDA_SI = 0.5


@dataclass(frozen=True)
class LossWeights:
    w_2d: float = 1.0
    w_3d: float = 1.0
    lambda_depth: float = 10.0
    num_decoder_layers: int = 6

    def __post_init__(self):
        if self.w_2d < 0 or self.w_3d < 0 or self.lambda_depth < 0:
            raise ValueError("loss weights must be non-negative")
        if self.num_decoder_layers < 1:
            raise ValueError("num_decoder_layers must be positive")


def l1_3d(pred, target):
    """Sum of absolute differences over the 12 encoded lift parameters."""
    return float(np.abs(pred.as_array() - target.as_array()).sum())


def giou_2d(a, b):
    """Generalized IoU of two 2D boxes, in (-1, 1]."""
    ix1, iy1 = max(a.x1, b.x1), max(a.y1, b.y1)
    ix2, iy2 = min(a.x2, b.x2), min(a.y2, b.y2)
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    union = a.area + b.area - inter
    hx1, hy1 = min(a.x1, b.x1), min(a.y1, b.y1)
    hx2, hy2 = max(a.x2, b.x2), max(a.y2, b.y2)
    hull = (hx2 - hx1) * (hy2 - hy1)
    if hull <= 0:
        raise DegenerateBox("enclosing hull has zero area")
    iou = inter / union if union > 0 else 0.0
    return float(iou - (hull - union) / hull)


def silog(pred_depth, gt_depth, valid_mask=None, lambda_si=DEFAULT_LAMBDA_SI):
    """Scale-invariant log depth loss: mean(g^2) - lambda * (mean g)^2."""
    pred = np.asarray(pred_depth, dtype=float)
    gt = np.asarray(gt_depth, dtype=float)
    if valid_mask is not None:
        mask = np.asarray(valid_mask, dtype=bool)
        pred, gt = pred[mask], gt[mask]
    else:
        pred, gt = pred.ravel(), gt.ravel()
    if pred.size == 0:
        raise EmptyMask("no valid depth pixels")
    if (pred <= 0).any() or (gt <= 0).any():
        raise NonPositiveDepth("depths must be positive on valid pixels")
    g = np.log(pred) - np.log(gt)
    return float(np.mean(g**2) - lambda_si * np.mean(g) ** 2)


def final_loss(per_layer_2d, per_layer_3d, depth_loss, weights=LossWeights()):
    """Weighted total: w_2d * sum(L2D) + w_3d * sum(L3D) + lambda * L_depth."""
    if len(per_layer_2d) != len(per_layer_3d):
        raise LengthMismatch(
            f"2D and 3D layer lists differ: {len(per_layer_2d)} vs {len(per_layer_3d)}"
        )
    return float(
        weights.w_2d * np.sum(per_layer_2d)
        + weights.w_3d * np.sum(per_layer_3d)
        + weights.lambda_depth * depth_loss
    )
