"""Hybrid segmentation loss: weighted Dice + focal + binary cross-entropy.

All three terms are mean-reduced over voxels with probabilities clamped to
[CLAMP, 1-CLAMP] so the log terms stay finite at hard 0/1 predictions. The
Dice term carries the smoothing constant in both numerator and denominator,
which makes a perfect prediction score exactly zero.
"""

from __future__ import annotations

import torch

DICE_SMOOTH = 1e-6
CLAMP = 1e-7
DEFAULT_WEIGHTS = (0.1, 0.45, 0.45)
FOCAL_ALPHA = 0.25
FOCAL_GAMMA = 2.0


def _check_shapes(pred: torch.Tensor, gt: torch.Tensor) -> None:
    if pred.shape != gt.shape:
        raise ValueError(f"prediction shape {tuple(pred.shape)} != target shape {tuple(gt.shape)}")


def dice_loss(pred: torch.Tensor, gt: torch.Tensor, smooth: float = DICE_SMOOTH) -> torch.Tensor:
    _check_shapes(pred, gt)
    intersection = (pred * gt).sum()
    return 1.0 - (2.0 * intersection + smooth) / (pred.sum() + gt.sum() + smooth)


def focal_loss(
    pred: torch.Tensor,
    gt: torch.Tensor,
    alpha: float = FOCAL_ALPHA,
    gamma: float = FOCAL_GAMMA,
) -> torch.Tensor:
    _check_shapes(pred, gt)
    p = pred.clamp(CLAMP, 1.0 - CLAMP)
    pos = alpha * gt * (1.0 - p) ** gamma * torch.log(p)
    neg = (1.0 - alpha) * (1.0 - gt) * p**gamma * torch.log(1.0 - p)
    return -(pos + neg).mean()


def cross_entropy_loss(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    _check_shapes(pred, gt)
    p = pred.clamp(CLAMP, 1.0 - CLAMP)
    return -(gt * torch.log(p) + (1.0 - gt) * torch.log(1.0 - p)).mean()


def hybrid_loss(
    pred: torch.Tensor,
    gt: torch.Tensor,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
    focal_alpha: float = FOCAL_ALPHA,
    focal_gamma: float = FOCAL_GAMMA,
) -> torch.Tensor:
    a, b, c = weights
    if abs(a + b + c - 1.0) > 1e-6:
        raise ValueError(f"loss weights must sum to 1, got {weights}")
    return (
        a * dice_loss(pred, gt)
        + b * focal_loss(pred, gt, alpha=focal_alpha, gamma=focal_gamma)
        + c * cross_entropy_loss(pred, gt)
    )
