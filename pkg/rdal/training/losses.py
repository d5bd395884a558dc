"""Event classification and speech adversary losses (batch means)."""

from __future__ import annotations

import torch
import torch.nn.functional as F

PROBABILITY_CLIP = 1e-7


def loss_cls(probabilities: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean categorical cross-entropy of class-probability rows against 0-based labels."""
    if probabilities.ndim != 2:
        raise ValueError(f"probabilities must be (batch, classes), got {tuple(probabilities.shape)}")
    labels = labels.long()
    if labels.numel() and (labels.min() < 0 or labels.max() >= probabilities.shape[1]):
        raise ValueError(f"labels must lie in [0, {probabilities.shape[1]})")
    picked = probabilities.gather(1, labels.unsqueeze(1)).squeeze(1)
    return -torch.log(picked.clamp_min(torch.finfo(picked.dtype).tiny)).mean()


def loss_adv(speech_probs: torch.Tensor, speech_labels: torch.Tensor) -> torch.Tensor:
    """Mean binary cross-entropy with probabilities clipped away from 0 and 1."""
    clipped = speech_probs.clamp(PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP)
    return F.binary_cross_entropy(clipped, speech_labels.to(clipped.dtype))


def loss_cls_from_logits(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    return F.cross_entropy(logits, labels.long())


def loss_adv_from_logits(logits: torch.Tensor, speech_labels: torch.Tensor) -> torch.Tensor:
    return F.binary_cross_entropy_with_logits(logits, speech_labels.to(logits.dtype))
