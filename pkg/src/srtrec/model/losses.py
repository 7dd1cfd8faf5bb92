"""Relation-position constraint loss and the combined training loss.

The constraint term penalizes relation probability mass (six relations
plus NoRel) on pen-down frames: relations may only be emitted at
off-strokes. Combined loss = CTC + constraint, both with gradients
against the shared logits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..ink import FeatureSequence
from .blstm import DistributionSequence
from .ctc import ctc_loss

CLAMP_EPS = 1e-7


@dataclass(frozen=True)
class LossBreakdown:
    ctc: float
    ce: float
    total: float

    def __post_init__(self):
        if self.ctc < 0 or self.ce < 0:
            raise ValueError("loss components must be non-negative")
        if self.total != self.ctc + self.ce:
            raise ValueError("total must equal ctc + ce")


def constraint_loss(
    dists: DistributionSequence, feats: FeatureSequence
) -> tuple[float, np.ndarray]:
    """-sum over stroke frames of log(1 - relation mass), clamped at CLAMP_EPS."""
    probs = dists.probs
    rel = dists.alphabet.relation_ids
    rel_slice = slice(rel.start, rel.stop)
    mask = feats.stroke_frame_mask()
    dlogits = np.zeros_like(probs)
    loss = 0.0
    for t in np.nonzero(mask)[0]:
        p = probs[t]
        q = p[rel_slice].sum()
        w = 1.0 - q
        if w < CLAMP_EPS:
            loss += -math.log(CLAMP_EPS)
            continue  # clamped: flat, no gradient
        loss += -math.log(w)
        # d(-log(1-q))/dz_j = p_j * (1[j in rel] - q) / (1-q)
        grad_row = p * (-q / w)
        grad_row[rel_slice] = p[rel_slice] * ((1.0 - q) / w)
        dlogits[t] = grad_row
    return loss, dlogits


def combined_loss(
    dists: DistributionSequence, feats: FeatureSequence, target
) -> tuple[LossBreakdown, np.ndarray]:
    ctc_value, ctc_grad = ctc_loss(dists, target)
    ctc_value = max(ctc_value, 0.0)  # guard float rounding at near-certain targets
    ce_value, ce_grad = constraint_loss(dists, feats)
    breakdown = LossBreakdown(ctc=ctc_value, ce=ce_value, total=ctc_value + ce_value)
    return breakdown, ctc_grad + ce_grad
