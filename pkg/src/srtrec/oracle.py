"""Ground-truth-backed classifier stand-in.

Emits probability 1 - eps on the label the truth tree implies for each
frame: the owning symbol on pen-down frames; on off-strokes the edge
relation when the earlier node is the parent of the later one, NoRel
when the nodes are unrelated, and blank inside a multi-stroke symbol.
Used to exercise decoding and tree reconstruction independently of
training quality.
"""

from __future__ import annotations

import numpy as np

from .alphabet import DEFAULT_ALPHABET, LabelAlphabet
from .ink import InkSample, featurize_order
from .model.blstm import DistributionSequence
from .srt import Srt


class OracleClassifier:
    def __init__(
        self,
        truth: Srt,
        alphabet: LabelAlphabet = DEFAULT_ALPHABET,
        confidence: float = 0.98,
    ):
        if truth.is_empty:
            raise ValueError("oracle needs a non-empty truth tree")
        self.truth = truth
        self.alphabet = alphabet
        self.confidence = confidence
        self._owner = {}
        for node in truth.nodes:
            for sid in node.stroke_ids:
                self._owner[sid] = node

    def _frame_label(self, tag, stroke_order) -> str:
        if tag.kind == "stroke":
            return self._owner[tag.index].label
        prev = self._owner[stroke_order[tag.index - 1]]
        nxt = self._owner[stroke_order[tag.index]]
        if prev.id == nxt.id:
            return self.alphabet.blank
        edge = self.truth.edge_between(prev.id, nxt.id)
        return edge.relation if edge else self.alphabet.norel

    def distributions_for(
        self, sample: InkSample, stroke_order: tuple[int, ...]
    ) -> DistributionSequence:
        feats = featurize_order(sample, stroke_order)
        C = self.alphabet.size
        probs = np.full((len(feats), C), (1.0 - self.confidence) / (C - 1))
        for t, tag in enumerate(feats.kinds):
            label = self._frame_label(tag, stroke_order)
            probs[t, self.alphabet.id_of(label)] = self.confidence
        # DistributionSequence is logit-based; log-probs of a distribution
        # are logits whose softmax reproduces it.
        return DistributionSequence(np.log(probs), self.alphabet)
