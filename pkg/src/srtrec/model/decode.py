"""Constrained decoding of the classifier output into a 1D SRT.

Relations are read only at off-stroke frames: the best relation label
(NoRel included) wins when it is at least as probable as blank there,
otherwise the off-stroke is blank and its neighbours belong to one
multi-stroke symbol. Symbols are then decoded per stroke segment by
per-class max over the segment's frames, blank and relations excluded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ink import FeatureSequence, InkSample, featurize
from .blstm import DistributionSequence


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class OneDSymbol:
    label: str
    span: tuple[int, int]  # inclusive (first_stroke, last_stroke)


@dataclass(frozen=True)
class OneDSrt:
    symbols: tuple[OneDSymbol, ...]
    relations: tuple[str, ...]

    def __post_init__(self):
        if len(self.relations) != max(len(self.symbols) - 1, 0):
            raise DecodeError("relation count must be symbol count - 1")
        prev_end = -1
        for sym in self.symbols:
            if sym.span[0] != prev_end + 1 or sym.span[1] < sym.span[0]:
                raise DecodeError(f"stroke spans do not partition strokes: {sym}")
            prev_end = sym.span[1]

    @property
    def tokens(self) -> tuple[str, ...]:
        out: list[str] = []
        for i, sym in enumerate(self.symbols):
            if i:
                out.append(self.relations[i - 1])
            out.append(sym.label)
        return tuple(out)


def decode_relations(
    dists: DistributionSequence, feats: FeatureSequence
) -> list[tuple[int, str]]:
    """Per off-stroke (gap_index, label); label is a relation, NoRel or blank."""
    alphabet = dists.alphabet
    rel_ids = alphabet.relation_ids
    out: list[tuple[int, str]] = []
    for gap, t in feats.off_positions():
        p = dists.probs[t]
        rel_slice = p[rel_ids.start : rel_ids.stop]
        best = int(np.argmax(rel_slice))
        if rel_slice[best] >= p[alphabet.blank_id]:
            out.append((gap, alphabet.label_of(rel_ids.start + best)))
        else:
            out.append((gap, alphabet.blank))
    return out


def decode_symbols(
    dists: DistributionSequence,
    feats: FeatureSequence,
    relation_cuts: list[tuple[int, str]],
    aggregate: str = "max",
) -> list[OneDSymbol]:
    """One symbol per stroke segment delimited by non-blank off-strokes.

    A segment's frames are all frames of its strokes plus the interior
    (blank-decoded) off-strokes. aggregate="max" scores each class by its
    best frame; "geomean" averages log-probabilities instead.
    """
    if aggregate not in ("max", "geomean"):
        raise DecodeError(f"bad aggregate {aggregate!r}")
    alphabet = dists.alphabet
    order = feats.stroke_order
    n = len(order)
    cut_gaps = {gap for gap, label in relation_cuts if label != alphabet.blank}
    segments: list[tuple[int, int]] = []
    start = 0
    for pos in range(1, n):
        if pos in cut_gaps:
            segments.append((start, pos - 1))
            start = pos
    segments.append((start, n - 1))

    n_sym = len(alphabet.symbols)
    out: list[OneDSymbol] = []
    for seg_start, seg_end in segments:
        rows = []
        for pos in range(seg_start, seg_end + 1):
            rows.extend(feats.stroke_positions(order[pos]))
            if pos > seg_start:
                rows.extend(t for g, t in feats.off_positions() if g == pos)
        frame_block = dists.probs[rows][:, :n_sym]
        if aggregate == "max":
            scores = frame_block.max(axis=0)
        else:
            scores = np.log(np.maximum(frame_block, 1e-300)).mean(axis=0)
        label = alphabet.label_of(int(np.argmax(scores)))
        out.append(OneDSymbol(label, (seg_start, seg_end)))
    return out


def decode_oned(dists: DistributionSequence, feats: FeatureSequence) -> OneDSrt:
    """Compose relation and symbol decoding into the alternating 1D SRT."""
    cuts = decode_relations(dists, feats)
    symbols = decode_symbols(dists, feats, cuts)
    blank = dists.alphabet.blank
    relations = tuple(label for _, label in cuts if label != blank)
    return OneDSrt(tuple(symbols), relations)


def recognize_1d(classifier, sample: InkSample) -> OneDSrt:
    """Run the classifier over the sample in writing order and decode."""
    if sample.n_strokes == 0:
        raise DecodeError("zero strokes")
    feats = featurize(sample)
    order = tuple(range(sample.n_strokes))
    dists = classifier.distributions_for(sample, order)
    return decode_oned(dists, feats)
