import math

import numpy as np
import pytest

from srtrec.alphabet import DEFAULT_ALPHABET, LabelAlphabet
from srtrec.ink import FeatureSequence, FrameTag
from srtrec.model.blstm import BlstmModel, DistributionSequence, ModelConfig
from srtrec.model.losses import LossBreakdown, combined_loss, constraint_loss

from helpers import relative_error

rng = np.random.default_rng(21)
TOY = LabelAlphabet(symbols=("a", "b", "c", "d"))


def feats_with_kinds(kinds):
    frames = np.zeros((len(kinds), 3))
    for t, tag in enumerate(kinds):
        frames[t, 2] = 0.0 if tag.kind == "off" else 1.0
    order = tuple(sorted({tag.index for tag in kinds if tag.kind == "stroke"}))
    return FeatureSequence(frames=frames, kinds=tuple(kinds), stroke_order=order)


def dists_from_probs(probs, alphabet):
    return DistributionSequence(np.log(np.asarray(probs, dtype=float)), alphabet)


def stroke_then_off(n_stroke, n_off=1):
    kinds = [FrameTag("stroke", 0)] * n_stroke + [FrameTag("off", 1)] * n_off
    return feats_with_kinds(kinds)


def test_zero_relation_mass_gives_zero():
    a = TOY
    p = np.zeros(a.size)
    p[a.id_of("a")] = 0.7
    p[a.blank_id] = 0.3
    probs = np.tile(p, (3, 1))
    feats = feats_with_kinds([FrameTag("stroke", 0)] * 3)
    # exact zeros would be -inf logits; use the closed form via direct probs
    dists = DistributionSequence(np.log(np.maximum(probs, 1e-300)), a)
    loss, grad = constraint_loss(dists, feats)
    assert abs(loss) < 1e-12
    assert np.allclose(grad, 0.0, atol=1e-12)


def test_half_relation_mass_contribution():
    a = TOY
    p = np.full(a.size, 0.0)
    p[a.id_of("Right")] = 0.5
    p[a.id_of("a")] = 0.5
    probs = np.array([p])
    feats = feats_with_kinds([FrameTag("stroke", 0)])
    dists = dists_from_probs(np.maximum(probs, 1e-300), a)
    loss, _ = constraint_loss(dists, feats)
    assert math.isclose(loss, -math.log(0.5), rel_tol=1e-9)


def test_uniform_closed_form():
    a = DEFAULT_ALPHABET
    k = 5
    probs = np.full((k, a.size), 1.0 / a.size)
    feats = feats_with_kinds([FrameTag("stroke", 0)] * k)
    dists = dists_from_probs(probs, a)
    loss, _ = constraint_loss(dists, feats)
    assert math.isclose(loss, -k * math.log(1 - 7 / 109), rel_tol=0, abs_tol=1e-9)


def test_off_frames_do_not_contribute():
    a = TOY
    probs = np.full((4, a.size), 1.0 / a.size)
    feats = feats_with_kinds([FrameTag("off", 1)] * 4)
    dists = dists_from_probs(probs, a)
    loss, grad = constraint_loss(dists, feats)
    assert loss == 0.0
    assert np.allclose(grad, 0.0)


def test_clamp_at_saturated_relations():
    a = TOY
    p = np.full(a.size, 1e-12)
    p[a.id_of("Right")] = 1.0 - 1e-12 * (a.size - 1)
    probs = np.array([p])
    feats = feats_with_kinds([FrameTag("stroke", 0)])
    dists = dists_from_probs(probs, a)
    loss, grad = constraint_loss(dists, feats)
    assert loss <= -math.log(1e-7) + 1e-6
    assert np.isfinite(loss)
    assert np.allclose(grad[0], 0.0)  # clamped region is flat


def test_constraint_gradient_matches_fd():
    a = TOY
    T = 6
    logits = rng.normal(size=(T, a.size))
    kinds = [FrameTag("stroke", 0)] * 3 + [FrameTag("off", 1)] + [FrameTag("stroke", 1)] * 2
    feats = feats_with_kinds(kinds)

    def value(z):
        return constraint_loss(DistributionSequence(z, a), feats)[0]

    _, grad = constraint_loss(DistributionSequence(logits, a), feats)
    h = 1e-6
    for _ in range(12):
        t = int(rng.integers(0, T))
        k = int(rng.integers(0, a.size))
        bump = np.zeros_like(logits)
        bump[t, k] = h
        fd = (value(logits + bump) - value(logits - bump)) / (2 * h)
        assert relative_error(grad[t, k], fd) < 1e-4


class TestCombined:
    def test_total_is_exact_sum(self):
        a = TOY
        model = BlstmModel(alphabet=a, config=ModelConfig(layers=1, hidden=5, seed=2))
        frames = rng.normal(size=(7, 3))
        kinds = [FrameTag("stroke", 0)] * 3 + [FrameTag("off", 1)] + [FrameTag("stroke", 1)] * 3
        feats = FeatureSequence(frames=frames, kinds=tuple(kinds), stroke_order=(0, 1))
        logits, _ = model.forward(frames)
        dists = DistributionSequence(logits, a)
        target = [a.id_of("a"), a.id_of("Right"), a.id_of("b")]
        breakdown, grad = combined_loss(dists, feats, target)
        assert breakdown.total == breakdown.ctc + breakdown.ce
        assert breakdown.ctc >= 0 and breakdown.ce >= 0
        assert breakdown.total > breakdown.ctc
        assert breakdown.total > breakdown.ce
        assert grad.shape == logits.shape

    def test_ce_zero_means_total_equals_ctc(self):
        a = TOY
        p = np.zeros(a.size)
        p[a.id_of("a")] = 0.6
        p[a.blank_id] = 0.4
        probs = np.maximum(np.tile(p, (3, 1)), 1e-300)
        feats = feats_with_kinds([FrameTag("stroke", 0)] * 3)
        dists = dists_from_probs(probs, a)
        breakdown, _ = combined_loss(dists, feats, [a.id_of("a")])
        assert breakdown.ce == 0.0
        assert breakdown.total == breakdown.ctc

    def test_gradient_is_sum_of_components(self):
        a = TOY
        logits = rng.normal(size=(5, a.size))
        kinds = [FrameTag("stroke", 0)] * 2 + [FrameTag("off", 1)] + [FrameTag("stroke", 1)] * 2
        feats = feats_with_kinds(kinds)
        target = [a.id_of("a"), a.id_of("Sup"), a.id_of("b")]
        dists = DistributionSequence(logits, a)
        from srtrec.model.ctc import ctc_loss

        _, g_ctc = ctc_loss(dists, target)
        _, g_ce = constraint_loss(dists, feats)
        _, g_sum = combined_loss(dists, feats, target)
        assert np.allclose(g_sum, g_ctc + g_ce, atol=1e-12)

    def test_breakdown_validation(self):
        with pytest.raises(ValueError):
            LossBreakdown(ctc=1.0, ce=1.0, total=3.0)
        with pytest.raises(ValueError):
            LossBreakdown(ctc=-1.0, ce=0.0, total=-1.0)
