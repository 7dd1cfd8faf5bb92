"""Acceptance gate: one test per release criterion, tolerances pinned.

Each test prints a `ACCEPTANCE <name>: PASS` line on success (visible
with -s or in captured output); pytest itself reports failures.
"""

import math
import os
import random
import time
from pathlib import Path

import numpy as np
import pytest

from srtrec.alphabet import DEFAULT_ALPHABET, LabelAlphabet
from srtrec.evalmetrics import (
    evaluate_pairs,
    exprate,
    report_json,
    report_text,
    score_relations,
)
from srtrec.ink import FeatureSequence, FrameTag, normalize
from srtrec.lg import from_lg, parse_lg, to_lg
from srtrec.model.blstm import BlstmModel, DistributionSequence, ModelConfig
from srtrec.model.ctc import ctc_forward_backward, ctc_loss, log_softmax, min_frames_for
from srtrec.model.decode import decode_relations, decode_symbols
from srtrec.model.losses import combined_loss, constraint_loss
from srtrec.model.train import TrainConfig, train
from srtrec.oracle import OracleClassifier
from srtrec.pathextract import extract_all, record_for_path
from srtrec.srt import (
    derived_paths_from_root,
    random_root_shuffle_paths,
    reconstruct_from_paths,
    writing_order_path,
)
from srtrec.synthetic import (
    TRAIN_SYMBOLS,
    curated_cases,
    random_srt,
    render_sample,
    training_samples,
)
from srtrec.treebuild import recognize

from helpers import brute_force_ctc, relative_error


def _report(name):
    print(f"\nACCEPTANCE {name}: PASS")


def test_ctc_oracle_equivalence():
    """Forward-backward equals brute-force alignment enumeration, 1e-6 rel, <5s."""
    rng = np.random.default_rng(2014)
    C, blank = 6, 5
    start = time.monotonic()
    checked = 0
    while checked < 100:
        T = int(rng.integers(1, 9))
        L = int(rng.integers(0, 5))
        target = [int(rng.integers(0, C - 1)) for _ in range(L)]
        if T < min_frames_for(target):
            continue
        lp = log_softmax(rng.normal(size=(T, C)))
        loss, _ = ctc_forward_backward(lp, target, blank=blank)
        oracle = brute_force_ctc(lp, target, blank=blank)
        assert relative_error(loss, oracle, floor=1.0) < 1e-6, (T, target)
        checked += 1
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"CTC oracle suite took {elapsed:.2f}s"
    _report(f"ctc-oracle (100 instances, {elapsed:.2f}s)")


def _random_instance(rng, alphabet, model):
    T = int(rng.integers(6, 11))
    frames = rng.normal(size=(T, 3)) * 0.3
    kinds = []
    stroke = 0
    for t in range(T):
        if t in (2, T - 3) and kinds and kinds[-1].kind == "stroke":
            stroke += 1
            kinds.append(FrameTag("off", stroke))
        else:
            kinds.append(FrameTag("stroke", stroke))
    feats = FeatureSequence(frames=frames, kinds=tuple(kinds),
                            stroke_order=tuple(range(stroke + 1)))
    symbols = [s for s in alphabet.symbols]
    target = [alphabet.id_of(rng.choice(symbols))]
    for _ in range(int(rng.integers(0, 2))):
        target.append(alphabet.id_of(str(rng.choice(["Right", "Sup", "Below"]))))
        target.append(alphabet.id_of(rng.choice(symbols)))
    return feats, target


def test_gradient_checks_through_model():
    """ctc, constraint and combined loss gradients vs central FD, 1e-4 rel."""
    alphabet = LabelAlphabet(symbols=("a", "b", "c", "d", "e"))
    rng = np.random.default_rng(7)

    losses = {
        "ctc": lambda dists, feats, target: ctc_loss(dists, target),
        "constraint": lambda dists, feats, target: constraint_loss(dists, feats),
        "combined": lambda dists, feats, target: (
            lambda br_grad: (br_grad[0].total, br_grad[1])
        )(combined_loss(dists, feats, target)),
    }
    for instance in range(20):
        model = BlstmModel(
            alphabet=alphabet,
            config=ModelConfig(layers=1, hidden=8, seed=100 + instance),
        )
        feats, target = _random_instance(rng, alphabet, model)

        for name, loss_fn in losses.items():
            def value(flat):
                model.load_flat(flat)
                logits, _ = model.forward(feats.frames)
                v, _ = loss_fn(DistributionSequence(logits, alphabet), feats, target)
                return v

            x0 = model.flatten()
            model.load_flat(x0)
            logits, cache = model.forward(feats.frames)
            v0, dlogits = loss_fn(DistributionSequence(logits, alphabet), feats, target)
            grads = model.backward(cache, dlogits)
            flat_grad = np.concatenate(
                [grads[k].ravel() for k in model.param_names()]
            )
            h = 1e-5
            coords = rng.choice(len(x0), size=20, replace=False)
            for i in coords:
                e = np.zeros_like(x0)
                e[i] = h
                fd = (value(x0 + e) - value(x0 - e)) / (2 * h)
                assert relative_error(flat_grad[i], fd) < 1e-4, (name, instance, i)
            for _ in range(2):
                v = rng.normal(size=len(x0))
                v /= np.linalg.norm(v)
                fd = (value(x0 + h * v) - value(x0 - h * v)) / (2 * h)
                assert relative_error(float(flat_grad @ v), fd, floor=1e-8) < 1e-4, (
                    name, instance,
                )
            model.load_flat(x0)
    _report("gradient-checks (20 instances x 3 losses)")


def test_path_tree_round_trip():
    """200 random SRTs: derived-path reconstruction is exact; merged PE2/PE3 too."""
    rng = random.Random(20140501)
    relations_seen = set()
    for i in range(200):
        t = random_srt(rng, max_nodes=10)
        relations_seen.update(e.relation for e in t.edges)
        pe1 = derived_paths_from_root(t)
        assert reconstruct_from_paths(pe1) == t, f"tree {i}"
        merged = pe1 + [writing_order_path(t)]
        merged += random_root_shuffle_paths(t, 3, seed=i)
        merged += random_root_shuffle_paths(t, 2, seed=i, scope="all")
        assert reconstruct_from_paths(merged) == t, f"tree {i} merged"
    assert relations_seen == {"Right", "Above", "Below", "Inside", "Sup", "Sub"}
    _report("path-tree-round-trip (200 trees, all 6 relations)")


def test_oracle_reconstruction_suite():
    """Oracle classifier recovers the exact SRT on every curated layout."""
    cases = curated_cases()
    assert len(cases) >= 50
    names = [name for name, _ in cases]
    assert "fig_int_d2x" in names and "half_h" in names
    failures = []
    for name, spec in cases:
        sample = normalize(render_sample(spec, name))
        oracle = OracleClassifier(sample.ground_truth, confidence=0.98)
        result = recognize(oracle, sample)
        if result != sample.ground_truth:
            failures.append(name)
    assert not failures, f"oracle reconstruction failed on: {failures}"
    from srtrec.latex import to_latex

    fig1 = normalize(render_sample(dict(cases)["fig_int_d2x"], "fig1"))
    assert to_latex(recognize(OracleClassifier(fig1.ground_truth), fig1)) == "\\int d^{2}x"
    frac = normalize(render_sample(dict(cases)["half_h"], "frac"))
    assert (
        to_latex(recognize(OracleClassifier(frac.ground_truth), frac))
        == "\\frac{h}{2}\\log h"
    )
    _report(f"oracle-reconstruction ({len(cases)} layouts at 100%)")


def test_desk_scale_training():
    """1-layer width-32 model reaches 100% training ExpRate in <=2000 epochs, <10 min."""
    start = time.monotonic()
    samples = training_samples()
    assert len(samples) == 20
    alphabet = LabelAlphabet(symbols=TRAIN_SYMBOLS)
    assert len(alphabet.symbols) <= 15
    covered = {
        e.relation for s in samples for e in s.ground_truth.edges
    }
    assert covered == {"Right", "Above", "Below", "Inside", "Sup", "Sub"}

    spacing = 0.1
    records = [
        record_for_path(p, s)
        for s in samples
        for p in extract_all(s, rules=("PE2",), seed=0)
    ]
    normalized = [normalize(s, spacing=spacing) for s in samples]

    def training_exprate(model):
        pairs = [(recognize(model, ns), ns.ground_truth) for ns in normalized]
        return exprate(pairs).correct

    def callback(model, epoch, row):
        if epoch < 50 or epoch % 25:
            return False
        return training_exprate(model) == 1.0

    config = TrainConfig(
        epochs=2000, batch_size=2, lr=3e-3, seed=0, layers=1, hidden=32,
        spacing=spacing, input_scale=10.0,
    )
    result = train(records, config, alphabet=alphabet, epoch_callback=callback)
    elapsed = time.monotonic() - start
    final_rate = training_exprate(result.model)
    assert final_rate == 1.0, f"training ExpRate {final_rate} after {result.stopped_epoch} epochs"
    assert result.stopped_epoch <= 2000
    assert elapsed < 600.0, f"training took {elapsed:.0f}s"
    assert result.history[49].total < result.history[0].total
    _report(
        f"desk-scale-training (100% ExpRate at epoch {result.stopped_epoch}, "
        f"{elapsed:.0f}s)"
    )


def test_decoding_units_eq1_eq2():
    """Hand-built distributions drive Eq-style decoding, tie goes to the relation."""
    a = DEFAULT_ALPHABET
    kinds = (
        FrameTag("stroke", 0), FrameTag("off", 1), FrameTag("stroke", 1),
        FrameTag("off", 2), FrameTag("stroke", 2),
    )
    feats = FeatureSequence(frames=np.zeros((5, 3)), kinds=kinds, stroke_order=(0, 1, 2))

    def dist_rows(rows):
        probs = np.full((5, a.size), 0.0)
        for t, pairs in enumerate(rows):
            for label, mass in pairs.items():
                probs[t, a.id_of(label)] = mass
            probs[t] /= probs[t].sum()
        return DistributionSequence(np.log(np.maximum(probs, 1e-300)), a)

    # relation beats blank; blank beats relation; exact tie -> relation
    dists = dist_rows([
        {"x": 1.0},
        {"Right": 0.6, "blank": 0.2, "x": 0.2},
        {"d": 1.0},
        {"Sup": 0.25, "blank": 0.25, "d": 0.5},
        {"2": 1.0},
    ])
    rels = decode_relations(dists, feats)
    assert rels == [(1, "Right"), (2, "Sup")]

    blank_dom = dist_rows([
        {"x": 1.0},
        {"Right": 0.05, "blank": 0.9, "x": 0.05},
        {"x": 1.0},
        {"NoRel": 0.5, "blank": 0.1, "x": 0.4},
        {"y": 1.0},
    ])
    rels2 = decode_relations(blank_dom, feats)
    assert rels2 == [(1, "blank"), (2, "NoRel")]
    symbols = decode_symbols(blank_dom, feats, rels2)
    assert [s.label for s in symbols] == ["x", "y"]
    assert [s.span for s in symbols] == [(0, 1), (2, 2)]

    # Eq 2: per-class max over segment frames; blank excluded from the argmax
    seg_dists = dist_rows([
        {"a": 0.6, "d": 0.3, "blank": 0.1},
        {"a": 0.25, "d": 0.7, "blank": 0.05},
        {"a": 0.6, "d": 0.3, "blank": 0.1},
        {"blank": 1.0},
        {"blank": 0.95, "x": 0.05},
    ])
    flat_feats = FeatureSequence(
        frames=np.zeros((5, 3)),
        kinds=(FrameTag("stroke", 0),) * 3 + (FrameTag("off", 1), FrameTag("stroke", 1)),
        stroke_order=(0, 1),
    )
    out = decode_symbols(seg_dists, flat_feats, [(1, "Right")])
    assert [s.label for s in out] == ["d", "x"]
    _report("eq1-eq2-decoding-units")


def test_constraint_loss_closed_forms():
    """Uniform distributions give -k*log(1 - 7/109) within 1e-9; zero mass gives 0."""
    a = DEFAULT_ALPHABET
    for k in (1, 3, 11):
        kinds = tuple(FrameTag("stroke", 0) for _ in range(k))
        feats = FeatureSequence(frames=np.zeros((k, 3)), kinds=kinds, stroke_order=(0,))
        probs = np.full((k, a.size), 1.0 / a.size)
        dists = DistributionSequence(np.log(probs), a)
        loss, _ = constraint_loss(dists, feats)
        expected = -k * math.log(1.0 - 7.0 / 109.0)
        assert abs(loss - expected) < 1e-9, k

    k = 4
    kinds = tuple(FrameTag("stroke", 0) for _ in range(k))
    feats = FeatureSequence(frames=np.zeros((k, 3)), kinds=kinds, stroke_order=(0,))
    probs = np.full((k, a.size), 1e-300)
    probs[:, a.id_of("x")] = 0.5
    probs[:, a.blank_id] = 0.5
    dists = DistributionSequence(np.log(probs), a)
    loss, _ = constraint_loss(dists, feats)
    assert loss == 0.0
    _report("constraint-loss-closed-forms")


def test_metrics_self_consistency():
    """exprate identity, endpoint-sensitive relations, schemas, LG round trip."""
    rng = random.Random(5)
    trees = [random_srt(rng) for _ in range(100)]
    for t in trees:
        assert exprate([(t, t)]).correct == 1.0
        assert from_lg(parse_lg(to_lg(t).to_text())) == t

    # relation match requires both endpoints correctly segmented AND recognized
    from srtrec.srt import Srt, SrtNode

    truth = trees[0]
    if len(truth.nodes) > 1:
        victim = truth.edges[0].child
        nodes = tuple(
            SrtNode(n.id, "COMMA" if n.id == victim else n.label, n.stroke_ids, n.bbox)
            for n in truth.nodes
        )
        pred = Srt(nodes, truth.edges, truth.root)
        before = score_relations(truth, truth)
        after = score_relations(pred, truth)
        assert after.matches < before.matches

    report = evaluate_pairs([(t, t) for t in trees[:10]])
    text = report_text(report)
    for column in ("Segments (%)", "Segment + Class (%)", "Tree relations (%)",
                   "Recall", "Precision", "Correct (%)", "<=1 error", "<=2 errors",
                   "<=3 errors"):
        assert column in text
    import json

    data = json.loads(report_json(report))
    assert data["v"] == 1
    assert data["exprate"]["correct"] == 1.0
    assert {"node_confusions", "edge_confusions"} <= set(data)
    _report("metrics-self-consistency (100 LG round trips)")


CROHME_DIR = os.environ.get("CROHME_DATA_DIR", "")


@pytest.mark.skipif(
    not CROHME_DIR or not Path(CROHME_DIR).is_dir(),
    reason="CROHME dataset not available locally (set CROHME_DATA_DIR)",
)
def test_crohme_smoke_run(tmp_path):
    """Ingest >=100 CROHME samples, extract, train 5 epochs, evaluate."""
    from srtrec.cli import main

    files = sorted(Path(CROHME_DIR).glob("**/*.inkml"))[:150]
    assert len(files) >= 100, "need at least 100 CROHME samples"
    work = tmp_path / "ink"
    work.mkdir()
    for f in files:
        (work / f.name).write_bytes(f.read_bytes())
        lg = f.with_suffix(".lg")
        if lg.exists():
            (work / lg.name).write_bytes(lg.read_bytes())
    manifest = tmp_path / "manifest.jsonl"
    assert main(["extract-paths", str(work), str(manifest)]) == 0
    ckpt = tmp_path / "model.ckpt"
    assert main([
        "train", str(manifest), str(ckpt),
        "--set", "epochs=5", "--set", "layers=1", "--set", "hidden=16",
    ]) == 0
    report_path = tmp_path / "report.json"
    assert main(["eval", str(ckpt), str(work), str(report_path)]) == 0
    import json

    report = json.loads(report_path.read_text())
    for key in ("segments", "seg_class", "tree_relations"):
        assert 0.0 <= report[key]["recall"] <= 1.0
        assert 0.0 <= report[key]["precision"] <= 1.0
    for key in ("correct", "le1", "le2", "le3"):
        assert 0.0 <= report["exprate"][key] <= 1.0
    _report("crohme-smoke-run")
