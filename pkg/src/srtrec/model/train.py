"""Mini-batch training loop for the temporal classifier.

Adam with global-norm clipping over per-path combined losses. Runs are
fully deterministic for a fixed seed: initialization, the train/val
split, epoch shuffles, and gradient summation order all derive from it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ..alphabet import DEFAULT_ALPHABET, LabelAlphabet
from ..ink import RESAMPLE_SPACING, FeatureSequence, featurize_order, normalize
from ..pathextract import ManifestRecord
from .blstm import BlstmModel, DistributionSequence, ModelConfig
from .ctc import min_frames_for
from .losses import combined_loss


class TrainingDivergence(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 8
    lr: float = 1e-3
    seed: int = 0
    val_split: float = 0.0
    layers: int = 3
    hidden: int = 64
    clip_norm: float = 5.0
    spacing: float = RESAMPLE_SPACING
    input_scale: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    @staticmethod
    def from_file(path: str | Path) -> "TrainConfig":
        cfg = TrainConfig()
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            cfg.set_option(key, value)
        return cfg

    def set_option(self, key: str, value: str):
        for f in fields(self):
            if f.name == key:
                caster = type(getattr(self, key))
                setattr(self, key, caster(value))
                return
        raise ValueError(f"unknown config key {key!r}")

    def apply_overrides(self, overrides):
        for item in overrides:
            if "=" not in item:
                raise ValueError(f"override {item!r} is not key=value")
            key, value = (part.strip() for part in item.split("=", 1))
            self.set_option(key, value)


class Adam:
    def __init__(self, params: dict[str, np.ndarray], config: TrainConfig):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0
        self.config = config

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        cfg = self.config
        norm = math.sqrt(sum(float((g**2).sum()) for g in grads.values()))
        scale = cfg.clip_norm / norm if norm > cfg.clip_norm > 0 else 1.0
        self.t += 1
        b1c = 1.0 - cfg.beta1**self.t
        b2c = 1.0 - cfg.beta2**self.t
        for k in sorted(params):
            g = grads[k] * scale
            self.m[k] = cfg.beta1 * self.m[k] + (1 - cfg.beta1) * g
            self.v[k] = cfg.beta2 * self.v[k] + (1 - cfg.beta2) * g * g
            m_hat = self.m[k] / b1c
            v_hat = self.v[k] / b2c
            params[k] -= cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)


@dataclass
class TrainingItem:
    sample_id: str
    rule: str
    feats: FeatureSequence
    target_ids: list[int]


@dataclass
class EpochRow:
    epoch: int
    ctc: float
    ce: float
    total: float
    val_total: float


@dataclass
class TrainResult:
    model: BlstmModel
    history: list[EpochRow]
    best_params: dict[str, np.ndarray]
    best_val: float
    stopped_epoch: int

    def best_model(self) -> BlstmModel:
        return BlstmModel(
            alphabet=self.model.alphabet,
            config=self.model.config,
            params={k: v.copy() for k, v in self.best_params.items()},
        )


def prepare_items(
    records: list[ManifestRecord],
    alphabet: LabelAlphabet,
    spacing: float = RESAMPLE_SPACING,
) -> list[TrainingItem]:
    """Normalize each referenced sample once, featurize every path."""
    samples = {}
    for rec in records:
        if rec.sample_id not in samples:
            samples[rec.sample_id] = normalize(rec.load_sample(), spacing=spacing)
    items = []
    for rec in records:
        sample = samples[rec.sample_id]
        feats = featurize_order(sample, rec.stroke_order)
        target_ids = [alphabet.id_of(label) for label in rec.target]
        if len(feats) < min_frames_for(target_ids):
            raise ValueError(
                f"record {rec.sample_id}/{rec.rule}: target needs more frames "
                f"than the ink provides ({len(feats)})"
            )
        items.append(TrainingItem(rec.sample_id, rec.rule, feats, target_ids))
    return items


def _mean_losses(model: BlstmModel, items) -> tuple[float, float, float]:
    if not items:
        return 0.0, 0.0, 0.0
    tot_ctc = tot_ce = 0.0
    for item in items:
        logits, _ = model.forward(item.feats.frames)
        dists = DistributionSequence(logits, model.alphabet)
        breakdown, _ = combined_loss(dists, item.feats, item.target_ids)
        tot_ctc += breakdown.ctc
        tot_ce += breakdown.ce
    n = len(items)
    return tot_ctc / n, tot_ce / n, (tot_ctc + tot_ce) / n


def train(
    records: list[ManifestRecord],
    config: TrainConfig,
    alphabet: LabelAlphabet = DEFAULT_ALPHABET,
    epoch_callback=None,
    log=None,
) -> TrainResult:
    """Fit a model on manifest records; returns history and best parameters.

    epoch_callback(model, epoch, row) may return True to stop early.
    Raises TrainingDivergence when a batch loss turns non-finite.
    """
    if not records:
        raise ValueError("empty manifest")
    items = prepare_items(records, alphabet, spacing=config.spacing)
    model = BlstmModel(
        alphabet=alphabet,
        config=ModelConfig(
            layers=config.layers,
            hidden=config.hidden,
            seed=config.seed,
            input_scale=config.input_scale,
            spacing=config.spacing,
        ),
    )
    rng = np.random.default_rng(config.seed)
    indices = rng.permutation(len(items))
    n_val = int(round(config.val_split * len(items)))
    val_items = [items[i] for i in indices[:n_val]]
    train_items = [items[i] for i in indices[n_val:]]
    if not train_items:
        raise ValueError("validation split leaves no training items")

    optimizer = Adam(model.params, config)
    history: list[EpochRow] = []
    best_val = math.inf
    best_params = model.clone_params()
    stopped = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_items))
        ep_ctc = ep_ce = 0.0
        for batch_start in range(0, len(order), config.batch_size):
            batch = order[batch_start : batch_start + config.batch_size]
            grads = {k: np.zeros_like(v) for k, v in model.params.items()}
            batch_total = 0.0
            for idx in batch:
                item = train_items[idx]
                logits, cache = model.forward(item.feats.frames)
                if not np.isfinite(logits).all():
                    raise TrainingDivergence(
                        f"non-finite logits at epoch {epoch}, batch starting "
                        f"{batch_start}: sample {item.sample_id} ({item.rule})"
                    )
                dists = DistributionSequence(logits, model.alphabet)
                breakdown, dlogits = combined_loss(dists, item.feats, item.target_ids)
                if not math.isfinite(breakdown.total):
                    raise TrainingDivergence(
                        f"non-finite loss at epoch {epoch}, batch starting "
                        f"{batch_start}: sample {item.sample_id} ({item.rule})"
                    )
                batch_total += breakdown.total
                ep_ctc += breakdown.ctc
                ep_ce += breakdown.ce
                for k, g in model.backward(cache, dlogits / len(batch)).items():
                    grads[k] += g
            if not math.isfinite(batch_total):
                raise TrainingDivergence(f"non-finite batch loss at epoch {epoch}")
            if config.lr > 0:
                optimizer.step(model.params, grads)
        n = len(train_items)
        _, _, val_total = _mean_losses(model, val_items)
        row = EpochRow(epoch, ep_ctc / n, ep_ce / n, (ep_ctc + ep_ce) / n, val_total)
        history.append(row)
        score = val_total if val_items else row.total
        if score < best_val:
            best_val = score
            best_params = model.clone_params()
        if log:
            log(f"epoch {epoch}: ctc={row.ctc:.4f} ce={row.ce:.4f} "
                f"total={row.total:.4f} val={row.val_total:.4f}")
        stopped = epoch
        if epoch_callback and epoch_callback(model, epoch, row):
            break
    return TrainResult(model, history, best_params, best_val, stopped)


def write_metrics_csv(history: list[EpochRow], path: str | Path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "ctc", "ce", "total", "val_total"])
        for row in history:
            writer.writerow([row.epoch, row.ctc, row.ce, row.total, row.val_total])
