"""Stacked bidirectional LSTM with a projection head, in plain numpy.

Gates per direction are packed [input; forget; output; cell] into one
(4H, D) input matrix, one (4H, H) recurrent matrix and one bias. The
backward direction runs the same cell over the reversed frame sequence;
layer output is the per-frame concatenation of both directions. All
math is float64 so analytic gradients can be checked against central
finite differences tightly.
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..alphabet import DEFAULT_ALPHABET, LabelAlphabet
from ..ink import RESAMPLE_SPACING, FeatureSequence, InkSample, featurize_order
from .ctc import log_softmax

CHECKPOINT_VERSION = 1


class ModelError(ValueError):
    pass


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class FrameDistribution:
    """One frame's probability vector, partitioned over the alphabet."""

    probs: np.ndarray
    alphabet: LabelAlphabet

    @property
    def p_symbol(self) -> np.ndarray:
        return self.probs[: len(self.alphabet.symbols)]

    @property
    def p_rel(self) -> np.ndarray:
        """Six relations plus NoRel."""
        r = self.alphabet.relation_ids
        return self.probs[r.start : r.stop]

    @property
    def p_blank(self) -> float:
        return float(self.probs[self.alphabet.blank_id])


class DistributionSequence:
    """Softmax outputs for a whole frame sequence."""

    def __init__(self, logits: np.ndarray, alphabet: LabelAlphabet):
        self.logits = logits
        self.alphabet = alphabet
        self.log_probs = log_softmax(logits)
        self.probs = np.exp(self.log_probs)

    def __len__(self) -> int:
        return len(self.logits)

    def __getitem__(self, t: int) -> FrameDistribution:
        return FrameDistribution(self.probs[t], self.alphabet)


def init_params(
    layers: int, hidden: int, input_dim: int, out_dim: int, seed: int
) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    d_in = input_dim
    for layer in range(layers):
        for d in ("fwd", "bwd"):
            scale = 1.0 / np.sqrt(max(d_in, hidden))
            params[f"l{layer}_{d}_W"] = rng.uniform(-scale, scale, (4 * hidden, d_in))
            params[f"l{layer}_{d}_R"] = rng.uniform(-scale, scale, (4 * hidden, hidden))
            b = np.zeros(4 * hidden)
            b[hidden : 2 * hidden] = 1.0  # forget-gate bias
            params[f"l{layer}_{d}_b"] = b
        d_in = 2 * hidden
    scale = 1.0 / np.sqrt(d_in)
    params["proj_W"] = rng.uniform(-scale, scale, (d_in, out_dim))
    params["proj_b"] = np.zeros(out_dim)
    return params


def lstm_direction_forward(W, R, b, x: np.ndarray):
    """Run one LSTM direction over x (T, D); returns h (T, H) and cache."""
    T = len(x)
    H = R.shape[1]
    h = np.zeros((T, H))
    c = np.zeros((T, H))
    gates = np.zeros((T, 4 * H))
    h_prev = np.zeros(H)
    c_prev = np.zeros(H)
    z_in = x @ W.T + b  # input projection for all frames at once
    for t in range(T):
        z = z_in[t] + R @ h_prev
        i = _sigmoid(z[:H])
        f = _sigmoid(z[H : 2 * H])
        o = _sigmoid(z[2 * H : 3 * H])
        g = np.tanh(z[3 * H :])
        c_t = f * c_prev + i * g
        h_t = o * np.tanh(c_t)
        gates[t, :H] = i
        gates[t, H : 2 * H] = f
        gates[t, 2 * H : 3 * H] = o
        gates[t, 3 * H :] = g
        c[t] = c_t
        h[t] = h_t
        h_prev, c_prev = h_t, c_t
    return h, {"x": x, "h": h, "c": c, "gates": gates, "W": W, "R": R}


def lstm_direction_backward(cache, dh: np.ndarray):
    """BPTT for one direction; dh is dLoss/dh per frame. Returns grads and dx."""
    x, h, c, gates = cache["x"], cache["h"], cache["c"], cache["gates"]
    W, R = cache["W"], cache["R"]
    T, H = h.shape
    dR = np.zeros_like(R)
    dx = np.zeros_like(x)
    dz_all = np.zeros((T, 4 * H))
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    zeros = np.zeros(H)
    for t in range(T - 1, -1, -1):
        i = gates[t, :H]
        f = gates[t, H : 2 * H]
        o = gates[t, 2 * H : 3 * H]
        g = gates[t, 3 * H :]
        c_prev = c[t - 1] if t > 0 else zeros
        h_prev = h[t - 1] if t > 0 else zeros
        dh_t = dh[t] + dh_next
        tanh_c = np.tanh(c[t])
        do = dh_t * tanh_c
        dc = dh_t * o * (1.0 - tanh_c**2) + dc_next
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dc_next = dc * f
        dz = dz_all[t]
        dz[:H] = di * i * (1 - i)
        dz[H : 2 * H] = df * f * (1 - f)
        dz[2 * H : 3 * H] = do * o * (1 - o)
        dz[3 * H :] = dg * (1 - g**2)
        dR += np.outer(dz, h_prev)
        dh_next = R.T @ dz
    dW = dz_all.T @ x
    db = dz_all.sum(axis=0)
    dx = dz_all @ W
    return dW, dR, db, dx


@dataclass
class ModelConfig:
    layers: int = 3
    hidden: int = 64
    input_dim: int = 3
    seed: int = 0
    input_scale: float = 1.0  # multiplies dx/dy/pen before the first layer
    spacing: float = RESAMPLE_SPACING  # resampling the weights were trained at


class BlstmModel:
    """Symbol-relation temporal classifier: deep BLSTM + softmax projection."""

    def __init__(
        self,
        alphabet: LabelAlphabet = DEFAULT_ALPHABET,
        config: ModelConfig | None = None,
        params: dict[str, np.ndarray] | None = None,
    ):
        self.alphabet = alphabet
        self.config = config or ModelConfig()
        if params is None:
            params = init_params(
                self.config.layers,
                self.config.hidden,
                self.config.input_dim,
                alphabet.size,
                self.config.seed,
            )
        self.params = params
        self._check_shapes()

    def _check_shapes(self):
        cfg = self.config
        d_in = cfg.input_dim
        for layer in range(cfg.layers):
            for d in ("fwd", "bwd"):
                W = self.params[f"l{layer}_{d}_W"]
                if W.shape != (4 * cfg.hidden, d_in):
                    raise ModelError(f"bad shape for l{layer}_{d}_W: {W.shape}")
            d_in = 2 * cfg.hidden
        if self.params["proj_W"].shape != (d_in, self.alphabet.size):
            raise ModelError(
                f"projection shape {self.params['proj_W'].shape} does not match "
                f"alphabet size {self.alphabet.size}"
            )

    # -- forward / backward ------------------------------------------------

    def forward(self, frames: np.ndarray):
        """frames (T, input_dim) -> (logits (T, C), cache)."""
        if frames.ndim != 2 or frames.shape[1] != self.config.input_dim:
            raise ModelError(
                f"expected (T, {self.config.input_dim}) frames, got {frames.shape}"
            )
        if len(frames) == 0:
            raise ModelError("empty frame sequence")
        x = np.asarray(frames, dtype=np.float64) * self.config.input_scale
        layer_caches = []
        for layer in range(self.config.layers):
            hf, cache_f = lstm_direction_forward(
                self.params[f"l{layer}_fwd_W"],
                self.params[f"l{layer}_fwd_R"],
                self.params[f"l{layer}_fwd_b"],
                x,
            )
            hb_rev, cache_b = lstm_direction_forward(
                self.params[f"l{layer}_bwd_W"],
                self.params[f"l{layer}_bwd_R"],
                self.params[f"l{layer}_bwd_b"],
                x[::-1],
            )
            hb = hb_rev[::-1]
            layer_caches.append((cache_f, cache_b))
            x = np.concatenate([hf, hb], axis=1)
        logits = x @ self.params["proj_W"] + self.params["proj_b"]
        return logits, {"layers": layer_caches, "top": x}

    def backward(self, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        grads: dict[str, np.ndarray] = {}
        top = cache["top"]
        grads["proj_W"] = top.T @ dlogits
        grads["proj_b"] = dlogits.sum(axis=0)
        dx = dlogits @ self.params["proj_W"].T
        H = self.config.hidden
        for layer in range(self.config.layers - 1, -1, -1):
            cache_f, cache_b = cache["layers"][layer]
            dW_f, dR_f, db_f, dx_f = lstm_direction_backward(cache_f, dx[:, :H])
            dW_b, dR_b, db_b, dx_b_rev = lstm_direction_backward(
                cache_b, dx[:, H:][::-1]
            )
            grads[f"l{layer}_fwd_W"] = dW_f
            grads[f"l{layer}_fwd_R"] = dR_f
            grads[f"l{layer}_fwd_b"] = db_f
            grads[f"l{layer}_bwd_W"] = dW_b
            grads[f"l{layer}_bwd_R"] = dR_b
            grads[f"l{layer}_bwd_b"] = db_b
            dx = dx_f + dx_b_rev[::-1]
        return grads

    # -- inference -----------------------------------------------------------

    def distributions(self, feats: FeatureSequence) -> DistributionSequence:
        logits, _ = self.forward(feats.frames)
        return DistributionSequence(logits, self.alphabet)

    def distributions_for(
        self, sample: InkSample, stroke_order: tuple[int, ...]
    ) -> DistributionSequence:
        """Classifier-protocol entry point shared with the tree connector."""
        return self.distributions(featurize_order(sample, stroke_order))

    # -- parameter plumbing --------------------------------------------------

    def param_names(self) -> list[str]:
        return sorted(self.params)

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in self.param_names()])

    def load_flat(self, flat: np.ndarray):
        total = sum(v.size for v in self.params.values())
        if len(flat) != total:
            raise ModelError(f"flat vector size mismatch: {len(flat)} != {total}")
        pos = 0
        for k in self.param_names():
            n = self.params[k].size
            self.params[k] = flat[pos : pos + n].reshape(self.params[k].shape).copy()
            pos += n

    def clone_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def params_digest(self) -> str:
        h = hashlib.sha256()
        for k in self.param_names():
            h.update(k.encode())
            h.update(np.ascontiguousarray(self.params[k]).tobytes())
        return h.hexdigest()


# -- checkpoints -----------------------------------------------------------


def save_checkpoint(model: BlstmModel, path: str | Path):
    """Write a byte-deterministic npz-style container (fixed zip timestamps)."""
    meta = {
        "v": CHECKPOINT_VERSION,
        "layers": model.config.layers,
        "hidden": model.config.hidden,
        "input_dim": model.config.input_dim,
        "seed": model.config.seed,
        "input_scale": model.config.input_scale,
        "spacing": model.config.spacing,
        "alphabet_symbols": list(model.alphabet.symbols),
        "alphabet_hash": model.alphabet.digest(),
        "params_digest": model.params_digest(),
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        info = zipfile.ZipInfo("meta.json", date_time=(1980, 1, 1, 0, 0, 0))
        zf.writestr(info, json.dumps(meta, sort_keys=True))
        for k in model.param_names():
            buf = io.BytesIO()
            np.lib.format.write_array(buf, model.params[k], allow_pickle=False)
            info = zipfile.ZipInfo(f"{k}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def load_checkpoint(path: str | Path) -> BlstmModel:
    try:
        with zipfile.ZipFile(path, "r") as zf:
            meta = json.loads(zf.read("meta.json"))
            if meta.get("v") != CHECKPOINT_VERSION:
                raise ModelError(f"unsupported checkpoint version {meta.get('v')!r}")
            alphabet = LabelAlphabet(symbols=tuple(meta["alphabet_symbols"]))
            if alphabet.digest() != meta["alphabet_hash"]:
                raise ModelError(
                    "alphabet hash mismatch: checkpoint was built against a "
                    "different label inventory"
                )
            params = {}
            for name in zf.namelist():
                if name.endswith(".npy"):
                    buf = io.BytesIO(zf.read(name))
                    params[name[:-4]] = np.lib.format.read_array(buf, allow_pickle=False)
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as exc:
        raise ModelError(f"corrupted checkpoint: {exc}") from exc
    config = ModelConfig(
        layers=meta["layers"],
        hidden=meta["hidden"],
        input_dim=meta["input_dim"],
        seed=meta["seed"],
        input_scale=meta.get("input_scale", 1.0),
        spacing=meta.get("spacing", RESAMPLE_SPACING),
    )
    model = BlstmModel(alphabet=alphabet, config=config, params=params)
    if model.params_digest() != meta["params_digest"]:
        raise ModelError("corrupted checkpoint: parameter digest mismatch")
    return model
