"""CTC loss by log-space forward-backward, with gradients w.r.t. logits.

Alignment marginalization follows Graves: the target is expanded with
blanks (blank, y1, blank, y2, ..., blank) and alpha/beta recursions sum
over all monotone label paths that collapse to the target. The gradient
is expressed directly against pre-softmax logits, which is what the
network backward pass wants.
"""

from __future__ import annotations

import numpy as np


class CtcError(ValueError):
    pass


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _expand_target(target, blank: int):
    ext = [blank]
    for y in target:
        ext.append(int(y))
        ext.append(blank)
    return np.array(ext, dtype=np.int64)


def min_frames_for(target) -> int:
    """Shortest frame count that can emit the target under CTC collapse rules."""
    target = list(target)
    repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
    return len(target) + repeats


def ctc_forward_backward(
    log_probs: np.ndarray, target, blank: int
) -> tuple[float, np.ndarray]:
    """Return (-log P(target | log_probs), dLoss/dlogits).

    log_probs: (T, C) log-softmax output. target: label ids, blank-free.
    """
    T, C = log_probs.shape
    target = [int(y) for y in target]
    for y in target:
        if not 0 <= y < C or y == blank:
            raise CtcError(f"bad target label id {y}")
    need = min_frames_for(target)
    if T < need:
        raise CtcError(
            f"target too long for {T} frames (needs at least {need})"
        )

    ext = _expand_target(target, blank)
    S = len(ext)
    neg_inf = -np.inf

    # alpha[t, s]: log prob of prefixes ending in state s at time t
    alpha = np.full((T, S), neg_inf)
    alpha[0, 0] = log_probs[0, ext[0]]
    if S > 1:
        alpha[0, 1] = log_probs[0, ext[1]]
    # allow skipping a blank between distinct labels
    can_skip = np.zeros(S, dtype=bool)
    can_skip[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])
    for t in range(1, T):
        prev = alpha[t - 1]
        stay = prev
        step = np.full(S, neg_inf)
        step[1:] = prev[:-1]
        skip = np.full(S, neg_inf)
        skip[2:] = np.where(can_skip[2:], prev[:-2], neg_inf)
        alpha[t] = np.logaddexp(np.logaddexp(stay, step), skip) + log_probs[t, ext]

    if S > 1:
        log_p = np.logaddexp(alpha[T - 1, S - 1], alpha[T - 1, S - 2])
    else:
        log_p = alpha[T - 1, S - 1]
    if not np.isfinite(log_p):
        raise CtcError("target has zero probability under the given frames")

    # beta[t, s]: log prob of completing from state s at time t (emission at t included)
    beta = np.full((T, S), neg_inf)
    beta[T - 1, S - 1] = log_probs[T - 1, ext[S - 1]]
    if S > 1:
        beta[T - 1, S - 2] = log_probs[T - 1, ext[S - 2]]
    for t in range(T - 2, -1, -1):
        nxt = beta[t + 1]
        stay = nxt
        step = np.full(S, neg_inf)
        step[:-1] = nxt[1:]
        skip = np.full(S, neg_inf)
        skip[:-2] = np.where(can_skip[2:], nxt[2:], neg_inf)
        beta[t] = np.logaddexp(np.logaddexp(stay, step), skip) + log_probs[t, ext]

    # gamma[t, k] = logsum over states s with label k of alpha+beta
    ab = alpha + beta  # counts log_probs[t, ext[s]] twice
    grad = np.exp(log_probs)  # softmax probabilities
    for t in range(T):
        row = ab[t]
        finite = np.isfinite(row)
        if not finite.any():
            continue
        m = row[finite].max()
        contrib = np.zeros(C)
        np.add.at(contrib, ext[finite], np.exp(row[finite] - m))
        with np.errstate(divide="ignore"):
            log_contrib = np.where(contrib > 0, np.log(contrib) + m, neg_inf)
        occ = np.exp(log_contrib - log_probs[t] - log_p)
        grad[t] -= occ
    return float(-log_p), grad


def ctc_loss(dists, target) -> tuple[float, np.ndarray]:
    """Loss and dlogits for a model output (DistributionSequence)."""
    return ctc_forward_backward(dists.log_probs, list(target), dists.alphabet.blank_id)


def best_path_collapse(label_ids, blank: int) -> list[int]:
    """CTC collapse: merge repeats, drop blanks."""
    out: list[int] = []
    prev = None
    for y in label_ids:
        if y != blank and y != prev:
            out.append(int(y))
        prev = y
    return out
