"""Independent oracles and small builders shared across the test suite."""

from __future__ import annotations

import numpy as np

from srtrec.srt import Srt, SrtEdge, SrtNode


def tree(nodes, edges, root="n0") -> Srt:
    """nodes: [(id, label, stroke_ids, bbox?)], edges: [(parent, child, rel)]."""
    built = []
    for spec in nodes:
        if len(spec) == 4:
            nid, label, strokes, bbox = spec
        else:
            nid, label, strokes = spec
            first = strokes[0]
            bbox = (float(first), 0.0, float(first) + 0.8, 1.0)
        built.append(SrtNode(nid, label, tuple(strokes), bbox))
    return Srt(tuple(built), tuple(SrtEdge(*e) for e in edges), root)


def enumerate_alignments(T: int, target: list[int], blank: int):
    """Yield every length-T label path that CTC-collapses to target.

    Walks the blank-extended state machine explicitly, independent of
    the forward-backward recursion under test.
    """
    ext = [blank]
    for y in target:
        ext.extend([y, blank])
    S = len(ext)

    def walk(t, s, path):
        if t == T:
            if s >= S - 2:
                yield tuple(path)
            return
        remaining = T - t
        # prune: must still be able to reach the end states
        for nxt in (s, s + 1, s + 2):
            if nxt >= S:
                continue
            if nxt == s + 2 and (ext[nxt] == blank or ext[nxt] == ext[s]):
                continue
            min_left = (S - 1 - nxt) // 2
            if min_left > remaining - 1:
                continue
            path.append(ext[nxt])
            yield from walk(t + 1, nxt, path)
            path.pop()

    # initial states: 0 or 1
    for s0 in (0, 1):
        if s0 >= S:
            continue
        min_left = (S - 1 - s0) // 2
        if min_left > T - 1:
            continue
        yield from walk(1, s0, [ext[s0]])


def brute_force_ctc(log_probs: np.ndarray, target: list[int], blank: int) -> float:
    """-log sum over all valid alignments of the path product."""
    T = len(log_probs)
    total = -np.inf
    for path in enumerate_alignments(T, list(target), blank):
        lp = sum(log_probs[t, k] for t, k in enumerate(path))
        total = np.logaddexp(total, lp)
    return float(-total)


def relative_error(a: float, b: float, floor: float = 1e-4) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)
