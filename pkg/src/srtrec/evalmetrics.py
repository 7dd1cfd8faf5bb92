"""Label-graph scoring: segmentation, classification, relations, ExpRate.

A predicted symbol counts as a segment match when its stroke set equals
a ground-truth symbol's exactly, and as a segment+class match when the
labels agree too. A relation counts only when both endpoint symbols are
segment+class matches and the edge label is equal. Expression errors
are the symmetric label-graph difference: node label errors plus
missing/spurious nodes plus edge label errors plus missing/spurious
edges, nodes and edges weighted equally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .alphabet import NOREL, RELATIONS
from .srt import Srt

REPORT_VERSION = 1
ERROR_WEIGHTING = "node and edge label errors weighted equally"

EDGE_CONFUSION_LABELS = ("*",) + tuple(sorted(RELATIONS)) + (NOREL,)


@dataclass(frozen=True)
class PairCounts:
    matches: int
    truth_count: int
    pred_count: int

    @property
    def recall(self) -> float:
        return self.matches / self.truth_count if self.truth_count else 0.0

    @property
    def precision(self) -> float:
        return self.matches / self.pred_count if self.pred_count else 0.0


def _node_map(tree: Srt) -> dict[tuple[int, ...], str]:
    return {n.stroke_ids: n.label for n in tree.nodes}


def _edge_map(tree: Srt) -> dict[tuple[tuple[int, ...], tuple[int, ...]], str]:
    idx = {n.id: n.stroke_ids for n in tree.nodes}
    return {(idx[e.parent], idx[e.child]): e.relation for e in tree.edges}


def score_symbols(pred: Srt, truth: Srt) -> tuple[PairCounts, PairCounts]:
    """(segment counts, segment+class counts)."""
    p, t = _node_map(pred), _node_map(truth)
    seg = sum(1 for k in p if k in t)
    seg_class = sum(1 for k, label in p.items() if t.get(k) == label)
    return (
        PairCounts(seg, len(t), len(p)),
        PairCounts(seg_class, len(t), len(p)),
    )


def score_relations(pred: Srt, truth: Srt) -> PairCounts:
    p_nodes, t_nodes = _node_map(pred), _node_map(truth)
    ok_nodes = {k for k, label in p_nodes.items() if t_nodes.get(k) == label}
    p_edges, t_edges = _edge_map(pred), _edge_map(truth)
    matches = sum(
        1
        for (a, b), rel in p_edges.items()
        if a in ok_nodes and b in ok_nodes and t_edges.get((a, b)) == rel
    )
    return PairCounts(matches, len(t_edges), len(p_edges))


def expression_errors(pred: Srt, truth: Srt) -> int:
    p_nodes, t_nodes = _node_map(pred), _node_map(truth)
    errors = 0
    for k, label in p_nodes.items():
        if k not in t_nodes:
            errors += 1  # spurious node
        elif t_nodes[k] != label:
            errors += 1  # node label error
    errors += sum(1 for k in t_nodes if k not in p_nodes)  # missing nodes
    p_edges, t_edges = _edge_map(pred), _edge_map(truth)
    for k, rel in p_edges.items():
        if k not in t_edges:
            errors += 1
        elif t_edges[k] != rel:
            errors += 1
    errors += sum(1 for k in t_edges if k not in p_edges)
    return errors


@dataclass(frozen=True)
class ExpRateReport:
    correct: float
    le1: float
    le2: float
    le3: float
    n_pairs: int


def exprate(pairs: list[tuple[Srt, Srt]]) -> ExpRateReport:
    if not pairs:
        return ExpRateReport(0.0, 0.0, 0.0, 0.0, 0)
    counts = [expression_errors(pred, truth) for pred, truth in pairs]
    n = len(counts)

    def frac(k):
        return sum(1 for c in counts if c <= k) / n

    return ExpRateReport(frac(0), frac(1), frac(2), frac(3), n)


def confusion_tables(pairs: list[tuple[Srt, Srt]]):
    """(node_table, edge_table), keyed (output_label, truth_label).

    Node cells count stroke-set-matched symbols (correct ones on the
    diagonal). Edge cells count ordered stroke pairs; '*' marks the
    within-symbol segmentation edges.
    """
    node_table: dict[tuple[str, str], int] = {}
    edge_table: dict[tuple[str, str], int] = {}
    for pred, truth in pairs:
        p_nodes, t_nodes = _node_map(pred), _node_map(truth)
        for k, label in p_nodes.items():
            if k in t_nodes:
                key = (label, t_nodes[k])
                node_table[key] = node_table.get(key, 0) + 1
        strokes = truth.stroke_ids()
        p_owner = _PairLabeler(pred)
        t_owner = _PairLabeler(truth)
        for a in strokes:
            for b in strokes:
                if a == b:
                    continue
                key = (p_owner.label(a, b), t_owner.label(a, b))
                edge_table[key] = edge_table.get(key, 0) + 1
    return node_table, edge_table


class _PairLabeler:
    """Ordered stroke-pair labels: '*' inside a symbol, the relation for
    parent->child stroke pairs, NoRel otherwise."""

    def __init__(self, tree: Srt):
        self.owner: dict[int, str] = {}
        for n in tree.nodes:
            for sid in n.stroke_ids:
                self.owner[sid] = n.id
        self.edges = {(e.parent, e.child): e.relation for e in tree.edges}

    def label(self, a: int, b: int) -> str:
        na, nb = self.owner.get(a), self.owner.get(b)
        if na is None or nb is None:
            return NOREL
        if na == nb:
            return "*"
        return self.edges.get((na, nb), NOREL)


@dataclass
class EvalReport:
    segments: PairCounts
    seg_class: PairCounts
    tree_relations: PairCounts
    exprate: ExpRateReport
    node_confusions: dict = field(default_factory=dict)
    edge_confusions: dict = field(default_factory=dict)
    excluded: int = 0

    def to_json_dict(self) -> dict:
        def pc(c: PairCounts):
            return {
                "recall": c.recall,
                "precision": c.precision,
                "matches": c.matches,
                "truth_count": c.truth_count,
                "pred_count": c.pred_count,
            }

        return {
            "v": REPORT_VERSION,
            "error_weighting": ERROR_WEIGHTING,
            "segments": pc(self.segments),
            "seg_class": pc(self.seg_class),
            "tree_relations": pc(self.tree_relations),
            "exprate": {
                "correct": self.exprate.correct,
                "le1": self.exprate.le1,
                "le2": self.exprate.le2,
                "le3": self.exprate.le3,
                "n_pairs": self.exprate.n_pairs,
            },
            "node_confusions": [
                {"output": o, "truth": t, "count": c}
                for (o, t), c in sorted(self.node_confusions.items())
            ],
            "edge_confusions": [
                {"output": o, "truth": t, "count": c}
                for (o, t), c in sorted(self.edge_confusions.items())
            ],
            "excluded": self.excluded,
        }


def evaluate_pairs(pairs: list[tuple[Srt, Srt]], excluded: int = 0) -> EvalReport:
    seg_m = seg_t = seg_p = cls_m = rel_m = rel_t = rel_p = 0
    for pred, truth in pairs:
        seg, seg_class = score_symbols(pred, truth)
        rel = score_relations(pred, truth)
        seg_m += seg.matches
        cls_m += seg_class.matches
        seg_t += seg.truth_count
        seg_p += seg.pred_count
        rel_m += rel.matches
        rel_t += rel.truth_count
        rel_p += rel.pred_count
    node_table, edge_table = confusion_tables(pairs)
    return EvalReport(
        segments=PairCounts(seg_m, seg_t, seg_p),
        seg_class=PairCounts(cls_m, seg_t, seg_p),
        tree_relations=PairCounts(rel_m, rel_t, rel_p),
        exprate=exprate(pairs),
        node_confusions=node_table,
        edge_confusions=edge_table,
        excluded=excluded,
    )


def report_text(report: EvalReport, system: str = "ours") -> str:
    """Aligned tables mirroring the symbol-level and expression-level layouts."""
    lines = [f"# evaluation report ({ERROR_WEIGHTING})"]
    header = (
        f"{'System':<12}{'Segments (%)':>24}{'Segment + Class (%)':>26}"
        f"{'Tree relations (%)':>26}"
    )
    sub = f"{'':<12}{'Recall':>12}{'Precision':>12}{'Recall':>13}{'Precision':>13}{'Recall':>13}{'Precision':>13}"
    row = (
        f"{system:<12}"
        f"{report.segments.recall * 100:>12.2f}{report.segments.precision * 100:>12.2f}"
        f"{report.seg_class.recall * 100:>13.2f}{report.seg_class.precision * 100:>13.2f}"
        f"{report.tree_relations.recall * 100:>13.2f}{report.tree_relations.precision * 100:>13.2f}"
    )
    lines += [header, sub, row, ""]
    lines.append(f"{'System':<12}{'Correct (%)':>14}{'<=1 error':>12}{'<=2 errors':>12}{'<=3 errors':>12}")
    ex = report.exprate
    lines.append(
        f"{system:<12}{ex.correct * 100:>14.2f}{ex.le1 * 100:>12.2f}"
        f"{ex.le2 * 100:>12.2f}{ex.le3 * 100:>12.2f}"
    )
    return "\n".join(lines) + "\n"


def confusions_csv(table: dict[tuple[str, str], int]) -> str:
    lines = ["output,truth,count"]
    for (o, t), c in sorted(table.items()):
        lines.append(f"{o},{t},{c}")
    return "\n".join(lines) + "\n"


def report_json(report: EvalReport) -> str:
    return json.dumps(report.to_json_dict(), indent=2, sort_keys=True)
