"""Tree reconstruction: cut the 1D SRT at NoRel, sort, reconnect.

The classifier's sequential output is split into sub-trees wherever two
consecutive symbols have no relation. Fragments are sorted by bounding
box (left-of first, then above, then by x) and then reattached: for
each fragment we ask the classifier to score a junction between every
candidate node (no Right child yet) and the next fragment, falling back
to every other fragment when the adjacent one does not fit. Fragments
that never connect are dropped from the output and reported.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cmp_to_key

from .alphabet import BLANK, NOREL
from .ink import InkSample, featurize_order
from .model.decode import OneDSrt, recognize_1d
from .srt import Bbox, Srt, SrtEdge, SrtNode, merge_bboxes

logger = logging.getLogger(__name__)


class TreeBuildError(ValueError):
    pass


@dataclass
class SubSrt:
    tree: Srt
    bbox: Bbox
    stuck: bool = False


@dataclass(frozen=True)
class ConnectionScore:
    candidate_node: str
    target: int
    relation: str
    probability: float
    norel_probability: float
    blank_probability: float


@dataclass
class ConnectOutcome:
    tree: Srt
    dropped: list[SubSrt]
    trace: list[dict]


def _node_bbox(ink: InkSample, stroke_ids) -> Bbox:
    xs = [p[0] for sid in stroke_ids for p in ink.strokes[sid].points]
    ys = [p[1] for sid in stroke_ids for p in ink.strokes[sid].points]
    return (min(xs), min(ys), max(xs), max(ys))


def cut_at_norel(oned: OneDSrt, ink: InkSample) -> list[SubSrt]:
    """Split at NoRel; each maximal run becomes a parent->child chain."""
    if not oned.symbols:
        raise TreeBuildError("empty 1D SRT")
    subs: list[SubSrt] = []
    run_nodes: list[SrtNode] = []
    run_edges: list[SrtEdge] = []

    def flush():
        if run_nodes:
            tree = Srt(tuple(run_nodes), tuple(run_edges), run_nodes[0].id)
            subs.append(SubSrt(tree, merge_bboxes(n.bbox for n in run_nodes)))
            run_nodes.clear()
            run_edges.clear()

    for i, sym in enumerate(oned.symbols):
        if i and oned.relations[i - 1] == NOREL:
            flush()
        strokes = tuple(range(sym.span[0], sym.span[1] + 1))
        node = SrtNode(f"n{i}", sym.label, strokes, _node_bbox(ink, strokes))
        if run_nodes and i:
            run_edges.append(SrtEdge(run_nodes[-1].id, node.id, oned.relations[i - 1]))
        run_nodes.append(node)
    flush()
    return subs


def _sub_cmp(a: SubSrt, b: SubSrt) -> int:
    # S-rule 1: strictly left wins; S-rule 2: strictly above (y grows down);
    # S-rule 3: order along the x axis.
    if a.bbox[2] < b.bbox[0]:
        return -1
    if b.bbox[2] < a.bbox[0]:
        return 1
    if a.bbox[3] < b.bbox[1]:
        return -1
    if b.bbox[3] < a.bbox[1]:
        return 1
    if a.bbox[0] < b.bbox[0]:
        return -1
    if a.bbox[0] > b.bbox[0]:
        return 1
    return 0


def sort_subtrees(subs: list[SubSrt]) -> list[SubSrt]:
    return sorted(subs, key=cmp_to_key(_sub_cmp))


def candidate_nodes(sub: SubSrt) -> list[SrtNode]:
    """Nodes without an outgoing Right edge, in writing order."""
    taken = {e.parent for e in sub.tree.edges if e.relation == "Right"}
    return [n for n in sub.tree.writing_sorted_nodes() if n.id not in taken]


def _preorder_strokes(tree: Srt) -> tuple[int, ...]:
    order: list[int] = []

    def visit(node_id: str):
        order.extend(tree.node(node_id).stroke_ids)
        for e in tree.children(node_id):
            visit(e.child)

    visit(tree.root)
    return tuple(order)


def score_connection(
    classifier, source_node: SrtNode, target: SubSrt, ink: InkSample, target_index: int = -1
) -> ConnectionScore:
    """Classifier verdict for attaching `target` under `source_node`.

    A synthetic sequence (source strokes, junction off-stroke, target
    strokes in tree order) is scored; the junction frame's relation
    partition decides.
    """
    if not source_node.stroke_ids or target.tree.is_empty:
        raise TreeBuildError("empty stroke sets in connection query")
    stroke_order = source_node.stroke_ids + _preorder_strokes(target.tree)
    dists = classifier.distributions_for(ink, stroke_order)
    feats = featurize_order(ink, stroke_order)
    junction_gap = len(source_node.stroke_ids)
    junction_t = next(t for g, t in feats.off_positions() if g == junction_gap)
    frame = dists[junction_t]
    alphabet = dists.alphabet
    rel = frame.p_rel
    best = int(rel.argmax())
    return ConnectionScore(
        candidate_node=source_node.id,
        target=target_index,
        relation=alphabet.label_of(alphabet.relation_ids.start + best),
        probability=float(rel[best]),
        norel_probability=float(rel[-1]),
        blank_probability=frame.p_blank,
    )


def _slot_taken(tree: Srt, node_id: str, relation: str) -> bool:
    return tree.child_by_relation(node_id, relation) is not None


def _best_valid(classifier, src: SubSrt, target: SubSrt, target_index: int, ink, trace):
    best: ConnectionScore | None = None
    for cand in candidate_nodes(src):
        score = score_connection(classifier, cand, target, ink, target_index)
        trace.append(
            {
                "source_node": score.candidate_node,
                "target": target_index,
                "relation": score.relation,
                "probability": round(score.probability, 6),
            }
        )
        if score.relation in (NOREL, BLANK):
            continue
        if score.probability < score.blank_probability:
            continue
        if score.probability < score.norel_probability:
            continue
        if _slot_taken(src.tree, cand.id, score.relation):
            continue
        if best is None or score.probability > best.probability:
            best = score
    return best


def _attach(src: SubSrt, target: SubSrt, score: ConnectionScore):
    merged = Srt(
        nodes=src.tree.nodes + target.tree.nodes,
        edges=src.tree.edges
        + target.tree.edges
        + (SrtEdge(score.candidate_node, target.tree.root, score.relation),),
        root=src.tree.root,
    )
    src.tree = merged
    src.bbox = merge_bboxes([src.bbox, target.bbox])


def connect_detailed(classifier, subs: list[SubSrt], ink: InkSample) -> ConnectOutcome:
    """Algorithm of repeated local/global connection until one tree remains.

    Every sub-tree takes a turn as the source: local connection targets
    the next fragment in sorted order, global connection the best other
    fragment. A pass with no progress terminates the loop; leftover
    fragments are dropped with a warning.
    """
    if not subs:
        raise TreeBuildError("no sub-SRTs to connect")
    trace: list[dict] = []
    items = list(subs)
    while len(items) > 1 and not all(s.stuck for s in items):
        progressed = False
        for i, src in enumerate(items):
            local_target = i + 1 if i + 1 < len(items) else None
            if local_target is not None:
                score = _best_valid(
                    classifier, src, items[local_target], local_target, ink, trace
                )
                if score is not None:
                    _attach(src, items[local_target], score)
                    del items[local_target]
                    progressed = True
                    break
            best: tuple[int, ConnectionScore] | None = None
            for k in range(len(items)):
                if k == i or k == local_target:
                    continue
                score = _best_valid(classifier, src, items[k], k, ink, trace)
                if score is not None and (
                    best is None or score.probability > best[1].probability
                ):
                    best = (k, score)
            if best is not None:
                k, score = best
                _attach(src, items[k], score)
                del items[k]
                progressed = True
                break
            src.stuck = True
        if not progressed:
            break
    dropped = items[1:]
    if dropped:
        labels = [[n.label for n in d.tree.nodes] for d in dropped]
        logger.warning("dropping %d unconnected fragment(s): %s", len(dropped), labels)
    return ConnectOutcome(tree=items[0].tree, dropped=dropped, trace=trace)


def connect(classifier, subs: list[SubSrt], ink: InkSample) -> Srt:
    return connect_detailed(classifier, subs, ink).tree


@dataclass
class RecognitionOutcome:
    srt: Srt
    oned: OneDSrt
    dropped: list[SubSrt] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)


def recognize_detailed(classifier, sample: InkSample) -> RecognitionOutcome:
    """Full pipeline on a normalized sample: 1D decode, cut, sort, connect."""
    oned = recognize_1d(classifier, sample)
    subs = sort_subtrees(cut_at_norel(oned, sample))
    if len(subs) == 1:
        return RecognitionOutcome(srt=subs[0].tree, oned=oned)
    outcome = connect_detailed(classifier, subs, sample)
    return RecognitionOutcome(
        srt=outcome.tree, oned=oned, dropped=outcome.dropped, trace=outcome.trace
    )


def recognize(classifier, sample: InkSample) -> Srt:
    return recognize_detailed(classifier, sample).srt
