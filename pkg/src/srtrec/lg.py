"""LgEval label-graph (LG) interchange format.

Objects are `O, id, label, 1.0, strokeId...` lines; relations are
`R, parentId, childId, label, 1.0`. Comments start with `#`. The format
carries no geometry, so bounding boxes are refilled from ink when one
is supplied to `from_lg`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .alphabet import RELATIONS
from .srt import EMPTY_BBOX, Srt, SrtEdge, SrtNode, merge_bboxes


class LgParseError(ValueError):
    pass


@dataclass(frozen=True)
class LgObject:
    id: str
    label: str
    stroke_ids: tuple[int, ...]


@dataclass(frozen=True)
class LgRelation:
    parent: str
    child: str
    label: str


@dataclass(frozen=True)
class LgDocument:
    objects: tuple[LgObject, ...]
    relations: tuple[LgRelation, ...]

    def to_text(self) -> str:
        lines = ["# LG v1"]
        lines.append(f"# {len(self.objects)} objects, {len(self.relations)} relations")
        for o in self.objects:
            strokes = ", ".join(str(s) for s in o.stroke_ids)
            lines.append(f"O, {o.id}, {o.label}, 1.0, {strokes}")
        for r in self.relations:
            lines.append(f"R, {r.parent}, {r.child}, {r.label}, 1.0")
        return "\n".join(lines) + "\n"


def parse_lg(text: str) -> LgDocument:
    objects: list[LgObject] = []
    relations: list[LgRelation] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        kind = fields[0]
        if kind == "O":
            if len(fields) < 5:
                raise LgParseError(f"line {lineno}: object line needs id, label, weight, strokes")
            try:
                strokes = tuple(sorted(int(f) for f in fields[4:]))
            except ValueError:
                raise LgParseError(f"line {lineno}: non-integer stroke id") from None
            objects.append(LgObject(fields[1], fields[2], strokes))
        elif kind == "R" or kind == "EO":
            if len(fields) < 5:
                raise LgParseError(f"line {lineno}: relation line needs parent, child, label, weight")
            relations.append(LgRelation(fields[1], fields[2], fields[3]))
        else:
            raise LgParseError(f"line {lineno}: unknown record kind {kind!r}")
    return LgDocument(tuple(objects), tuple(relations))


def to_lg(srt: Srt) -> LgDocument:
    objects = tuple(LgObject(n.id, n.label, n.stroke_ids) for n in srt.nodes)
    relations = tuple(LgRelation(e.parent, e.child, e.relation) for e in srt.edges)
    return LgDocument(objects, relations)


def from_lg(doc: LgDocument, strokes=None) -> Srt:
    """Rebuild an Srt; `strokes` (sequence of point lists) refills bboxes."""
    if not doc.objects:
        return Srt(nodes=(), edges=(), root=None)

    def bbox_for(stroke_ids):
        if strokes is None:
            return EMPTY_BBOX
        boxes = []
        for sid in stroke_ids:
            pts = strokes[sid]
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            boxes.append((min(xs), min(ys), max(xs), max(ys)))
        return merge_bboxes(boxes)

    nodes = tuple(
        SrtNode(o.id, o.label, o.stroke_ids, bbox_for(o.stroke_ids)) for o in doc.objects
    )
    edges = []
    for r in doc.relations:
        if r.label not in RELATIONS:
            raise LgParseError(f"unknown relation label {r.label!r}")
        edges.append(SrtEdge(r.parent, r.child, r.label))
    children = {e.child for e in edges}
    roots = [n.id for n in nodes if n.id not in children]
    if len(roots) != 1:
        raise LgParseError(f"expected one root, found {len(roots)}")
    return Srt(nodes=nodes, edges=tuple(edges), root=roots[0])
