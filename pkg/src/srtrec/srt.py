"""Symbol relation tree: data model, derived paths, reconstruction.

An SRT node is a recognized symbol bound to the strokes that wrote it;
edges carry one of the six spatial relations. Derived paths linearize
the tree as alternating symbol/relation tokens; NoRel marks consecutive
symbols in a traversal that are not joined by an edge. Enumerating the
root-to-leaf paths (and merging traversal paths) is lossless: the tree
can be rebuilt from them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .alphabet import NOREL, RELATIONS

Bbox = tuple[float, float, float, float]  # min_x, min_y, max_x, max_y (y grows downward)

EMPTY_BBOX: Bbox = (0.0, 0.0, 0.0, 0.0)


class SrtError(ValueError):
    pass


def merge_bboxes(boxes) -> Bbox:
    boxes = list(boxes)
    if not boxes:
        return EMPTY_BBOX
    return (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )


@dataclass(frozen=True)
class SrtNode:
    id: str
    label: str
    stroke_ids: tuple[int, ...]
    bbox: Bbox = field(default=EMPTY_BBOX, compare=False)

    def __post_init__(self):
        if not self.stroke_ids:
            raise SrtError(f"node {self.id!r} has no strokes")
        if any(b >= a for a, b in zip(self.stroke_ids[1:], self.stroke_ids)):
            raise SrtError(f"node {self.id!r} stroke ids not strictly increasing")

    @property
    def min_stroke(self) -> int:
        return self.stroke_ids[0]


@dataclass(frozen=True)
class SrtEdge:
    parent: str
    child: str
    relation: str

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise SrtError(f"bad edge relation {self.relation!r}")


@dataclass(frozen=True, eq=False)
class Srt:
    """Rooted tree of symbols; empty trees are permitted as a degenerate value.

    Equality is semantic: node ids are handles, so two trees compare
    equal when their (stroke set, label) nodes, stroke-set-keyed edges
    and root stroke set agree.
    """

    nodes: tuple[SrtNode, ...]
    edges: tuple[SrtEdge, ...]
    root: str | None

    def _canonical(self):
        strokes_of = {n.id: n.stroke_ids for n in self.nodes}
        return (
            tuple((n.stroke_ids, n.label) for n in self.nodes),
            tuple(
                sorted(
                    (strokes_of[e.parent], strokes_of[e.child], e.relation)
                    for e in self.edges
                )
            ),
            strokes_of[self.root] if self.root is not None else None,
        )

    def __eq__(self, other):
        if not isinstance(other, Srt):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self):
        return hash(self._canonical())

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes, key=lambda n: n.stroke_ids))
        edges = tuple(sorted(self.edges, key=lambda e: (e.parent, e.relation, e.child)))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        self._validate()

    def _validate(self):
        if not self.nodes:
            if self.edges or self.root is not None:
                raise SrtError("empty SRT cannot have edges or a root")
            return
        ids = [n.id for n in self.nodes]
        by_id = dict(zip(ids, self.nodes))
        if len(by_id) != len(ids):
            raise SrtError("duplicate node ids")
        if self.root not in by_id:
            raise SrtError(f"root {self.root!r} is not a node")
        seen_strokes: set[int] = set()
        for n in self.nodes:
            if seen_strokes & set(n.stroke_ids):
                raise SrtError(f"node {n.id!r} shares strokes with another node")
            seen_strokes.update(n.stroke_ids)
        parents: dict[str, str] = {}
        slots: set[tuple[str, str]] = set()
        for e in self.edges:
            if e.parent not in by_id or e.child not in by_id:
                raise SrtError(f"edge {e} references unknown node")
            if e.child in parents:
                raise SrtError(f"node {e.child!r} has two parents")
            if e.child == self.root:
                raise SrtError("root cannot have a parent")
            parents[e.child] = e.parent
            slot = (e.parent, e.relation)
            if slot in slots:
                raise SrtError(f"duplicate relation slot {slot}")
            slots.add(slot)
        if len(self.edges) != len(self.nodes) - 1:
            raise SrtError("edges do not form a spanning tree")
        reached = {self.root}
        frontier = [self.root]
        child_map = self._child_map(self.edges)
        while frontier:
            cur = frontier.pop()
            for e in child_map.get(cur, ()):
                if e.child in reached:
                    raise SrtError("cycle detected")
                reached.add(e.child)
                frontier.append(e.child)
        if len(reached) != len(self.nodes):
            raise SrtError("tree is disconnected")

    @staticmethod
    def _child_map(edges) -> dict[str, list[SrtEdge]]:
        out: dict[str, list[SrtEdge]] = {}
        for e in edges:
            out.setdefault(e.parent, []).append(e)
        return out

    # -- queries -----------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return not self.nodes

    def node(self, node_id: str) -> SrtNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise SrtError(f"no node {node_id!r}")

    def children(self, node_id: str) -> tuple[SrtEdge, ...]:
        """Outgoing edges, ordered by the child's first stroke."""
        kids = [e for e in self.edges if e.parent == node_id]
        kids.sort(key=lambda e: self.node(e.child).min_stroke)
        return tuple(kids)

    def parent_edge(self, node_id: str) -> SrtEdge | None:
        for e in self.edges:
            if e.child == node_id:
                return e
        return None

    def child_by_relation(self, node_id: str, relation: str) -> str | None:
        for e in self.edges:
            if e.parent == node_id and e.relation == relation:
                return e.child
        return None

    def leaves(self) -> tuple[SrtNode, ...]:
        parents = {e.parent for e in self.edges}
        return tuple(n for n in self.nodes if n.id not in parents)

    def writing_sorted_nodes(self) -> tuple[SrtNode, ...]:
        return tuple(sorted(self.nodes, key=lambda n: n.min_stroke))

    def subtree_node_ids(self, node_id: str) -> set[str]:
        out = {node_id}
        frontier = [node_id]
        while frontier:
            cur = frontier.pop()
            for e in self.children(cur):
                out.add(e.child)
                frontier.append(e.child)
        return out

    def stroke_ids(self) -> tuple[int, ...]:
        out: list[int] = []
        for n in self.nodes:
            out.extend(n.stroke_ids)
        return tuple(sorted(out))

    @property
    def bbox(self) -> Bbox:
        return merge_bboxes(n.bbox for n in self.nodes)

    def edge_between(self, parent_id: str, child_id: str) -> SrtEdge | None:
        for e in self.edges:
            if e.parent == parent_id and e.child == child_id:
                return e
        return None


EMPTY_SRT = Srt(nodes=(), edges=(), root=None)


@dataclass(frozen=True)
class DerivedPath:
    """Alternating [symbol, relation, ..., symbol] tokens over visited nodes."""

    nodes: tuple[SrtNode, ...]
    tokens: tuple[str, ...]

    def __post_init__(self):
        if not self.nodes:
            raise SrtError("derived path cannot be empty")
        if len(self.tokens) != 2 * len(self.nodes) - 1:
            raise SrtError("token/node count mismatch")
        for i, tok in enumerate(self.tokens):
            if i % 2 == 0:
                if tok != self.nodes[i // 2].label:
                    raise SrtError(f"token {i} does not match node label")
            elif tok not in RELATIONS and tok != NOREL:
                raise SrtError(f"token {i} is not a relation: {tok!r}")

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    @property
    def symbols(self) -> tuple[str, ...]:
        return self.tokens[0::2]

    @property
    def relations(self) -> tuple[str, ...]:
        return self.tokens[1::2]


def _tokens_for_sequence(srt: Srt, seq: list[SrtNode]) -> tuple[str, ...]:
    """Interleave labels with edge relations; NoRel when the earlier-written
    node is not the parent of the next one."""
    tokens: list[str] = [seq[0].label]
    for prev, cur in zip(seq, seq[1:]):
        edge = srt.edge_between(prev.id, cur.id)
        tokens.append(edge.relation if edge else NOREL)
        tokens.append(cur.label)
    return tuple(tokens)


def derived_paths_from_root(srt: Srt) -> list[DerivedPath]:
    """All root-to-leaf paths; relations are the edge labels, never NoRel."""
    if srt.is_empty:
        raise SrtError("empty SRT")
    paths: list[DerivedPath] = []

    def walk(node_id: str, nodes: list[SrtNode], tokens: list[str]):
        kids = srt.children(node_id)
        if not kids:
            paths.append(DerivedPath(tuple(nodes), tuple(tokens)))
            return
        for e in kids:
            child = srt.node(e.child)
            walk(e.child, nodes + [child], tokens + [e.relation, child.label])

    root = srt.node(srt.root)
    walk(srt.root, [root], [root.label])
    return paths


def writing_order_path(srt: Srt) -> DerivedPath:
    """Single path over all nodes sorted by first stroke id."""
    if srt.is_empty:
        raise SrtError("empty SRT")
    seq = list(srt.writing_sorted_nodes())
    firsts = [n.min_stroke for n in seq]
    if len(set(firsts)) != len(firsts):
        raise SrtError("overlapping symbol segmentation")
    return DerivedPath(tuple(seq), _tokens_for_sequence(srt, seq))


def random_root_shuffle_paths(
    srt: Srt, count: int, seed: int, scope: str = "root"
) -> list[DerivedPath]:
    """Paths over all nodes with sub-tree order shuffled.

    scope="root" permutes only the sub-trees hanging off the root (each
    then traversed in writing order); scope="all" shuffles children at
    every node and traverses pre-order.
    """
    if srt.is_empty:
        raise SrtError("empty SRT")
    if scope not in ("root", "all"):
        raise SrtError(f"bad shuffle scope {scope!r}")
    rng = random.Random(seed)
    out: list[DerivedPath] = []
    for _ in range(max(0, count)):
        if scope == "root":
            seq = [srt.node(srt.root)]
            subtrees = list(srt.children(srt.root))
            rng.shuffle(subtrees)
            for e in subtrees:
                ids = srt.subtree_node_ids(e.child)
                members = [n for n in srt.writing_sorted_nodes() if n.id in ids]
                seq.extend(members)
        else:
            seq = []

            def visit(node_id: str):
                seq.append(srt.node(node_id))
                kids = list(srt.children(node_id))
                rng.shuffle(kids)
                for e in kids:
                    visit(e.child)

            visit(srt.root)
        out.append(DerivedPath(tuple(seq), _tokens_for_sequence(srt, seq)))
    return out


def reconstruct_from_paths(paths: list[DerivedPath]) -> Srt:
    """Union the nodes and non-NoRel edges of the paths back into a tree.

    Node identity is the stroke id set; labels and relations must agree
    across paths.
    """
    if not paths:
        raise SrtError("empty SRT")
    nodes: dict[tuple[int, ...], SrtNode] = {}
    for p in paths:
        for n in p.nodes:
            prev = nodes.get(n.stroke_ids)
            if prev is None:
                nodes[n.stroke_ids] = n
            elif prev.label != n.label:
                raise SrtError(
                    f"inconsistent paths: strokes {n.stroke_ids} labeled "
                    f"{prev.label!r} and {n.label!r}"
                )
    edges: dict[tuple[tuple[int, ...], tuple[int, ...]], str] = {}
    for p in paths:
        for i, rel in enumerate(p.relations):
            if rel == NOREL:
                continue
            a, b = p.nodes[i], p.nodes[i + 1]
            key = (a.stroke_ids, b.stroke_ids)
            if key in edges and edges[key] != rel:
                raise SrtError(
                    f"inconsistent paths: relation {edges[key]!r} vs {rel!r} "
                    f"for {key}"
                )
            edges[key] = rel
    id_of = {k: n.id for k, n in nodes.items()}
    children = {k for (_, k) in edges}
    roots = [k for k in nodes if k not in children]
    if len(roots) != 1:
        raise SrtError("paths do not cover a tree")
    try:
        return Srt(
            nodes=tuple(nodes.values()),
            edges=tuple(
                SrtEdge(id_of[pk], id_of[ck], rel) for (pk, ck), rel in edges.items()
            ),
            root=id_of[roots[0]],
        )
    except SrtError as exc:
        raise SrtError(f"paths do not cover a tree: {exc}") from exc
