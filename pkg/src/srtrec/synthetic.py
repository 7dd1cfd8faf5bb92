"""Synthetic expressions: layout, glyph strokes, ground-truth trees.

Expressions are declared as nested ExprSpec values; the layout engine
assigns each symbol a box (y grows downward), places children per
relation, and emits deterministic glyph polylines inside the boxes.
Writing order is pre-order with children visited Inside, Above, Below,
Sup, Sub, Right - the parent of every symbol is always written first.
Also provides random SRTs for round-trip properties and InkML export
for CLI-level tests.
"""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass
from pathlib import Path

from .ink import InkSample, Stroke
from .lg import to_lg
from .srt import Srt, SrtEdge, SrtNode, merge_bboxes

CHILD_ORDER = ("Inside", "Above", "Below", "Sup", "Sub", "Right")


@dataclass
class ExprSpec:
    label: str
    inside: "ExprSpec | None" = None
    above: "ExprSpec | None" = None
    below: "ExprSpec | None" = None
    sup: "ExprSpec | None" = None
    sub: "ExprSpec | None" = None
    right: "ExprSpec | None" = None

    def child(self, relation: str) -> "ExprSpec | None":
        return {
            "Inside": self.inside,
            "Above": self.above,
            "Below": self.below,
            "Sup": self.sup,
            "Sub": self.sub,
            "Right": self.right,
        }[relation]


def e(label: str, **kwargs) -> ExprSpec:
    return ExprSpec(label, **kwargs)


# Glyph polylines in the unit box (x right, y down). Multi-polyline
# entries become multi-stroke symbols.
GLYPHS: dict[str, list[list[tuple[float, float]]]] = {
    "-": [[(0.0, 0.5), (1.0, 0.5)]],
    "=": [[(0.0, 0.35), (1.0, 0.35)], [(0.0, 0.65), (1.0, 0.65)]],
    "+": [[(0.0, 0.5), (1.0, 0.5)], [(0.5, 0.1), (0.5, 0.9)]],
    "x": [[(0.0, 0.1), (1.0, 0.9)], [(1.0, 0.1), (0.0, 0.9)]],
    "\\int": [[(0.8, 0.05), (0.55, 0.1), (0.5, 0.4), (0.5, 0.6), (0.45, 0.9), (0.2, 0.95)]],
    "\\sqrt": [[(0.0, 0.55), (0.12, 0.5), (0.25, 0.95), (0.45, 0.05), (1.0, 0.05)]],
    "1": [[(0.35, 0.2), (0.55, 0.05), (0.55, 0.95)]],
    "2": [[(0.15, 0.25), (0.5, 0.05), (0.8, 0.3), (0.2, 0.95), (0.85, 0.95)]],
    "d": [[(0.75, 0.05), (0.75, 0.95), (0.3, 0.9), (0.2, 0.6), (0.45, 0.45), (0.75, 0.55)]],
    "h": [[(0.2, 0.05), (0.2, 0.95), (0.25, 0.5), (0.6, 0.4), (0.75, 0.6), (0.75, 0.95)]],
}


def _default_glyph(label: str) -> list[list[tuple[float, float]]]:
    rng = random.Random(zlib.crc32(label.encode("utf-8")))
    pts = [(0.1, 0.15)]
    for _ in range(4):
        pts.append((rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)))
    pts.append((0.9, 0.85))
    return [pts]


def glyph_polylines(label: str) -> list[list[tuple[float, float]]]:
    return GLYPHS.get(label, _default_glyph(label))


_GLYPH_WIDTH = {"\\int": 0.45, "-": 1.0, "1": 0.4, ".": 0.2}


def _own_width(label: str, s: float) -> float:
    return _GLYPH_WIDTH.get(label, 0.6) * s


@dataclass
class _Placed:
    spec: ExprSpec
    box: tuple[float, float, float, float]


def _place(spec: ExprSpec, x: float, y: float, s: float, out: list[_Placed]):
    """Place the subtree with the node glyph's top-left at (x, y); returns union bbox."""
    label = spec.label
    if label == "-" and (spec.above or spec.below):
        wa = _extent(spec.above, 0.7 * s)[0] if spec.above else 0.0
        wb = _extent(spec.below, 0.7 * s)[0] if spec.below else 0.0
        own = (x, y, x + max(wa, wb, 0.4 * s) + 0.2 * s, y + 0.1 * s)
    elif label == "\\sqrt" and spec.inside:
        wi, _ = _extent(spec.inside, 0.6 * s)
        own = (x, y, x + 0.45 * s + wi + 0.1 * s, y + s)
    else:
        own = (x, y, x + _own_width(label, s), y + s)
    placed = _Placed(spec, own)
    out.append(placed)
    union = own
    cx_mid = (own[0] + own[2]) / 2
    for rel in ("Inside", "Above", "Below", "Sup", "Sub"):
        child = spec.child(rel)
        if child is None:
            continue
        if rel == "Inside":
            box = _place(child, own[0] + 0.4 * s, y + 0.25 * s, 0.6 * s, out)
        elif rel == "Above":
            cw, ch = _extent(child, 0.7 * s)
            box = _place(child, cx_mid - cw / 2, own[1] - 0.15 * s - ch, 0.7 * s, out)
        elif rel == "Below":
            cw, _ = _extent(child, 0.7 * s)
            box = _place(child, cx_mid - cw / 2, own[3] + 0.15 * s, 0.7 * s, out)
        elif rel == "Sup":
            box = _place(child, union[2] + 0.08 * s, y - 0.25 * s, 0.6 * s, out)
        else:  # Sub
            box = _place(child, union[2] + 0.08 * s, y + 0.55 * s, 0.6 * s, out)
        union = merge_bboxes([union, box])
    if spec.right is not None:
        box = _place(spec.right, union[2] + 0.18 * s, y, s, out)
        union = merge_bboxes([union, box])
    return union


def _extent(spec: ExprSpec, s: float) -> tuple[float, float]:
    scratch: list[_Placed] = []
    box = _place(spec, 0.0, 0.0, s, scratch)
    return box[2] - box[0], box[3] - box[1]


def render_sample(spec: ExprSpec, source_id: str = "synthetic") -> InkSample:
    """Lay out the expression and emit strokes plus its ground-truth SRT."""
    placed: list[_Placed] = []
    _place(spec, 0.0, 0.0, 1.0, placed)
    # pre-order visit established by _place matches the writing order
    strokes: list[Stroke] = []
    nodes: list[SrtNode] = []
    node_ids: dict[int, str] = {}
    for k, item in enumerate(placed):
        x0, y0, x1, y1 = item.box
        w, h = x1 - x0, y1 - y0
        stroke_ids = []
        for poly in glyph_polylines(item.spec.label):
            pts = tuple((x0 + u * w, y0 + v * h) for u, v in poly)
            stroke_ids.append(len(strokes))
            strokes.append(Stroke(pts, len(strokes)))
        bbox = merge_bboxes(strokes[sid].bbox for sid in stroke_ids)
        node_id = f"s{k}"
        node_ids[id(item.spec)] = node_id
        nodes.append(SrtNode(node_id, item.spec.label, tuple(stroke_ids), bbox))
    edges = []

    def collect_edges(s: ExprSpec):
        for rel in CHILD_ORDER:
            child = s.child(rel)
            if child is not None:
                edges.append(SrtEdge(node_ids[id(s)], node_ids[id(child)], rel))
                collect_edges(child)

    collect_edges(spec)
    truth = Srt(tuple(nodes), tuple(edges), node_ids[id(spec)])
    return InkSample(tuple(strokes), ground_truth=truth, source_id=source_id)


# -- curated layout suite --------------------------------------------------


def fig_int_d2x() -> ExprSpec:
    """Integral-d-squared-x: root with a Right chain and a Sup branch."""
    return e("\\int", right=e("d", sup=e("2"), right=e("x")))


def fig_frac_log() -> ExprSpec:
    """h over 2, times log h: fraction bar root with a Right chain."""
    return e("-", above=e("h"), below=e("2"), right=e("\\log", right=e("h")))


def curated_cases() -> list[tuple[str, ExprSpec]]:
    cases: list[tuple[str, ExprSpec]] = []
    for label in ("a", "x", "1", "7", "+", "\\alpha"):
        short = label.lstrip("\\")
        cases.append((f"single_{short}", e(label)))
    chains = {
        "a_plus_b": e("a", right=e("+", right=e("b"))),
        "x_eq_y": e("x", right=e("=", right=e("y"))),
        "one_plus_two": e("1", right=e("+", right=e("2"))),
        "sin_x": e("\\sin", right=e("x")),
        "abc": e("a", right=e("b", right=e("c"))),
        "a_plus_b_plus_c": e("a", right=e("+", right=e("b", right=e("+", right=e("c"))))),
        "x_times_y": e("x", right=e("\\times", right=e("y"))),
        "n_arrow_m": e("n", right=e("\\rightarrow", right=e("m"))),
    }
    cases.extend(chains.items())
    scripts = {
        "x_sq": e("x", sup=e("2")),
        "y_sub_i": e("y", sub=e("i")),
        "x_sq_plus_one": e("x", sup=e("2"), right=e("+", right=e("1"))),
        "a_sub1_plus_b_sub2": e("a", sub=e("1"), right=e("+", right=e("b", sub=e("2")))),
        "two_pow_xplus1": e("2", sup=e("x", right=e("+", right=e("1")))),
        "x_sup_sub": e("x", sup=e("2"), sub=e("i")),
        "nested_sup": e("a", sup=e("b", sup=e("c"))),
        "sub_then_eq": e("x", sub=e("i"), right=e("=", right=e("y"))),
        "z_pow_n_eq_w": e("z", sup=e("n"), right=e("=", right=e("w"))),
    }
    cases.extend(scripts.items())
    fracs = {
        "half_h": fig_frac_log(),
        "frac_h_2": e("-", above=e("h"), below=e("2")),
        "frac_sum_c": e("-", above=e("a", right=e("+", right=e("b"))), below=e("c")),
        "frac_xsq_y": e("-", above=e("x", sup=e("2")), below=e("y")),
        "nested_frac": e("-", above=e("-", above=e("a"), below=e("b")), below=e("c")),
        "frac_plus_one": e("-", above=e("a"), below=e("b"), right=e("+", right=e("1"))),
        "one_over_n": e("-", above=e("1"), below=e("n")),
    }
    cases.extend(fracs.items())
    roots = {
        "sqrt_x": e("\\sqrt", inside=e("x")),
        "sqrt_xplus1": e("\\sqrt", inside=e("x", right=e("+", right=e("1")))),
        "sqrt_xsq": e("\\sqrt", inside=e("x", sup=e("2"))),
        "sqrt_frac": e("\\sqrt", inside=e("-", above=e("a"), below=e("b"))),
        "sqrt_then_plus": e("\\sqrt", inside=e("y"), right=e("+", right=e("2"))),
        "nested_sqrt": e("\\sqrt", inside=e("\\sqrt", inside=e("z"))),
    }
    cases.extend(roots.items())
    limits = {
        "sum_limits": e("\\sum", above=e("n"), below=e("i"), right=e("x")),
        "sum_body_sq": e("\\sum", below=e("i"), right=e("x", sup=e("2"))),
        "lim_under": e("\\lim", below=e("x"), right=e("y")),
        "over_dot": e("u", above=e(".")),
        "under_bar": e("v", below=e("b")),
    }
    cases.extend(limits.items())
    marquee = {
        "fig_int_d2x": fig_int_d2x(),
        "int_x_dx": e("\\int", right=e("x", right=e("d", right=e("x")))),
        "int_xsq_dx": e("\\int", right=e("x", sup=e("2"), right=e("d", right=e("x")))),
        "eq_with_frac": e("y", right=e("=", right=e("-", above=e("1"), below=e("2")))),
        "pythagoras": e(
            "a", sup=e("2"),
            right=e("+", right=e("b", sup=e("2"), right=e("=", right=e("c", sup=e("2"))))),
        ),
        "quadratic_root": e(
            "x", right=e("=", right=e("\\sqrt", inside=e("b", sup=e("2")))),
        ),
        "mixed_sub_sup": e(
            "a", sub=e("i"), right=e("+", right=e("b", sup=e("j"))),
        ),
        "frac_eq_sum": e(
            "-", above=e("p"), below=e("q"),
            right=e("=", right=e("\\sum", below=e("k"), right=e("r"))),
        ),
        "greek_chain": e("\\alpha", right=e("+", right=e("\\beta", sup=e("2")))),
        "paren_pow": e("(", right=e("a", right=e(")", sup=e("2")))),
    }
    cases.extend(marquee.items())
    return cases


# -- desk-scale training set -----------------------------------------------

# Single-stroke glyphs only: with no interior off-strokes, every off-stroke
# in a training path carries a relation target, so CTC cannot lawfully park
# a symbol emission on an off-stroke frame and derail the Eq-style decode.
TRAIN_SYMBOLS = (
    "1", "2", "3", "a", "b", "c", "d", "h", "n", "y",
    "-", "\\int", "\\sqrt", "\\sum",
)


def training_cases() -> list[tuple[str, ExprSpec]]:
    """20 chain-shaped expressions over <=15 symbols covering all relations."""
    return [
        ("t01", e("a", right=e("b"))),
        ("t02", e("y", right=e("-", right=e("d")))),
        ("t03", e("1", right=e("-", right=e("2")))),
        ("t04", e("h", sup=e("2"))),
        ("t05", e("y", sub=e("1"))),
        ("t06", e("-", above=e("h"))),
        ("t07", e("-", below=e("b"))),
        ("t08", e("\\sqrt", inside=e("d"))),
        ("t09", e("c", right=e("d"))),
        ("t10", e("h", sup=e("3"))),
        ("t11", e("c", sub=e("2"))),
        ("t12", e("\\sqrt", inside=e("y", right=e("-", right=e("1"))))),
        ("t13", e("-", above=e("a", right=e("b")))),
        ("t14", e("-", below=e("c", right=e("d")))),
        ("t15", e("\\int", right=e("y"))),
        ("t16", e("\\sum", below=e("a"))),
        ("t17", e("d", right=e("y", sup=e("2")))),
        ("t18", e("b", right=e("c", sub=e("3")))),
        ("t19", e("2", sup=e("n", right=e("y")))),
        ("t20", e("\\sum", above=e("3"))),
    ]


def training_samples() -> list[InkSample]:
    return [render_sample(spec, name) for name, spec in training_cases()]


# -- random SRTs for round-trip properties -----------------------------------


def random_srt(rng: random.Random, max_nodes: int = 10, labels=None) -> Srt:
    """Random tree: shape, relations, writing order and stroke blocks."""
    from .alphabet import RELATIONS

    labels = labels or ["a", "b", "x", "y", "1", "2", "+", "\\alpha"]
    n = rng.randint(1, max_nodes)
    parents: list[tuple[int, str] | None] = [None]
    slots: set[tuple[int, str]] = set()
    for child in range(1, n):
        while True:
            parent = rng.randrange(child)
            relation = rng.choice(RELATIONS)
            if (parent, relation) not in slots:
                slots.add((parent, relation))
                parents.append((parent, relation))
                break
    order = list(range(n))
    rng.shuffle(order)
    next_stroke = 0
    stroke_blocks: dict[int, tuple[int, ...]] = {}
    for idx in order:
        size = rng.randint(1, 2)
        stroke_blocks[idx] = tuple(range(next_stroke, next_stroke + size))
        next_stroke += size
    nodes = []
    for idx in range(n):
        first = stroke_blocks[idx][0]
        bbox = (float(first), 0.0, float(first) + 0.8, 1.0)
        nodes.append(SrtNode(f"n{idx}", rng.choice(labels), stroke_blocks[idx], bbox))
    edges = tuple(
        SrtEdge(f"n{parent}", f"n{child}", relation)
        for child, entry in enumerate(parents)
        if entry is not None
        for parent, relation in [entry]
    )
    return Srt(tuple(nodes), edges, "n0")


# -- InkML export ------------------------------------------------------------


def write_inkml(sample: InkSample, path: str | Path, with_lg: bool = True):
    """Write CROHME-style InkML (plus a sibling .lg when truth is present)."""
    path = Path(path)
    lines = ['<ink xmlns="http://www.w3.org/2003/InkML">']
    lines.append(f'  <annotation type="UI">{sample.source_id}</annotation>')
    for s in sample.strokes:
        coords = ", ".join(f"{x:.6f} {y:.6f}" for x, y in s.points)
        lines.append(f'  <trace id="{s.id}">{coords}</trace>')
    truth = sample.ground_truth
    if truth is not None and not truth.is_empty:
        lines.append('  <traceGroup xml:id="TG">')
        for node in truth.nodes:
            lines.append("    <traceGroup>")
            lines.append(f'      <annotation type="truth">{_xml_escape(node.label)}</annotation>')
            for sid in node.stroke_ids:
                lines.append(f'      <traceView traceDataRef="{sid}"/>')
            lines.append("    </traceGroup>")
        lines.append("  </traceGroup>")
    lines.append("</ink>")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if with_lg and truth is not None and not truth.is_empty:
        path.with_suffix(".lg").write_text(to_lg(truth).to_text(), encoding="utf-8")


def _xml_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
