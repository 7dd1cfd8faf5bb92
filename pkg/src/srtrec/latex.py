"""Deterministic SRT-to-LaTeX rendering.

Right concatenates, Sup/Sub attach scripts, Inside fills the \\sqrt
argument, and Above/Below become a fraction when the parent glyph is a
horizontal bar, otherwise \\overset/\\underset.
"""

from __future__ import annotations

import re

from .srt import Srt

GLYPHS = {"COMMA": ","}
BAR_LABELS = {"-"}

_CONTROL_WORD_TAIL = re.compile(r"\\[A-Za-z]+$")


def _join(left: str, right: str) -> str:
    if not left:
        return right
    if not right:
        return left
    if _CONTROL_WORD_TAIL.search(left) and right[0].isalpha():
        return left + " " + right
    return left + right


def to_latex(srt: Srt) -> str:
    if srt.is_empty:
        return ""
    return _render(srt, srt.root)


def _render(srt: Srt, node_id: str) -> str:
    node = srt.node(node_id)
    kids = {e.relation: e.child for e in srt.children(node_id)}
    glyph = GLYPHS.get(node.label, node.label)

    above = kids.get("Above")
    below = kids.get("Below")
    if node.label in BAR_LABELS and (above or below):
        num = _render(srt, above) if above else ""
        den = _render(srt, below) if below else ""
        base = "\\frac{%s}{%s}" % (num, den)
    else:
        inside = kids.get("Inside")
        if node.label == "\\sqrt" and inside:
            base = "\\sqrt{%s}" % _render(srt, inside)
        elif inside:
            base = _join(glyph, "{%s}" % _render(srt, inside))
        else:
            base = glyph
        if above:
            base = "\\overset{%s}{%s}" % (_render(srt, above), base)
        if below:
            base = "\\underset{%s}{%s}" % (_render(srt, below), base)

    sub = kids.get("Sub")
    if sub:
        base = base + "_{%s}" % _render(srt, sub)
    sup = kids.get("Sup")
    if sup:
        base = base + "^{%s}" % _render(srt, sup)
    right = kids.get("Right")
    if right:
        base = _join(base, _render(srt, right))
    return base
