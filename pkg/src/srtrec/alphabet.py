"""Label inventory for the symbol-relation temporal classifier.

The output layer covers symbol classes, the six spatial relations, the
NoRel sentinel, and the CTC blank, in that order. Ids are stable for a
given alphabet instance; checkpoints embed the label list so a model is
never decoded against the wrong id layout.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

# The 101 CROHME symbol classes: digits, latin letters, greek letters,
# function names, operators and delimiters.
CROHME_SYMBOLS = (
    "!", "(", ")", "+", "-", ".", "/",
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9",
    "=",
    "A", "B", "C", "E", "F", "G", "H", "I", "L", "M", "N", "P", "R", "S",
    "T", "V", "X", "Y",
    "[",
    "\\Delta", "\\alpha", "\\beta", "\\cos", "\\div", "\\exists",
    "\\forall", "\\gamma", "\\geq", "\\gt", "\\in", "\\infty", "\\int",
    "\\lambda", "\\ldots", "\\leq", "\\lim", "\\log", "\\lt", "\\mu",
    "\\neq", "\\phi", "\\pi", "\\pm", "\\prime", "\\rightarrow",
    "\\sigma", "\\sin", "\\sqrt", "\\sum", "\\tan", "\\theta", "\\times",
    "\\{", "\\}",
    "]",
    "a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l", "m", "n",
    "o", "p", "q", "r", "s", "t", "u", "v", "w", "x", "y", "z",
    "|", "COMMA",
)

RELATIONS = ("Right", "Above", "Below", "Inside", "Sup", "Sub")
NOREL = "NoRel"
BLANK = "blank"


class AlphabetError(ValueError):
    pass


@dataclass(frozen=True)
class LabelAlphabet:
    """Ordered label space: symbols, relations, NoRel, blank.

    The default instance carries the 101 CROHME symbol classes (total
    dimensionality 109); smaller symbol sets are allowed for toy models
    and the embedded checkpoint alphabet.
    """

    symbols: tuple[str, ...] = CROHME_SYMBOLS
    relations: tuple[str, ...] = RELATIONS
    norel: str = NOREL
    blank: str = BLANK
    _ids: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        groups = [set(self.symbols), set(self.relations), {self.norel}, {self.blank}]
        if not self.symbols:
            raise AlphabetError("alphabet needs at least one symbol class")
        if len(self.symbols) != len(set(self.symbols)):
            raise AlphabetError("duplicate symbol class")
        for i, a in enumerate(groups):
            for b in groups[i + 1:]:
                if a & b:
                    raise AlphabetError(f"label groups overlap: {sorted(a & b)}")
        ids = {lab: i for i, lab in enumerate(self.labels)}
        object.__setattr__(self, "_ids", ids)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.symbols + self.relations + (self.norel, self.blank)

    @property
    def size(self) -> int:
        return len(self.symbols) + len(self.relations) + 2

    @property
    def symbol_ids(self) -> range:
        return range(0, len(self.symbols))

    @property
    def relation_ids(self) -> range:
        """Ids of the six relations plus NoRel (the relation partition)."""
        return range(len(self.symbols), len(self.symbols) + len(self.relations) + 1)

    @property
    def norel_id(self) -> int:
        return len(self.symbols) + len(self.relations)

    @property
    def blank_id(self) -> int:
        return self.size - 1

    def id_of(self, label: str) -> int:
        try:
            return self._ids[label]
        except KeyError:
            raise AlphabetError(f"unknown label: {label!r}") from None

    def label_of(self, label_id: int) -> str:
        labels = self.labels
        if not 0 <= label_id < len(labels):
            raise AlphabetError(f"label id out of range: {label_id}")
        return labels[label_id]

    def is_symbol(self, label: str) -> bool:
        return label in self._ids and self._ids[label] < len(self.symbols)

    def is_relation_or_norel(self, label: str) -> bool:
        return label in self.relations or label == self.norel

    def digest(self) -> str:
        """Stable hash of the label layout, stored in checkpoints."""
        joined = "\x1f".join(self.labels)
        return hashlib.sha256(joined.encode("utf-8")).hexdigest()


DEFAULT_ALPHABET = LabelAlphabet()
