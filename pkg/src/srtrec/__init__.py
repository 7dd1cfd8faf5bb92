"""Online handwritten math recognition: strokes in, symbol relation tree out.

A bidirectional recurrent temporal classifier emits symbols and spatial
relations directly from the pen trajectory; the tree connector cuts its
1D output at NoRel, sorts the fragments and reconnects them into the
final tree, which renders to LaTeX or LgEval's LG format.
"""

from .alphabet import BLANK, DEFAULT_ALPHABET, NOREL, RELATIONS, LabelAlphabet
from .ink import FeatureSequence, InkSample, Stroke, featurize, normalize, parse_inkml
from .latex import to_latex
from .lg import from_lg, parse_lg, to_lg
from .srt import (
    DerivedPath,
    Srt,
    SrtEdge,
    SrtNode,
    derived_paths_from_root,
    random_root_shuffle_paths,
    reconstruct_from_paths,
    writing_order_path,
)
from .treebuild import recognize, recognize_detailed

__version__ = "0.1.0"

__all__ = [
    "BLANK",
    "DEFAULT_ALPHABET",
    "DerivedPath",
    "FeatureSequence",
    "InkSample",
    "LabelAlphabet",
    "NOREL",
    "RELATIONS",
    "Srt",
    "SrtEdge",
    "SrtNode",
    "Stroke",
    "derived_paths_from_root",
    "featurize",
    "from_lg",
    "normalize",
    "parse_inkml",
    "parse_lg",
    "random_root_shuffle_paths",
    "recognize",
    "recognize_detailed",
    "reconstruct_from_paths",
    "to_latex",
    "to_lg",
    "writing_order_path",
]
