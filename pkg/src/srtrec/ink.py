"""Ink ingestion: InkML parsing, normalization, frame extraction.

The classifier consumes one frame per resampled pen point plus exactly
one frame per off-stroke (the pen-up move between consecutive strokes).
Frames are (dx, dy, pen_state) with pen_state 1 on paper and 0 in the
air. Coordinates follow the digitizer convention: y grows downward.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .alphabet import DEFAULT_ALPHABET, LabelAlphabet
from .lg import from_lg, parse_lg
from .srt import Bbox, Srt, SrtNode

RESAMPLE_SPACING = 0.05  # height-normalized units
MAX_POINTS_PER_STROKE = 20_000  # guards against degenerate aspect ratios


class InkError(ValueError):
    pass


class InkParseError(InkError):
    pass


@dataclass(frozen=True)
class Stroke:
    points: tuple[tuple[float, float], ...]
    id: int

    def __post_init__(self):
        if not self.points:
            raise InkError(f"stroke {self.id} has no points")
        for x, y in self.points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InkError(f"stroke {self.id} has non-finite coordinates")

    @property
    def bbox(self) -> Bbox:
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        return (min(xs), min(ys), max(xs), max(ys))


@dataclass(frozen=True)
class InkSample:
    strokes: tuple[Stroke, ...]
    ground_truth: Srt | None = None
    source_id: str = ""

    def __post_init__(self):
        for i, s in enumerate(self.strokes):
            if s.id != i:
                raise InkError(f"stroke ids must be 0..n-1 in order, got {s.id} at {i}")

    @property
    def n_strokes(self) -> int:
        return len(self.strokes)

    def bbox(self) -> Bbox:
        xs = [p[0] for s in self.strokes for p in s.points]
        ys = [p[1] for s in self.strokes for p in s.points]
        return (min(xs), min(ys), max(xs), max(ys))


class FrameTag(NamedTuple):
    kind: str  # "stroke" | "off"
    index: int  # stroke id, or gap index i (between strokes i-1 and i)


@dataclass(frozen=True)
class FeatureSequence:
    frames: np.ndarray  # (T, 3) float64: dx, dy, pen_state
    kinds: tuple[FrameTag, ...]
    stroke_order: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if len(self.frames) != len(self.kinds):
            raise InkError("frame/kind length mismatch")

    def __len__(self) -> int:
        return len(self.frames)

    def off_positions(self) -> list[tuple[int, int]]:
        """(gap_index, frame_position) for every off-stroke frame, in order."""
        return [(tag.index, t) for t, tag in enumerate(self.kinds) if tag.kind == "off"]

    def stroke_positions(self, stroke_id: int) -> list[int]:
        return [
            t for t, tag in enumerate(self.kinds)
            if tag.kind == "stroke" and tag.index == stroke_id
        ]

    def stroke_frame_mask(self) -> np.ndarray:
        return np.array([tag.kind == "stroke" for tag in self.kinds], dtype=bool)


# -- InkML ---------------------------------------------------------------


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _parse_trace_text(text: str, lineno_hint: str) -> tuple[tuple[float, float], ...]:
    pts = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        coords = chunk.split()
        if len(coords) < 2:
            raise InkParseError(f"trace {lineno_hint}: bad point {chunk!r}")
        try:
            pts.append((float(coords[0]), float(coords[1])))
        except ValueError:
            raise InkParseError(f"trace {lineno_hint}: bad point {chunk!r}") from None
    if not pts:
        raise InkParseError(f"trace {lineno_hint}: missing trace data")
    return tuple(pts)


def parse_inkml(
    data: bytes | str,
    lg_text: str | None = None,
    alphabet: LabelAlphabet = DEFAULT_ALPHABET,
) -> InkSample:
    """Parse a CROHME-style InkML document.

    Ground truth is attached from `lg_text` when given (full SRT), or
    from traceGroups alone only in the single-symbol case (no relations
    are encoded in plain InkML).
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise InkParseError(f"malformed InkML: {exc}") from exc

    source_id = ""
    traces: list[tuple[str, tuple[tuple[float, float], ...]]] = []
    groups: list[tuple[str, list[str]]] = []  # (label, trace refs)
    for el in root.iter():
        name = _local(el.tag)
        if name == "trace":
            tid = el.get("id", str(len(traces)))
            traces.append((tid, _parse_trace_text(el.text or "", tid)))
        elif name == "annotation" and el.get("type") == "UI":
            source_id = (el.text or "").strip()
    if not traces:
        raise InkParseError("missing trace data")

    index_of = {tid: i for i, (tid, _) in enumerate(traces)}
    for el in root.iter():
        if _local(el.tag) != "traceGroup":
            continue
        label = None
        refs: list[str] = []
        for child in el:
            cname = _local(child.tag)
            if cname == "annotation" and child.get("type") == "truth":
                label = (child.text or "").strip()
            elif cname == "traceView":
                ref = child.get("traceDataRef", "").lstrip("#")
                refs.append(ref)
        if label is not None and refs:
            for r in refs:
                if r not in index_of:
                    raise InkParseError(f"traceView references unknown trace {r!r}")
            groups.append((label, refs))

    strokes = tuple(Stroke(pts, i) for i, (_, pts) in enumerate(traces))
    ground_truth: Srt | None = None
    if lg_text is not None:
        raw_pts = [s.points for s in strokes]
        ground_truth = from_lg(parse_lg(lg_text), strokes=raw_pts)
        for n in ground_truth.nodes:
            if not alphabet.is_symbol(n.label):
                raise InkParseError(f"unknown symbol label: {n.label!r}")
    elif len(groups) == 1 and len(groups[0][1]) == len(strokes):
        label, refs = groups[0]
        if not alphabet.is_symbol(label):
            raise InkParseError(f"unknown symbol label: {label!r}")
        stroke_ids = tuple(sorted(index_of[r] for r in refs))
        node = SrtNode("sym0", label, stroke_ids, _strokes_bbox(strokes, stroke_ids))
        ground_truth = Srt(nodes=(node,), edges=(), root="sym0")
    elif groups:
        for label, _ in groups:
            if not alphabet.is_symbol(label):
                raise InkParseError(f"unknown symbol label: {label!r}")

    return InkSample(strokes=strokes, ground_truth=ground_truth, source_id=source_id)


def load_inkml(path: str | Path, alphabet: LabelAlphabet = DEFAULT_ALPHABET) -> InkSample:
    """Read an .inkml file; a sibling .lg file supplies the ground-truth SRT."""
    path = Path(path)
    lg_path = path.with_suffix(".lg")
    lg_text = lg_path.read_text(encoding="utf-8") if lg_path.exists() else None
    sample = parse_inkml(path.read_text(encoding="utf-8"), lg_text, alphabet)
    if not sample.source_id:
        sample = InkSample(sample.strokes, sample.ground_truth, path.stem)
    return sample


def _strokes_bbox(strokes: tuple[Stroke, ...], stroke_ids) -> Bbox:
    xs = [p[0] for sid in stroke_ids for p in strokes[sid].points]
    ys = [p[1] for sid in stroke_ids for p in strokes[sid].points]
    return (min(xs), min(ys), max(xs), max(ys))


# -- normalization -------------------------------------------------------


def _dedupe(points):
    pts = [points[0]]
    for p in points[1:]:
        if p != pts[-1]:
            pts.append(p)
    return pts


def _spacing_in_band(points, spacing: float) -> bool:
    """True when consecutive gaps already sit in [0.5, 1.5] * spacing.

    Such strokes are left untouched, which makes normalization an exact
    identity on its own output.
    """
    if len(points) == 1:
        return True
    for a, b in zip(points, points[1:]):
        gap = math.hypot(b[0] - a[0], b[1] - a[1])
        if not 0.5 * spacing <= gap <= 1.5 * spacing:
            return False
    return True


def _resample_chord(points, spacing: float):
    """Points at exact Euclidean steps of `spacing` along the polyline.

    The endpoint is appended when it is at least half a step away from
    the last emitted point and dropped otherwise, keeping every gap in
    [0.5, 1.5] * spacing.
    """
    pts = _dedupe(points)
    if len(pts) == 1:
        return pts
    out = [pts[0]]
    pos = pts[0]
    seg = 0
    while True:
        emitted = None
        p = pos
        j = seg
        while j < len(pts) - 1:
            b = pts[j + 1]
            e = out[-1]
            dx, dy = b[0] - p[0], b[1] - p[1]
            fx, fy = p[0] - e[0], p[1] - e[1]
            a2 = dx * dx + dy * dy
            b2 = 2.0 * (fx * dx + fy * dy)
            c2 = fx * fx + fy * fy - spacing * spacing
            disc = b2 * b2 - 4.0 * a2 * c2
            if a2 > 0 and disc >= 0:
                t = (-b2 + math.sqrt(disc)) / (2.0 * a2)
                if -1e-12 <= t <= 1.0:
                    t = max(t, 0.0)
                    emitted = ((p[0] + t * dx, p[1] + t * dy), j)
                    break
            p = b
            j += 1
        if emitted is None:
            end = pts[-1]
            if math.hypot(end[0] - out[-1][0], end[1] - out[-1][1]) >= 0.5 * spacing:
                out.append(end)
            return out
        pos, seg = emitted
        out.append(pos)


def _transform(strokes, min_x, min_y, scale):
    return tuple(
        Stroke(tuple(((x - min_x) * scale, (y - min_y) * scale) for x, y in s.points), s.id)
        for s in strokes
    )


def _scale_for(bbox) -> float:
    min_x, min_y, max_x, max_y = bbox
    height = max_y - min_y
    width = max_x - min_x
    if height > 0:
        return 1.0 / height
    if width > 0:
        return 1.0 / width
    return 1.0


def normalize(sample: InkSample, spacing: float = RESAMPLE_SPACING) -> InkSample:
    """Translate to the origin, scale bbox height to exactly 1.0, resample.

    Zero-height ink scales by width instead; a pure dot keeps scale 1.
    Idempotent: a second application is an exact identity. Ground-truth
    bboxes are recomputed from the transformed strokes.
    """
    if not sample.strokes:
        raise InkError("empty sample")
    bbox = sample.bbox()
    moved = _transform(sample.strokes, bbox[0], bbox[1], _scale_for(bbox))
    for s in moved:
        length = sum(
            math.hypot(b[0] - a[0], b[1] - a[1])
            for a, b in zip(s.points, s.points[1:])
        )
        if length / spacing > MAX_POINTS_PER_STROKE:
            raise InkError(
                f"stroke {s.id} degenerates to {int(length / spacing)} points "
                f"after height normalization"
            )
    resampled = tuple(
        s if _spacing_in_band(s.points, spacing)
        else Stroke(tuple(_resample_chord(s.points, spacing)), s.id)
        for s in moved
    )
    # exact final frame: resampling may have trimmed the extremes slightly
    tmp = InkSample(resampled, source_id=sample.source_id)
    bbox2 = tmp.bbox()
    scale2 = _scale_for(bbox2)
    if (bbox2[0], bbox2[1], scale2) == (0.0, 0.0, 1.0):
        strokes = resampled
    else:
        strokes = _transform(resampled, bbox2[0], bbox2[1], scale2)

    gt = sample.ground_truth
    if gt is not None and not gt.is_empty:
        nodes = tuple(
            SrtNode(n.id, n.label, n.stroke_ids, _strokes_bbox(strokes, n.stroke_ids))
            for n in gt.nodes
        )
        gt = Srt(nodes=nodes, edges=gt.edges, root=gt.root)
    return InkSample(strokes=strokes, ground_truth=gt, source_id=sample.source_id)


# -- featurization -------------------------------------------------------


def featurize_order(
    sample: InkSample,
    stroke_order: tuple[int, ...],
    off_stroke_mode: str = "delta",
) -> FeatureSequence:
    """Frames for strokes visited in `stroke_order`.

    Every point yields a stroke frame; the first point of each stroke
    carries (0, 0, 1) because the preceding move lives in the off-stroke
    frame. Each gap between consecutive strokes yields exactly one
    off-stroke frame: the pen-up delta (default), or the absolute gap
    midpoint when off_stroke_mode="midpoint".
    """
    if not stroke_order:
        raise InkError("empty stroke order")
    if off_stroke_mode not in ("delta", "midpoint"):
        raise InkError(f"bad off_stroke_mode {off_stroke_mode!r}")
    frames: list[tuple[float, float, float]] = []
    kinds: list[FrameTag] = []
    prev_stroke: Stroke | None = None
    for gap, sid in enumerate(stroke_order):
        stroke = sample.strokes[sid]
        if prev_stroke is not None:
            a = prev_stroke.points[-1]
            b = stroke.points[0]
            if off_stroke_mode == "delta":
                frames.append((b[0] - a[0], b[1] - a[1], 0.0))
            else:
                frames.append(((a[0] + b[0]) / 2, (a[1] + b[1]) / 2, 0.0))
            kinds.append(FrameTag("off", gap))
        pts = stroke.points
        frames.append((0.0, 0.0, 1.0))
        kinds.append(FrameTag("stroke", sid))
        for a, b in zip(pts, pts[1:]):
            frames.append((b[0] - a[0], b[1] - a[1], 1.0))
            kinds.append(FrameTag("stroke", sid))
        prev_stroke = stroke
    return FeatureSequence(
        frames=np.array(frames, dtype=np.float64),
        kinds=tuple(kinds),
        stroke_order=tuple(stroke_order),
    )


def featurize(sample: InkSample, off_stroke_mode: str = "delta") -> FeatureSequence:
    return featurize_order(
        sample, tuple(range(sample.n_strokes)), off_stroke_mode=off_stroke_mode
    )
