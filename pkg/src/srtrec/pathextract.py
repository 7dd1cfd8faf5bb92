"""Training-target extraction: SRT + ink -> labeled stroke paths.

Three extraction rules produce CTC targets:
  PE1 - every root-to-leaf path (no NoRel),
  PE2 - the single writing-order path (NoRel between unrelated symbols),
  PE3 - random sub-tree shuffles simulating other writing orders.
Each labeled path pairs a stroke visitation order with the alternating
symbol/relation token sequence the classifier should emit for it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .alphabet import DEFAULT_ALPHABET, LabelAlphabet
from .ink import InkSample, Stroke
from .srt import (
    DerivedPath,
    derived_paths_from_root,
    random_root_shuffle_paths,
    writing_order_path,
)

PE3_DEFAULT_COUNT = 4


class PathExtractError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledPath:
    stroke_order: tuple[int, ...]
    target: tuple[str, ...]
    source_rule: str
    sample_id: str = ""

    def __post_init__(self):
        if len(self.target) % 2 != 1:
            raise PathExtractError("target must alternate symbol/relation (odd length)")


def _from_derived(dp: DerivedPath, rule: str, sample_id: str) -> LabeledPath:
    order: list[int] = []
    for n in dp.nodes:
        order.extend(n.stroke_ids)
    return LabeledPath(tuple(order), dp.tokens, rule, sample_id)


def _require_truth(sample: InkSample):
    if sample.ground_truth is None or sample.ground_truth.is_empty:
        raise PathExtractError(f"sample {sample.source_id!r} has no ground truth")
    return sample.ground_truth


def extract_pe1(sample: InkSample) -> list[LabeledPath]:
    truth = _require_truth(sample)
    return [
        _from_derived(dp, "PE1", sample.source_id)
        for dp in derived_paths_from_root(truth)
    ]


def extract_pe2(sample: InkSample) -> LabeledPath:
    truth = _require_truth(sample)
    dp = writing_order_path(truth)
    path = _from_derived(dp, "PE2", sample.source_id)
    if path.stroke_order != tuple(range(sample.n_strokes)):
        raise PathExtractError(
            f"non-consecutive symbol in sample {sample.source_id!r}: "
            f"stroke order {path.stroke_order}"
        )
    return path


def extract_pe3(
    sample: InkSample,
    count: int = PE3_DEFAULT_COUNT,
    seed: int = 0,
    scope: str = "root",
) -> list[LabeledPath]:
    """Up to `count` distinct shuffled paths, minus any equal to the PE2 path."""
    truth = _require_truth(sample)
    if count <= 0:
        return []
    pe2_key = None
    try:
        pe2 = extract_pe2(sample)
        pe2_key = (pe2.stroke_order, pe2.target)
    except PathExtractError:
        pass
    out: list[LabeledPath] = []
    seen = {pe2_key}
    for dp in random_root_shuffle_paths(truth, count, seed, scope=scope):
        path = _from_derived(dp, "PE3", sample.source_id)
        key = (path.stroke_order, path.target)
        if key in seen:
            continue
        seen.add(key)
        out.append(path)
    return out


def extract_all(
    sample: InkSample,
    rules=("PE1", "PE2", "PE3"),
    pe3_count: int = PE3_DEFAULT_COUNT,
    seed: int = 0,
) -> list[LabeledPath]:
    out: list[LabeledPath] = []
    if "PE1" in rules:
        out.extend(extract_pe1(sample))
    if "PE2" in rules:
        out.append(extract_pe2(sample))
    if "PE3" in rules:
        out.extend(extract_pe3(sample, count=pe3_count, seed=seed))
    return out


def build_ctc_target(
    path: LabeledPath, alphabet: LabelAlphabet = DEFAULT_ALPHABET
) -> list[int]:
    """Integer ids of the alternating target; blanks are CTC's job, not ours."""
    return [alphabet.id_of(label) for label in path.target]


# -- manifest ------------------------------------------------------------


@dataclass(frozen=True)
class ManifestRecord:
    sample_id: str
    rule: str
    stroke_order: tuple[int, ...]
    target: tuple[str, ...]
    ink: tuple[tuple[tuple[float, float], ...], ...] | None = None
    ink_path: str | None = None

    def to_json(self) -> str:
        rec = {
            "v": 1,
            "sample_id": self.sample_id,
            "rule": self.rule,
            "stroke_order": list(self.stroke_order),
            "target": list(self.target),
        }
        if self.ink is not None:
            rec["ink"] = [[[x, y] for x, y in stroke] for stroke in self.ink]
        if self.ink_path is not None:
            rec["ink_path"] = self.ink_path
        return json.dumps(rec, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(line: str) -> "ManifestRecord":
        rec = json.loads(line)
        ink = None
        if rec.get("ink") is not None:
            ink = tuple(
                tuple((float(x), float(y)) for x, y in stroke) for stroke in rec["ink"]
            )
        return ManifestRecord(
            sample_id=rec["sample_id"],
            rule=rec["rule"],
            stroke_order=tuple(rec["stroke_order"]),
            target=tuple(rec["target"]),
            ink=ink,
            ink_path=rec.get("ink_path"),
        )

    def load_sample(self) -> InkSample:
        """Raw (unnormalized) ink referenced by this record."""
        if self.ink is not None:
            strokes = tuple(Stroke(pts, i) for i, pts in enumerate(self.ink))
            return InkSample(strokes=strokes, source_id=self.sample_id)
        if self.ink_path is not None:
            from .ink import load_inkml

            return load_inkml(self.ink_path)
        raise PathExtractError(f"record {self.sample_id!r} carries no ink")


def record_for_path(path: LabeledPath, sample: InkSample, inline_ink=True, ink_path=None):
    ink = tuple(s.points for s in sample.strokes) if inline_ink else None
    return ManifestRecord(
        sample_id=path.sample_id or sample.source_id,
        rule=path.source_rule,
        stroke_order=path.stroke_order,
        target=path.target,
        ink=ink,
        ink_path=ink_path,
    )


def write_manifest(records, path: str | Path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")


def read_manifest(path: str | Path) -> list[ManifestRecord]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(ManifestRecord.from_json(line))
    return out
