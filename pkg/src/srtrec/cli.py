"""Command-line entry points: extract-paths, train, recognize, eval, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .alphabet import DEFAULT_ALPHABET, LabelAlphabet
from .ink import load_inkml, normalize
from .model.blstm import load_checkpoint, save_checkpoint
from .model.train import TrainConfig, TrainingDivergence, train, write_metrics_csv
from .pathextract import (
    PathExtractError,
    extract_all,
    read_manifest,
    record_for_path,
    write_manifest,
)
from .evalmetrics import confusions_csv, evaluate_pairs, report_json, report_text
from .service import recognition_result, sample_from_json
from .treebuild import recognize as run_recognize


def cmd_extract_paths(args) -> int:
    ink_dir = Path(args.inkml_dir)
    files = sorted(ink_dir.glob("*.inkml"))
    rules = tuple(r.strip() for r in args.rules.split(",") if r.strip())
    records = []
    rule_counts: dict[str, int] = {}
    skipped = 0
    for path in files:
        try:
            sample = load_inkml(path)
            paths = extract_all(sample, rules=rules, pe3_count=args.pe3_count, seed=args.seed)
        except (PathExtractError, ValueError) as exc:
            print(f"warning: skipping {path.name}: {exc}", file=sys.stderr)
            skipped += 1
            continue
        for p in paths:
            rule_counts[p.source_rule] = rule_counts.get(p.source_rule, 0) + 1
            records.append(record_for_path(p, sample, inline_ink=False, ink_path=str(path)))
    write_manifest(records, args.out_manifest)
    summary = ", ".join(f"{r}={c}" for r, c in sorted(rule_counts.items())) or "none"
    print(f"wrote {len(records)} paths ({summary}) from {len(files)} files, "
          f"{skipped} skipped")
    return 0


def cmd_train(args) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.exists():
        print(f"error: manifest not found: {manifest_path}", file=sys.stderr)
        return 1
    config = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    try:
        config.apply_overrides(args.set or [])
    except ValueError as exc:
        print(f"error: bad config override: {exc}", file=sys.stderr)
        return 1
    records = read_manifest(manifest_path)
    alphabet = DEFAULT_ALPHABET
    if args.alphabet == "auto":
        used = sorted(
            {label for rec in records for label in rec.target}
            - set(DEFAULT_ALPHABET.relations) - {DEFAULT_ALPHABET.norel}
        )
        alphabet = LabelAlphabet(symbols=tuple(used))
    try:
        result = train(records, config, alphabet=alphabet,
                       log=lambda msg: print(msg, file=sys.stderr))
    except TrainingDivergence as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 1
    save_checkpoint(result.best_model(), args.out_checkpoint)
    metrics_path = args.metrics or str(Path(args.out_checkpoint).with_suffix(".metrics.csv"))
    write_metrics_csv(result.history, metrics_path)
    print(f"wrote checkpoint {args.out_checkpoint} (best loss {result.best_val:.4f})")
    return 0


def _load_input_sample(path: str, fmt: str):
    p = Path(path)
    if fmt == "inkml" or (fmt == "auto" and p.suffix == ".inkml"):
        return load_inkml(p)
    data = json.loads(p.read_text(encoding="utf-8"))
    return sample_from_json(data)


def cmd_recognize(args) -> int:
    try:
        model = load_checkpoint(args.checkpoint)
    except Exception as exc:
        print(f"error: cannot load checkpoint: {exc}", file=sys.stderr)
        return 1
    try:
        sample = _load_input_sample(args.input, args.format)
        result = recognition_result(model, sample)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for entry in result.get("trace", []):
                fh.write(json.dumps(entry, sort_keys=True))
                fh.write("\n")
    print(json.dumps(result, indent=2))
    return 0


def cmd_eval(args) -> int:
    try:
        model = None if args.oracle else load_checkpoint(args.checkpoint)
    except Exception as exc:
        print(f"error: cannot load checkpoint: {exc}", file=sys.stderr)
        return 1
    files = sorted(Path(args.testset_dir).glob("*.inkml"))
    pairs = []
    excluded = 0
    for path in files:
        try:
            sample = load_inkml(path)
        except Exception as exc:
            print(f"warning: skipping {path.name}: {exc}", file=sys.stderr)
            excluded += 1
            continue
        if sample.ground_truth is None or sample.ground_truth.is_empty:
            excluded += 1
            continue
        truth = sample.ground_truth
        if args.oracle:
            pred = truth
        else:
            normalized = normalize(sample, spacing=model.config.spacing)
            pred = run_recognize(model, normalized)
        pairs.append((pred, truth))
    report = evaluate_pairs(pairs, excluded=excluded)
    report_path = Path(args.report)
    report_path.write_text(report_json(report), encoding="utf-8")
    report_path.with_suffix(".txt").write_text(report_text(report), encoding="utf-8")
    report_path.with_suffix(".nodes.csv").write_text(
        confusions_csv(report.node_confusions), encoding="utf-8")
    report_path.with_suffix(".edges.csv").write_text(
        confusions_csv(report.edge_confusions), encoding="utf-8")
    print(report_text(report))
    print(f"evaluated {len(pairs)} samples, {excluded} excluded")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.checkpoint, args.bind)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srtrec",
        description="Online handwritten math recognition: train, recognize, evaluate, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-paths", help="turn InkML+LG ground truth into a training manifest")
    p.add_argument("inkml_dir")
    p.add_argument("out_manifest")
    p.add_argument("--rules", default="PE1,PE2,PE3", help="comma-separated subset of PE1,PE2,PE3")
    p.add_argument("--pe3-count", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_extract_paths)

    p = sub.add_parser("train", help="train the temporal classifier from a manifest")
    p.add_argument("manifest")
    p.add_argument("out_checkpoint")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")
    p.add_argument("--metrics", help="metrics CSV path (default: alongside checkpoint)")
    p.add_argument("--alphabet", choices=["default", "auto"], default="default",
                   help="auto: restrict symbols to those in the manifest")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recognize", help="recognize one sample and print the result JSON")
    p.add_argument("checkpoint")
    p.add_argument("input")
    p.add_argument("--format", choices=["auto", "inkml", "json"], default="auto")
    p.add_argument("--trace", help="write connection scoring decisions as line-delimited JSON")
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("eval", help="score recognition over a directory of InkML+LG samples")
    p.add_argument("checkpoint")
    p.add_argument("testset_dir")
    p.add_argument("report", help="output report JSON path")
    p.add_argument("--oracle", action="store_true",
                   help="bypass the model: predictions equal ground truth")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP recognition service")
    p.add_argument("checkpoint")
    p.add_argument("--bind", default="127.0.0.1:8080")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
