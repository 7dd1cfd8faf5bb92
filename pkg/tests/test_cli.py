import json

import pytest

from srtrec.cli import main
from srtrec.model.blstm import BlstmModel, ModelConfig, save_checkpoint
from srtrec.alphabet import LabelAlphabet
from srtrec.pathextract import read_manifest
from srtrec.synthetic import e, fig_int_d2x, render_sample, write_inkml


@pytest.fixture()
def ink_dir(tmp_path):
    d = tmp_path / "ink"
    d.mkdir()
    write_inkml(render_sample(fig_int_d2x(), "fig1"), d / "fig1.inkml")
    write_inkml(render_sample(e("a", right=e("b")), "ab"), d / "ab.inkml")
    return d


@pytest.fixture()
def tiny_checkpoint(tmp_path):
    model = BlstmModel(
        alphabet=LabelAlphabet(symbols=("a", "b", "x")),
        config=ModelConfig(layers=1, hidden=8, seed=5),
    )
    path = tmp_path / "tiny.ckpt"
    save_checkpoint(model, path)
    return path


class TestExtractPaths:
    def test_empty_dir(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        out = tmp_path / "manifest.jsonl"
        assert main(["extract-paths", str(empty), str(out)]) == 0
        assert out.read_text() == ""
        assert "0 files" in capsys.readouterr().out

    def test_pe1_only_path_count_is_leaf_count(self, ink_dir, tmp_path, capsys):
        out = tmp_path / "manifest.jsonl"
        assert main(["extract-paths", str(ink_dir), str(out), "--rules", "PE1"]) == 0
        records = read_manifest(out)
        # fig1 has 2 leaves, a->b has 1
        by_sample = {}
        for rec in records:
            by_sample.setdefault(rec.sample_id, []).append(rec)
        assert len(by_sample["fig1"]) == 2
        assert len(by_sample["ab"]) == 1
        assert all(rec.rule == "PE1" for rec in records)

    def test_determinism_byte_identical(self, ink_dir, tmp_path):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        argv = ["--rules", "PE1,PE2,PE3", "--pe3-count", "3", "--seed", "11"]
        assert main(["extract-paths", str(ink_dir), str(a)] + argv) == 0
        assert main(["extract-paths", str(ink_dir), str(b)] + argv) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unreadable_file_skipped_with_warning(self, ink_dir, tmp_path, capsys):
        (ink_dir / "broken.inkml").write_text("<ink><trace>not closed")
        out = tmp_path / "manifest.jsonl"
        assert main(["extract-paths", str(ink_dir), str(out)]) == 0
        err = capsys.readouterr()
        assert "skipping broken.inkml" in err.err
        assert "1 skipped" in err.out


class TestTrain:
    def test_epochs_zero_writes_initial_checkpoint(self, ink_dir, tmp_path):
        manifest = tmp_path / "m.jsonl"
        assert main(["extract-paths", str(ink_dir), str(manifest), "--rules", "PE2"]) == 0
        ckpt = tmp_path / "model.ckpt"
        rc = main([
            "train", str(manifest), str(ckpt),
            "--set", "epochs=0", "--set", "hidden=8", "--set", "layers=1",
            "--alphabet", "auto",
        ])
        assert rc == 0
        assert ckpt.exists()
        assert (tmp_path / "model.metrics.csv").exists()

    def test_smoke_loss_decreases(self, ink_dir, tmp_path, capsys):
        manifest = tmp_path / "m.jsonl"
        main(["extract-paths", str(ink_dir), str(manifest), "--rules", "PE2"])
        ckpt = tmp_path / "model.ckpt"
        rc = main([
            "train", str(manifest), str(ckpt),
            "--set", "epochs=5", "--set", "hidden=8", "--set", "layers=1",
            "--set", "batch_size=2", "--set", "input_scale=10", "--set", "spacing=0.1",
            "--alphabet", "auto",
        ])
        assert rc == 0
        rows = (tmp_path / "model.metrics.csv").read_text().splitlines()[1:]
        first, last = float(rows[0].split(",")[3]), float(rows[-1].split(",")[3])
        assert last < first

    def test_missing_manifest_nonzero_exit(self, tmp_path, capsys):
        rc = main(["train", str(tmp_path / "nope.jsonl"), str(tmp_path / "out.ckpt")])
        assert rc != 0
        assert "manifest not found" in capsys.readouterr().err

    def test_bad_override_schema_diagnostic(self, ink_dir, tmp_path, capsys):
        manifest = tmp_path / "m.jsonl"
        main(["extract-paths", str(ink_dir), str(manifest), "--rules", "PE2"])
        rc = main(["train", str(manifest), str(tmp_path / "x.ckpt"), "--set", "bogus=3"])
        assert rc != 0
        assert "bogus" in capsys.readouterr().err


class TestRecognize:
    def test_single_stroke_json(self, tiny_checkpoint, tmp_path, capsys):
        inp = tmp_path / "dot.json"
        inp.write_text(json.dumps({"strokes": [[[0, 0], [4, 9], [8, 0]]]}))
        rc = main(["recognize", str(tiny_checkpoint), str(inp), "--format", "json"])
        assert rc == 0
        result = json.loads(capsys.readouterr().out)
        assert result["v"] == 1
        assert len(result["oned"]["symbols"]) == 1

    def test_inkml_input(self, tiny_checkpoint, ink_dir, capsys):
        rc = main(["recognize", str(tiny_checkpoint), str(ink_dir / "ab.inkml")])
        assert rc == 0
        result = json.loads(capsys.readouterr().out)
        assert "latex" in result

    def test_corrupted_checkpoint_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"garbage")
        inp = tmp_path / "dot.json"
        inp.write_text(json.dumps({"strokes": [[[0, 0]]]}))
        rc = main(["recognize", str(bad), str(inp), "--format", "json"])
        assert rc != 0
        out = capsys.readouterr()
        assert out.out == ""  # no partial output
        assert "checkpoint" in out.err

    def test_tampered_alphabet_refused(self, tmp_path, capsys):
        import zipfile

        model = BlstmModel(
            alphabet=LabelAlphabet(symbols=("a", "b")),
            config=ModelConfig(layers=1, hidden=4),
        )
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        # rewrite the embedded alphabet without updating its hash
        with zipfile.ZipFile(path) as zf:
            entries = {n: zf.read(n) for n in zf.namelist()}
        meta = json.loads(entries["meta.json"])
        meta["alphabet_symbols"] = ["a", "z"]
        entries["meta.json"] = json.dumps(meta).encode()
        with zipfile.ZipFile(path, "w") as zf:
            for name, data in entries.items():
                zf.writestr(name, data)
        inp = tmp_path / "dot.json"
        inp.write_text(json.dumps({"strokes": [[[0, 0]]]}))
        rc = main(["recognize", str(path), str(inp), "--format", "json"])
        assert rc != 0
        assert "alphabet hash mismatch" in capsys.readouterr().err


class TestEval:
    def test_oracle_bypass_gives_perfect_rates(self, ink_dir, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        rc = main(["eval", "unused.ckpt", str(ink_dir), str(report_path), "--oracle"])
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert report["exprate"]["correct"] == 1.0
        assert report["segments"]["recall"] == 1.0
        assert report_path.with_suffix(".txt").exists()
        assert report_path.with_suffix(".nodes.csv").exists()
        assert report_path.with_suffix(".edges.csv").exists()

    def test_empty_dir_zero_counts(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        report_path = tmp_path / "report.json"
        rc = main(["eval", "unused.ckpt", str(empty), str(report_path), "--oracle"])
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert report["exprate"]["n_pairs"] == 0

    def test_report_rates_in_unit_interval(self, ink_dir, tiny_checkpoint, tmp_path):
        # real model path: rates are garbage quality but must stay in [0, 1]
        report_path = tmp_path / "report.json"
        rc = main(["eval", str(tiny_checkpoint), str(ink_dir), str(report_path)])
        assert rc == 0
        report = json.loads(report_path.read_text())
        for key in ("segments", "seg_class", "tree_relations"):
            assert 0.0 <= report[key]["recall"] <= 1.0
            assert 0.0 <= report[key]["precision"] <= 1.0

    def test_samples_without_truth_excluded(self, tmp_path):
        d = tmp_path / "ink"
        d.mkdir()
        sample = render_sample(e("a"), "plain")
        from srtrec.ink import InkSample

        bare = InkSample(sample.strokes, source_id="plain")
        write_inkml(bare, d / "plain.inkml")
        report_path = tmp_path / "report.json"
        rc = main(["eval", "unused.ckpt", str(d), str(report_path), "--oracle"])
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert report["excluded"] == 1
        assert report["exprate"]["n_pairs"] == 0


def test_console_entrypoint_help():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


class TestTrainRecognizeLoop:
    def test_memorized_sample_recognized_via_cli(self, tmp_path, capsys):
        # full loop: export ink -> extract-paths -> train -> recognize
        from srtrec.latex import to_latex
        from srtrec.synthetic import training_cases

        name, spec = training_cases()[0]  # a Right b
        sample = render_sample(spec, name)
        d = tmp_path / "ink"
        d.mkdir()
        write_inkml(sample, d / f"{name}.inkml")
        manifest = tmp_path / "m.jsonl"
        assert main(["extract-paths", str(d), str(manifest), "--rules", "PE2"]) == 0
        ckpt = tmp_path / "model.ckpt"
        rc = main([
            "train", str(manifest), str(ckpt),
            "--set", "epochs=300", "--set", "layers=1", "--set", "hidden=16",
            "--set", "batch_size=1", "--set", "lr=0.003",
            "--set", "input_scale=10", "--set", "spacing=0.1",
            "--alphabet", "auto",
        ])
        assert rc == 0
        capsys.readouterr()
        trace_path = tmp_path / "trace.jsonl"
        rc = main([
            "recognize", str(ckpt), str(d / f"{name}.inkml"),
            "--trace", str(trace_path),
        ])
        assert rc == 0
        result = json.loads(capsys.readouterr().out)
        assert result["latex"] == to_latex(sample.ground_truth) == "ab"
        assert trace_path.exists()
