from __future__ import annotations

import json

import pytest

from roadsense.cli import main
from roadsense.synth import corpus

from test_voc import MINIMAL


@pytest.fixture
def small_corpus(tmp_path, taxonomy):
    manifest = corpus({"DWS": (4, 2), "TLS": (3, 1)}, tmp_path / "corp",
                      taxonomy, seed=11, image_size=(320, 240))
    return manifest


class TestStats:
    def test_text_output(self, small_corpus, capsys):
        assert main(["stats", str(small_corpus)]) == 0
        out = capsys.readouterr().out
        assert "Danger Warning Signs (DWS)" in out
        assert "Total" in out

    def test_json_output(self, small_corpus, capsys):
        assert main(["stats", str(small_corpus), "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["per_superclass"]["DWS"] == {"train": 4, "test": 2,
                                                 "total": 6}
        assert data["total"]["total"] == 10

    def test_missing_manifest_exits_3(self, tmp_path, capsys):
        assert main(["stats", str(tmp_path / "nope.tsv")]) == 3
        assert "nope.tsv" in capsys.readouterr().err

    def test_empty_manifest(self, tmp_path, capsys):
        m = tmp_path / "m.tsv"
        m.write_text("")
        assert main(["stats", str(m)]) == 0

    def test_figures(self, small_corpus, tmp_path, capsys):
        figs = tmp_path / "figs"
        assert main(["stats", str(small_corpus), "--figures", str(figs)]) == 0
        assert (figs / "stats.png").is_file()


class TestValidate:
    def test_clean_exit_0(self, small_corpus):
        assert main(["validate", str(small_corpus)]) == 0

    def test_violations_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.xml"
        bad.write_bytes(MINIMAL.replace(b"PHS-01", b"XYZ-99"))
        m = tmp_path / "m.tsv"
        m.write_text("bad.xml\ttrain\n")
        assert main(["validate", str(m)]) == 1
        assert "unknown" in capsys.readouterr().out.lower()


def run_pipeline(tmp_path, small_corpus, capsys, extra_cfg=""):
    cfg = tmp_path / "pipeline.cfg"
    cfg.write_text(f"fixtures = {small_corpus}\nseed = 3\n" + extra_cfg)
    out = tmp_path / "out"
    frames = small_corpus.parent / "frames"
    code = main(["run", "--config", str(cfg), "--input", str(frames),
                 "--out", str(out)])
    return code, out / "predictions.jsonl"


class TestRunAndEvaluate:
    def test_oracle_closure_via_cli(self, tmp_path, small_corpus, capsys):
        code, preds = run_pipeline(tmp_path, small_corpus, capsys)
        assert code == 0
        assert preds.is_file()
        capsys.readouterr()
        assert main(["evaluate", str(small_corpus), str(preds), "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["overall"]["f1"] == 1.0

    def test_unknown_backend_exits_2(self, tmp_path, small_corpus, capsys):
        cfg = tmp_path / "p.cfg"
        cfg.write_text(f"fixtures = {small_corpus}\ndetector = resnet\n")
        out = tmp_path / "o"
        frames = small_corpus.parent / "frames"
        assert main(["run", "--config", str(cfg), "--input", str(frames),
                     "--out", str(out)]) == 2

    def test_malformed_predictions_exit_3(self, tmp_path, small_corpus, capsys):
        p = tmp_path / "p.jsonl"
        p.write_text("garbage\n")
        assert main(["evaluate", str(small_corpus), str(p)]) == 3
        assert "line 1" in capsys.readouterr().err

    def test_one_record_per_detection(self, tmp_path, small_corpus, capsys):
        code, preds = run_pipeline(tmp_path, small_corpus, capsys)
        assert code == 0
        lines = [l for l in preds.read_text().splitlines() if l]
        assert len(lines) == 10  # 4+2 DWS + 3+1 TLS instances

    def test_annotated_frames(self, tmp_path, small_corpus, capsys):
        cfg = tmp_path / "pipeline.cfg"
        cfg.write_text(f"fixtures = {small_corpus}\n")
        out = tmp_path / "out"
        frames = small_corpus.parent / "frames"
        assert main(["run", "--config", str(cfg), "--input", str(frames),
                     "--out", str(out), "--annotate"]) == 0
        assert list(out.glob("annotated_*.ppm"))


class TestBench:
    def test_zero_frames(self, capsys):
        assert main(["bench", "--frames", "0", "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["frames_out"] == 0
        assert data["fps"] == 0.0

    def test_default_topology_with_latency(self, capsys):
        assert main(["bench", "--frames", "50", "--json", "--latency",
                     "traffic_sign_and_traffic_light_detector=5"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["frames_out"] == 50
        assert data["fps"] > 0

    def test_unknown_latency_node_exits_2(self, capsys):
        assert main(["bench", "--frames", "10", "--latency", "ghost=5"]) == 2

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["bench", "--mode", "warp-speed"])
        assert exc.value.code == 2


class TestSynth:
    def write_targets(self, tmp_path, rows):
        p = tmp_path / "targets.tsv"
        p.write_text("\n".join(f"{sc}\t{tr}\t{te}" for sc, tr, te in rows) + "\n")
        return p

    def test_deterministic(self, tmp_path, capsys):
        targets = self.write_targets(tmp_path, [("DWS", 3, 1)])
        for d in ("a", "b"):
            assert main(["synth", "--targets", str(targets),
                         "--out", str(tmp_path / d), "--seed", "5",
                         "--image-size", "320x240"]) == 0
        fa = sorted((tmp_path / "a").rglob("*"))
        fb = sorted((tmp_path / "b").rglob("*"))
        assert [p.name for p in fa] == [p.name for p in fb]
        for a, b in zip(fa, fb):
            if a.is_file():
                assert a.read_bytes() == b.read_bytes()

    def test_zero_targets(self, tmp_path, capsys):
        targets = self.write_targets(tmp_path, [])
        assert main(["synth", "--targets", str(targets),
                     "--out", str(tmp_path / "empty")]) == 0

    def test_synth_then_stats(self, tmp_path, capsys):
        targets = self.write_targets(tmp_path, [("SLS", 7, 2), ("APR", 1, 0)])
        assert main(["synth", "--targets", str(targets),
                     "--out", str(tmp_path / "c"), "--image-size", "320x240",
                     "--no-frames"]) == 0
        capsys.readouterr()
        assert main(["stats", str(tmp_path / "c" / "manifest.tsv"),
                     "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["per_superclass"]["SLS"] == {"train": 7, "test": 2,
                                                 "total": 9}
        assert data["per_superclass"]["APR"] == {"train": 1, "test": 0,
                                                 "total": 1}


def test_taxonomy_export(capsys):
    assert main(["taxonomy"]) == 0
    out = capsys.readouterr().out
    assert "DWS-01\tDWS\tsign\t0" in out
    assert len([l for l in out.splitlines() if l and not l.startswith("#")]) == 75
