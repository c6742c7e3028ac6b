import json
from pathlib import Path

import pytest

from faciesqc.cli import main
from faciesqc.generator import ProceduralChannelGenerator, sample_latent
from faciesqc.grids import parse_gslib_grid, threshold_grid, write_gslib_grid
from faciesqc.report import validate_report


def run(args):
    return main([str(a) for a in args])


@pytest.fixture
def truth_file(tmp_path):
    gen = ProceduralChannelGenerator()
    grid = threshold_grid(gen.generate(sample_latent(12345, 15)))
    path = tmp_path / "truth.gslib"
    path.write_text(write_gslib_grid(grid), encoding="utf-8")
    return path


class TestGenerate:
    def test_writes_files_and_manifest(self, tmp_path):
        out = tmp_path / "ens"
        assert run(["generate", "--generator", "procedural", "--count", 3,
                    "--seed", 7, "--out-dir", out]) == 0
        files = sorted(p.name for p in out.glob("real_*.gslib"))
        assert files == ["real_0000.gslib", "real_0001.gslib", "real_0002.gslib"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["master_seed"] == 7
        assert len(manifest["realizations"]) == 3

    def test_rerun_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["generate", "--count", 2, "--seed", 9,
                        "--out-dir", out]) == 0
        for name in ("real_0000.gslib", "real_0001.gslib", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_count_zero_rejected(self, tmp_path, capsys):
        assert run(["generate", "--count", 0, "--out-dir", tmp_path]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_generator(self, tmp_path):
        assert run(["generate", "--generator", "magic", "--count", 1,
                    "--out-dir", tmp_path]) == 1


class TestCondition:
    def test_honors_point(self, tmp_path, truth_file):
        points = tmp_path / "wells.csv"
        points.write_text("row,col,facies\n10,20,1\n", encoding="utf-8")
        out = tmp_path / "cond"
        assert run(["condition", "--data", points, "--count", 1, "--seed", 3,
                    "--ti", truth_file, "--max-evals", 200, "--restarts", 2,
                    "--out-dir", out]) == 0
        meta = json.loads((out / "cond_0000.json").read_text())
        assert meta["f1_at_data"] == 1.0
        grid = parse_gslib_grid((out / "cond_0000.gslib").read_text(), "categorical")
        assert grid.cells[10, 20] == 1

    def test_missing_data_flag_usage_error(self, tmp_path):
        with pytest.raises(SystemExit):
            run(["condition", "--count", 1, "--out-dir", tmp_path])

    def test_lambda_zero_flagged(self, tmp_path, truth_file):
        points = tmp_path / "wells.csv"
        points.write_text("row,col,facies\n5,5,1\n", encoding="utf-8")
        out = tmp_path / "c0"
        assert run(["condition", "--data", points, "--count", 1,
                    "--lambda", 0, "--ti", truth_file, "--max-evals", 100,
                    "--restarts", 1, "--out-dir", out]) == 0
        meta = json.loads((out / "cond_0000.json").read_text())
        assert meta["content_term_disabled"] is True


class TestCheck:
    def test_report_and_series(self, tmp_path, truth_file):
        ens = tmp_path / "ens"
        run(["generate", "--count", 3, "--seed", 1, "--out-dir", ens])
        base = tmp_path / "base"
        run(["generate", "--count", 3, "--seed", 2, "--out-dir", base])
        points = tmp_path / "wells.csv"
        points.write_text("row,col,facies\n10,20,1\n30,40,0\n", encoding="utf-8")
        out = tmp_path / "rep"
        assert run(["check", "--ti", truth_file, "--ensemble", ens,
                    "--baseline", base, "--data", points,
                    "--window", 16, "--out-dir", out]) == 0
        rep = json.loads((out / "report.json").read_text())
        validate_report(rep)
        assert "baseline" in rep
        assert len(rep["ensemble"]["f1"]["values"]) == 3
        assert (out / "semivariogram_major.csv").exists()

    def test_single_ti_ensemble_degenerate(self, tmp_path, truth_file):
        ens = tmp_path / "just_ti"
        ens.mkdir()
        (ens / "ti.gslib").write_text(truth_file.read_text(), encoding="utf-8")
        out = tmp_path / "rep"
        assert run(["check", "--ti", truth_file, "--ensemble", ens,
                    "--window", 16, "--out-dir", out]) == 0
        rep = json.loads((out / "report.json").read_text())
        assert "f1" not in rep["ensemble"]
        hist = rep["ensemble"]["proportions"]["histogram"]
        assert sum(hist["counts"]) == 1
        assert not any(any(row) for row in rep["ensemble"]["entropy"]["map"])

    def test_empty_ensemble_dir(self, tmp_path, truth_file):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert run(["check", "--ti", truth_file, "--ensemble", empty]) == 1

    def test_shape_mismatch(self, tmp_path, truth_file):
        ens = tmp_path / "bad"
        ens.mkdir()
        (ens / "g.gslib").write_text("2 2\n1\nfacies\n0 1 1 0\n", encoding="utf-8")
        assert run(["check", "--ti", truth_file, "--ensemble", ens]) == 1


class TestExperiment:
    def test_counts_and_determinism(self, tmp_path):
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        common = ["experiment", "--truth", "seed:12345", "--n-values", "2,4",
                  "--per-n", 2, "--unconditional-count", 2, "--seed", 5,
                  "--max-evals", 120, "--restarts", 1, "--window", 16]
        assert run(common + ["--out", out1]) == 0
        assert run(common + ["--out", out2]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        rep = json.loads(out1.read_text())
        assert [c["n_points"] for c in rep["cases"]] == [2, 4]
        assert sum(len(c["realization_seeds"]) for c in rep["cases"]) == 4
        assert rep["summary"]["columns"] == ["TI", "2", "4"]
