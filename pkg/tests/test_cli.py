from __future__ import annotations

from pathlib import Path

import pytest

from tracklite.cli import run

MINI = Path(__file__).parent / "data" / "kitti_mini"


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("sim") / "seq"
    assert run(["simulate", "--out", str(out), "--distance", "12", "--clutter", "0.3", "--seed", "4"]) == 0
    return out


class TestTrack:
    def test_smoke(self, sim_dir, tmp_path):
        out = tmp_path / "results.txt"
        assert run(["track", "--manifest", str(sim_dir / "manifest.csv"), "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) > 1

    def test_kitti_output(self, sim_dir, tmp_path):
        out = tmp_path / "r.txt"
        assert run(["track", "--manifest", str(sim_dir / "manifest.csv"), "--out", str(out), "--format", "kitti"]) == 0
        lines = out.read_text().splitlines()
        assert lines and all(len(ln.split()) == 18 for ln in lines)

    def test_identical_runs_are_byte_identical(self, sim_dir, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            assert run(["track", "--manifest", str(sim_dir / "manifest.csv"), "--out", str(p), "--seed", "3"]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_raw_mode(self, tmp_path):
        seq = tmp_path / "raw"
        assert run(["simulate", "--out", str(seq), "--mode", "raw", "--duration", "1", "--sigma", "0"]) == 0
        out = tmp_path / "t.csv"
        assert run(["track", "--manifest", str(seq / "manifest.csv"), "--out", str(out), "--mode", "raw"]) == 0
        assert len(out.read_text().splitlines()) > 1

    def test_config_override(self, sim_dir, tmp_path):
        out = tmp_path / "t.csv"
        args = ["track", "--manifest", str(sim_dir / "manifest.csv"), "--out", str(out)]
        assert run(args + ["--set", "tracker.promotion_threshold=1000"]) == 0
        assert len(out.read_text().splitlines()) == 1  # header only

    def test_invalid_config_value(self, sim_dir, tmp_path, capsys):
        args = ["track", "--manifest", str(sim_dir / "manifest.csv"), "--out", str(tmp_path / "t.csv")]
        assert run(args + ["--set", "cluster.tolerance=-1"]) == 1
        assert "tolerance" in capsys.readouterr().err

    def test_missing_manifest(self, tmp_path, capsys):
        assert run(["track", "--manifest", str(tmp_path / "no.csv"), "--out", str(tmp_path / "o")]) == 1
        assert "does not exist" in capsys.readouterr().err

    def test_runtime_failure_exit_code(self, sim_dir, tmp_path, capsys):
        # a pose log that ends early leaves later frames without a pose
        seq = tmp_path / "seq"
        seq.mkdir()
        for item in sim_dir.iterdir():
            target = seq / item.name
            if item.is_dir():
                target.mkdir()
                for f in item.iterdir():
                    (target / f.name).write_bytes(f.read_bytes())
            else:
                target.write_bytes(item.read_bytes())
        poses = (seq / "poses.csv").read_text().splitlines()
        (seq / "poses.csv").write_text("\n".join(poses[:5]) + "\n")
        assert run(["track", "--manifest", str(seq / "manifest.csv"), "--out", str(tmp_path / "o.csv")]) == 2
        assert "StalePose" in capsys.readouterr().err


class TestUsage:
    def test_unknown_flag(self, capsys):
        assert run(["track", "--bogus"]) == 1
        assert "usage:" in capsys.readouterr().err

    def test_unknown_command(self, capsys):
        assert run(["fly"]) == 1
        assert "usage:" in capsys.readouterr().err

    def test_help(self, capsys):
        assert run(["--help"]) == 0
        assert "benchmark" in capsys.readouterr().out


class TestEvaluate:
    def test_center3d(self, sim_dir, tmp_path, capsys):
        hyp = tmp_path / "t.csv"
        run(["track", "--manifest", str(sim_dir / "manifest.csv"), "--out", str(hyp)])
        capsys.readouterr()
        assert run(["evaluate", "--gt", str(sim_dir / "gt.csv"), "--hyp", str(hyp)]) == 0
        header, row = capsys.readouterr().out.splitlines()
        cols = dict(zip(header.split(","), row.split(",")))
        assert cols["class"] == "pedestrian"
        assert float(cols["mota"]) > 0.8
        assert float(cols["position_rmse"]) < 0.3

    def test_iou2d_writes_report(self, tmp_path, capsys):
        hyp = tmp_path / "r.txt"
        run(["track", "--manifest", str(MINI / "manifest.csv"), "--out", str(hyp), "--format", "kitti"])
        out = tmp_path / "ev.csv"
        assert run(["evaluate", "--gt", str(MINI / "label_02" / "0000.txt"), "--hyp", str(hyp),
                    "--match", "iou2d", "--out", str(out)]) == 0
        assert out.read_text().startswith("class,mota")
        assert "motp" in capsys.readouterr().out

    def test_mode_format_mismatch(self, sim_dir, capsys):
        assert run(["evaluate", "--gt", str(sim_dir / "gt.csv"), "--hyp", str(sim_dir / "gt.csv"),
                    "--match", "iou2d"]) == 1


class TestBenchmark:
    def test_reports_percentiles(self, capsys):
        assert run(["benchmark", "--tracks", "20", "--detections", "20", "--iters", "10",
                    "--points", "5000", "--boxes", "2", "--cluster-iters", "3"]) == 0
        out = capsys.readouterr().out
        for key in ("p50_ms", "p95_ms", "max_ms", "tracker_step", "clustering"):
            assert key in out

    def test_rejects_zero_iterations(self):
        assert run(["benchmark", "--iters", "0"]) == 1
