"""CLI subcommands, exit codes, stage manifests, and stage-chaining equivalence."""

import hashlib
import json

import pytest
import yaml

from exemvad.cli import main

DURATION = 240


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One synth+pair+crop+describe workspace shared by the read-only tests."""
    ws = tmp_path_factory.mktemp("ws")
    cfg_path = ws / "config.yaml"
    cfg_path.write_text(yaml.safe_dump({
        "workspace": str(ws / "data"),
        "seed": 42,
        "synth": {"write_frames": False},
    }))
    assert main(["--config", str(cfg_path), "run"]) == 0
    return ws


def read_report(ws):
    return json.loads((ws / "data" / "report.json").read_text())


class TestRun:
    def test_report_written_with_passing_metrics(self, workspace):
        report = read_report(workspace)
        assert report["frame_auc"] >= 0.90
        assert report["rbdc"] >= 0.70
        assert report["tbdc"] >= 0.80

    def test_report_logs_eval_config(self, workspace):
        report = read_report(workspace)
        assert report["config"]["beta"] == 0.1
        assert report["config"]["gamma"] == 0.1
        assert report["config"]["th"] == 0.65

    def test_artifacts_and_manifests_exist(self, workspace):
        data = workspace / "data"
        assert (data / "model.evad").exists()
        for split in ("train", "test"):
            for video_dir in sorted((data / split).iterdir()):
                if not video_dir.is_dir():
                    continue
                assert (video_dir / "units.jsonl").exists()
                assert (video_dir / "crops.jsonl").exists()
                assert (video_dir / "descriptions.jsonl").exists()
                assert (video_dir / "pair.manifest.json").exists()
        for video_dir in sorted((data / "test").iterdir()):
            if video_dir.is_dir():
                for name in ("scores.jsonl", "regions.jsonl", "frames.csv"):
                    assert (video_dir / name).exists()

    def test_units_wire_format(self, workspace):
        video_dir = next(d for d in sorted((workspace / "data" / "train").iterdir()) if d.is_dir())
        rec = json.loads((video_dir / "units.jsonl").read_text().splitlines()[0])
        assert {"unit", "kind", "members", "t", "delta"} <= set(rec)
        assert rec["kind"] in ("pair", "single")

    def test_scores_wire_format(self, workspace):
        video_dir = next(d for d in sorted((workspace / "data" / "test").iterdir()) if d.is_dir())
        rec = json.loads((video_dir / "scores.jsonl").read_text().splitlines()[0])
        assert {"unit", "kind", "t", "score", "nearest_text", "own_text"} <= set(rec)


class TestExplain:
    def test_top_blocks_sorted_descending(self, workspace, capsys):
        cfg = workspace / "config.yaml"
        assert main(["--config", str(cfg), "explain", "--top", "5"]) == 0
        out = capsys.readouterr().out
        scores = [float(line.split("score:")[1]) for line in out.splitlines() if "score:" in line]
        assert len(scores) == 5
        assert scores == sorted(scores, reverse=True)
        assert "observed:" in out and "nearest:" in out


class TestManifests:
    def test_rerun_stage_reproduces_output_hashes(self, workspace):
        cfg = workspace / "config.yaml"
        video_dir = next(d for d in sorted((workspace / "data" / "train").iterdir()) if d.is_dir())
        manifest_path = video_dir / "pair.manifest.json"
        before = json.loads(manifest_path.read_text())
        assert main(["--config", str(cfg), "pair"]) == 0
        after = json.loads(manifest_path.read_text())
        assert before["outputs"] == after["outputs"]
        assert before["inputs"] == after["inputs"]

    def test_manifest_hashes_match_files(self, workspace):
        video_dir = next(d for d in sorted((workspace / "data" / "train").iterdir()) if d.is_dir())
        manifest = json.loads((video_dir / "pair.manifest.json").read_text())
        for name, digest in manifest["outputs"].items():
            assert hashlib.sha256((video_dir / name).read_bytes()).hexdigest() == digest

    def test_manifest_carries_config_hash_and_versions(self, workspace):
        video_dir = next(d for d in sorted((workspace / "data" / "train").iterdir()) if d.is_dir())
        manifest = json.loads((video_dir / "pair.manifest.json").read_text())
        assert manifest["config_hash"]
        assert "exemvad" in manifest["versions"]


class TestStageChainingEquivalence:
    def test_run_equals_manual_stages(self, tmp_path):
        cfg_a = tmp_path / "a.yaml"
        cfg_a.write_text(yaml.safe_dump({
            "workspace": str(tmp_path / "a"),
            "seed": 11,
            "synth": {"write_frames": False},
        }))
        cfg_b = tmp_path / "b.yaml"
        cfg_b.write_text(yaml.safe_dump({
            "workspace": str(tmp_path / "b"),
            "seed": 11,
            "synth": {"write_frames": False},
        }))
        assert main(["--config", str(cfg_a), "run"]) == 0
        for stage in ("synth", "ingest", "pair", "crop", "describe", "build", "score", "eval"):
            assert main(["--config", str(cfg_b), stage]) == 0, stage
        report_a = json.loads((tmp_path / "a" / "report.json").read_text())
        report_b = json.loads((tmp_path / "b" / "report.json").read_text())
        assert report_a == report_b
        model_a = (tmp_path / "a" / "model.evad").read_bytes()
        model_b = (tmp_path / "b" / "model.evad").read_bytes()
        assert model_a == model_b


class TestErrors:
    def test_config_validation_error_exit_code(self, tmp_path):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text(yaml.safe_dump({"workspace": str(tmp_path / "w"), "exemplar": {"th": 0.0}}))
        assert main(["--config", str(cfg), "build"]) == 2

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text(yaml.safe_dump({"workspace": str(tmp_path / "w"), "exemplars": {}}))
        assert main(["--config", str(cfg), "synth"]) == 2

    def test_missing_stage_dependency_exit_code(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(yaml.safe_dump({
            "workspace": str(tmp_path / "w"),
            "synth": {"write_frames": False},
        }))
        assert main(["--config", str(cfg), "synth"]) == 0
        # scoring before build must name the missing stage
        assert main(["--config", str(cfg), "score"]) == 3

    def test_empty_workspace_pair_fails_with_dependency_error(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(yaml.safe_dump({"workspace": str(tmp_path / "nothing")}))
        assert main(["--config", str(cfg), "pair"]) == 3


class TestEnvOverrides:
    def test_describe_url_from_env(self, tmp_path, monkeypatch):
        from exemvad.config import load_config

        monkeypatch.setenv("EXEMVAD_DESCRIBE_URL", "http://example:9999")
        cfg = load_config(None)
        assert cfg.backends.describe == "http://example:9999"

    def test_cli_flag_overrides(self, tmp_path, monkeypatch):
        monkeypatch.delenv("EXEMVAD_DESCRIBE_URL", raising=False)
        from exemvad.cli import _build_parser, _configure

        args = _build_parser().parse_args(
            ["--stage-dir", str(tmp_path), "--workers", "2", "--backend-embed", "mock", "synth"]
        )
        cfg = _configure(args)
        assert cfg.workspace == str(tmp_path)
        assert cfg.backends.workers == 2


class TestOptionalArtifacts:
    def test_eval_curves_csv(self, workspace):
        cfg = workspace / "config.yaml"
        assert main(["--config", str(cfg), "eval", "--curves-csv"]) == 0
        for name in ("rbdc_curve.csv", "tbdc_curve.csv"):
            lines = (workspace / "data" / name).read_text().splitlines()
            assert lines[0] == "threshold,tpr,fp_per_frame"
            assert len(lines) > 1

    def test_crop_save_images(self, tmp_path):
        import yaml as _yaml

        cfg = tmp_path / "c.yaml"
        cfg.write_text(_yaml.safe_dump({
            "workspace": str(tmp_path / "w"),
            "seed": 13,
            "synth": {"write_frames": True},
        }))
        assert main(["--config", str(cfg), "synth"]) == 0
        assert main(["--config", str(cfg), "pair"]) == 0
        assert main(["--config", str(cfg), "crop", "--save-images"]) == 0
        video_dir = next(d for d in sorted((tmp_path / "w" / "train").iterdir()) if d.is_dir())
        crops = sorted((video_dir / "crops").glob("*_t.png"))
        assert crops, "crop --save-images wrote no images"
        from PIL import Image

        # both frames of a unit share the window, hence identical dimensions
        partner = crops[0].with_name(crops[0].name.replace("_t.png", "_t2.png"))
        with Image.open(crops[0]) as img_t, Image.open(partner) as img_t2:
            assert img_t.size == img_t2.size
            assert img_t.size[0] > 0 and img_t.size[1] > 0


class TestDescribeCacheNamespacing:
    def test_same_unit_id_across_videos_not_conflated(self, tmp_path):
        from exemvad.describe import DescriptionCache, MockDescribeBackend, build_prompt, describe_unit
        from exemvad.pairing import SINGLE, Unit

        cache = DescriptionCache(tmp_path / "cache")
        unit = Unit(unit_id="0:1", kind=SINGLE, members=("1",), anchor_frame=0, delta=30,
                    class_labels=("person",))
        backend_a = MockDescribeBackend({"0:1": "walk_sidewalk"})
        backend_b = MockDescribeBackend({"0:1": "crouch_ground"})
        rec_a = describe_unit(backend_a, unit, None, build_prompt(unit), cache=cache,
                              cache_namespace="test/video_a")
        rec_b = describe_unit(backend_b, unit, None, build_prompt(unit), cache=cache,
                              cache_namespace="test/video_b")
        assert rec_a.text != rec_b.text
