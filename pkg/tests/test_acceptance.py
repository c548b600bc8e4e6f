"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings. Budgets are asserted, not aspirational.
"""

import json
import time
import numpy as np
import pytest
import yaml

from exemvad.cli import main
from exemvad.exemplar import ExemplarSource, select_exemplars
from exemvad.fuse import build_fused_model, score_fused
from exemvad.geometry import Rect
from exemvad.ingest import VideoMeta
from exemvad.metrics import EvalConfig, frame_auc, rbdc, tbdc
from exemvad.textdist import MockEmbedBackend, embed, sentence_distance

from oracles import (
    crop_window_reference,
    frame_auc_reference,
    rbdc_reference,
    tbdc_reference,
)


def _report(criterion: str, started: float, budget: float) -> None:
    elapsed = time.monotonic() - started
    assert elapsed < budget, f"{criterion} exceeded its {budget}s budget ({elapsed:.2f}s)"
    print(f"[ACCEPTANCE] {criterion}: PASS in {elapsed:.2f}s (budget {budget:.0f}s)")


@pytest.fixture(scope="module")
def benchmark_ws(tmp_path_factory):
    """The end-to-end synthetic benchmark, run once through the CLI."""
    root = tmp_path_factory.mktemp("acceptance")
    cfg_path = root / "config.yaml"
    cfg_path.write_text(yaml.safe_dump({"workspace": str(root / "data"), "seed": 42}))
    started = time.monotonic()
    exit_code = main(["--config", str(cfg_path), "run"])
    elapsed = time.monotonic() - started
    assert exit_code == 0
    report = json.loads((root / "data" / "report.json").read_text())
    return {"root": root, "config": cfg_path, "report": report, "elapsed": elapsed}


class TestCropGeometryGoldenSuite:
    def test_crop_geometry_golden_suite(self):
        started = time.monotonic()
        from exemvad.cropper import crop_window

        meta = VideoMeta(video_id="w", width=1280, height=720, frames=10, fps=30.0)
        window = crop_window(Rect(100, 100, 200, 180), Rect(120, 110, 220, 200), meta)
        assert window.as_tuple() == pytest.approx((0.0, 0.0, 460.0, 335.0), abs=1e-9)

        rng = np.random.default_rng(20240901)
        for _ in range(24):
            frame_w = int(rng.integers(480, 4000))
            frame_h = int(rng.integers(270, 3000))
            x1, y1 = rng.uniform(0, frame_w * 0.8), rng.uniform(0, frame_h * 0.8)
            bw, bh = rng.uniform(5, frame_w * 0.4), rng.uniform(5, frame_h * 0.4)
            dx, dy = rng.uniform(-60, 60), rng.uniform(-60, 60)
            a = (x1, y1, x1 + bw, y1 + bh)
            b = (x1 + dx, y1 + dy, x1 + bw + dx, y1 + bh + dy)
            case_meta = VideoMeta(video_id="g", width=frame_w, height=frame_h, frames=10, fps=30.0)
            got = crop_window(Rect(*a), Rect(*b), case_meta).as_tuple()
            assert got == pytest.approx(crop_window_reference(a, b, frame_w, frame_h), abs=1e-9)
        _report("crop geometry golden suite (25 cases)", started, budget=1.0)


class TestExemplarProperties:
    def test_exemplar_selection_properties(self):
        started = time.monotonic()
        rng = np.random.default_rng(42)
        vectors = rng.normal(size=(1000, 16))
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        stream = [
            (vectors[i], f"s{i}", ExemplarSource("v", f"u{i}", 0)) for i in range(len(vectors))
        ]
        dist = sentence_distance("cosine")
        built = select_exemplars(stream, th=0.65, dist=dist)
        matrix = np.stack([e.embedding for e in built.entries])
        gram = 1.0 - matrix @ matrix.T
        np.fill_diagonal(gram, np.inf)
        assert gram.min() > 0.65, "pairwise separation violated"
        assert len(built.rejections) == 1000 - len(built)
        for rejection in built.rejections:
            assert rejection.nearest_distance <= 0.65
        again = select_exemplars(stream, th=0.65, dist=dist)
        assert [e.source.unit_id for e in again.entries] == [e.source.unit_id for e in built.entries]
        admitted = [int(e.source.unit_id[1:]) for e in built.entries]
        assert admitted == PINNED_1000_SEED42[: len(admitted)]
        assert len(admitted) == len(PINNED_1000_SEED42)
        _report("exemplar selection properties (1000 vectors, th=0.65)", started, budget=5.0)


# selection order frozen from the first oracle run over seed-42 unit vectors
PINNED_1000_SEED42 = [
    0, 2, 3, 4, 5, 6, 7, 10, 11, 13, 15, 17, 19, 23, 25, 29, 35, 37, 45, 48,
    49, 91, 100, 101, 105, 107, 112, 131, 145, 216, 232, 262, 328, 341, 380,
    546, 553, 583, 864, 882, 954,
]


class TestScoringInvariants:
    def test_scoring_invariants_and_worked_examples(self):
        started = time.monotonic()
        from exemvad.describe import DescriptionRecord
        from exemvad.exemplar import Exemplar, ExemplarModel, ExemplarSet
        from exemvad.score import score_unit

        class TableBackend(MockEmbedBackend):
            def __init__(self, table):
                self.table = table
                self.dim = len(next(iter(table.values())))
                self.backend_id = "table"

            def embed_batch(self, texts):
                return np.stack([np.asarray(self.table[t], dtype=np.float64) for t in texts])

        def model_of(vectors):
            entries = [
                Exemplar(embedding=np.asarray(v, dtype=np.float64), text=f"e{i}",
                         source=ExemplarSource("v", f"u{i}", 0))
                for i, v in enumerate(vectors)
            ]
            s = ExemplarSet(kind="single", th=0.65, distance_kind="cosine", entries=entries)
            return ExemplarModel(pair_set=ExemplarSet(kind="pair", th=0.65, distance_kind="cosine",
                                                      entries=list(entries)),
                                 single_set=s, th=0.65, distance_kind="cosine",
                                 dim=len(vectors[0]), embed_backend_id="table")

        rec = lambda text: DescriptionRecord(unit_id="u", text=text, backend_id="t",
                                             prompt_hash="", anchor_frame=0)
        # worked examples: 0, 1, 0.29289 +- 1e-5
        backend = TableBackend({"q": [1.0, 0.0]})
        assert score_unit(rec("q"), "single", model_of([[1.0, 0.0], [0.0, 1.0]]), backend).score \
            == pytest.approx(0.0, abs=1e-5)
        assert score_unit(rec("q"), "single", model_of([[0.0, 1.0]]), backend).score \
            == pytest.approx(1.0, abs=1e-5)
        backend2 = TableBackend({"q": [np.sqrt(2) / 2, np.sqrt(2) / 2]})
        assert score_unit(rec("q"), "single", model_of([[1.0, 0.0], [0.0, 1.0]]), backend2).score \
            == pytest.approx(0.29289, abs=1e-5)

        # permutation invariance and monotone non-increase under exemplar addition
        rng = np.random.default_rng(7)
        vectors = rng.normal(size=(30, 8))
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        q = rng.normal(size=8)
        q /= np.linalg.norm(q)
        qb = TableBackend({"q": q.tolist()})
        base_score = score_unit(rec("q"), "single", model_of(vectors.tolist()), qb).score
        for _ in range(10):
            perm = rng.permutation(len(vectors))
            assert score_unit(rec("q"), "single", model_of(vectors[perm].tolist()), qb).score == base_score
        previous = None
        for n in range(1, 31):
            score = score_unit(rec("q"), "single", model_of(vectors[:n].tolist()), qb).score
            if previous is not None:
                assert score <= previous + 1e-12
            previous = score
        _report("scoring invariants + worked examples", started, budget=1.0)


class TestMetricOracleEquivalence:
    def test_metric_oracles_200_instances(self):
        started = time.monotonic()
        from exemvad.score import RegionScore
        from exemvad.ingest import GroundTruth, GTRegion

        cfg = EvalConfig()
        rng = np.random.default_rng(20250809)

        def random_instance():
            frames = int(rng.integers(2, 21))
            gt_regions = []
            for track_id in range(int(rng.integers(1, 4))):
                start = int(rng.integers(0, frames))
                x, y = float(rng.uniform(0, 80)), float(rng.uniform(0, 80))
                for f in range(start, min(start + int(rng.integers(1, 8)), frames)):
                    gt_regions.append(GTRegion(f, Rect(x, y, x + 20, y + 20), track_id))
            preds = []
            for f in range(frames):
                for _ in range(int(rng.integers(0, 6))):
                    if rng.uniform() < 0.5 and gt_regions:
                        g = gt_regions[int(rng.integers(0, len(gt_regions)))]
                        r = g.rect.translate(*rng.uniform(-8, 8, size=2))
                    else:
                        x, y = float(rng.uniform(0, 90)), float(rng.uniform(0, 90))
                        r = Rect(x, y, x + 15, y + 15)
                    preds.append(RegionScore(f, r, float(rng.uniform(0, 1))))
            return preds, GroundTruth.from_regions(gt_regions), frames

        for _ in range(200):
            preds, gt, frames = random_instance()
            pred_tuples = [(p.frame_idx, *p.rect.as_tuple(), p.score) for p in preds]
            gt_tuples = [(g.frame_idx, *g.rect.as_tuple(), g.gt_track_id) for g in gt.regions]
            got_r, _ = rbdc(preds, gt, cfg, frames=frames)
            assert got_r == pytest.approx(
                rbdc_reference(pred_tuples, gt_tuples, cfg.region_match_iou, frames), abs=1e-9
            )
            got_t, _ = tbdc(preds, gt, cfg, frames=frames)
            assert got_t == pytest.approx(
                tbdc_reference(pred_tuples, gt_tuples, cfg.region_match_iou,
                               cfg.track_detect_fraction, frames), abs=1e-9
            )
            labels = np.zeros(frames, dtype=int)
            for g in gt.regions:
                labels[g.frame_idx] = 1
            series = np.zeros(frames)
            for p in preds:
                series[p.frame_idx] = max(series[p.frame_idx], p.score)
            if 0 < labels.sum() < frames:
                assert frame_auc(series, labels) == pytest.approx(
                    frame_auc_reference(series.tolist(), labels.tolist()), abs=1e-9
                )
            # strictly increasing transform leaves all three unchanged
            mapped = [RegionScore(p.frame_idx, p.rect, float(np.exp(2.0 * p.score))) for p in preds]
            assert rbdc(mapped, gt, cfg, frames=frames)[0] == pytest.approx(got_r, abs=1e-9)
            assert tbdc(mapped, gt, cfg, frames=frames)[0] == pytest.approx(got_t, abs=1e-9)
        _report("metric oracle equivalence (200 instances)", started, budget=30.0)


class TestEndToEndBenchmark:
    def test_synthetic_benchmark_targets(self, benchmark_ws):
        report = benchmark_ws["report"]
        assert report["frame_auc"] >= 0.90, f"frame AUC {report['frame_auc']:.4f} < 0.90"
        assert report["rbdc"] >= 0.70, f"RBDC {report['rbdc']:.4f} < 0.70"
        assert report["tbdc"] >= 0.80, f"TBDC {report['tbdc']:.4f} < 0.80"
        assert benchmark_ws["elapsed"] < 120.0
        print(
            f"[ACCEPTANCE] end-to-end synthetic benchmark: PASS in {benchmark_ws['elapsed']:.2f}s "
            f"(budget 120s) frame_auc={report['frame_auc']:.3f} rbdc={report['rbdc']:.3f} "
            f"tbdc={report['tbdc']:.3f}"
        )


class TestFusionReduction:
    def test_description_only_fusion_bit_identical(self, benchmark_ws):
        started = time.monotonic()
        root = benchmark_ws["root"]
        fused_cfg = root / "fused.yaml"
        fused_cfg.write_text(yaml.safe_dump({
            "workspace": str(root / "data"),
            "seed": 42,
            "fusion": {"attributes": ["description"]},
        }))
        assert main(["--config", str(fused_cfg), "fuse-build"]) == 0
        assert main(["--config", str(fused_cfg), "fuse-score"]) == 0
        data = root / "data"
        compared = 0
        for video_dir in sorted((data / "test").iterdir()):
            if not video_dir.is_dir():
                continue
            base = {json.loads(l)["unit"]: json.loads(l)["score"]
                    for l in (video_dir / "scores.jsonl").read_text().splitlines()}
            fused = {json.loads(l)["unit"]: json.loads(l)["score"]
                     for l in (video_dir / "fused_scores.jsonl").read_text().splitlines()}
            assert base.keys() == fused.keys()
            for unit_id, score in base.items():
                assert fused[unit_id] == score, f"{video_dir.name}/{unit_id}"  # bitwise
                compared += 1
        assert compared > 0
        _report(f"fusion reduction bit-identical ({compared} units)", started, budget=30.0)

    def test_fusion_monotone_in_attribute_set(self):
        started = time.monotonic()
        from exemvad.fuse import AttributeVector

        rng = np.random.default_rng(99)
        backend = MockEmbedBackend()
        words = ["walk", "run", "sit", "stand", "drive", "cross", "person", "car", "grass", "box"]
        meta = VideoMeta(video_id="m", width=640, height=360, frames=240, fps=30.0)

        def rand_vector():
            text = " ".join(rng.choice(words, size=5))
            return AttributeVector(
                class_label=str(rng.choice(["person", "car", "dog"])),
                size=(float(rng.uniform(5, 200)), float(rng.uniform(5, 200))),
                location=(float(rng.uniform(0, 640)), float(rng.uniform(0, 360))),
                trajectory=rng.uniform(-10, 10, size=(30, 2)),
                description_embedding=embed(backend, text),
                text=text,
            )

        entries = [rand_vector() for _ in range(25)]
        attrs_small = ("description",)
        attrs_big = ("description", "class", "size", "grid", "trajectory")
        model_small = build_fused_model(entries, 0.65, attrs_small, meta)
        model_big = build_fused_model(model_small.entries, 0.65, attrs_big, meta)
        for _ in range(1000):
            q = rand_vector()
            assert score_fused(q, model_small)[0] <= score_fused(q, model_big)[0] + 1e-12
        _report("fusion monotonicity (1000 random units)", started, budget=30.0)


class TestAblationPlumbing:
    def test_bleu_and_meteor_rerun_without_error(self, tmp_path):
        started = time.monotonic()
        for kind in ("bleu", "meteor"):
            cfg_path = tmp_path / f"{kind}.yaml"
            cfg_path.write_text(yaml.safe_dump({
                "workspace": str(tmp_path / kind),
                "seed": 42,
                "exemplar": {"distance_kind": kind},
                "synth": {"write_frames": False},
            }))
            assert main(["--config", str(cfg_path), "run"]) == 0, kind
            report = json.loads((tmp_path / kind / "report.json").read_text())
            assert report["config"]["distance_kind"] == kind
        _report("ablation plumbing: bleu/meteor build+score+eval", started, budget=60.0)

    def test_distance_kinds_select_distinct_sets_on_paraphrase_corpus(self):
        started = time.monotonic()
        corpus = [
            "run run run run fast",
            "run slow",
            "the person is walking along the sidewalk",
            "along the sidewalk the person is walking",
            "sidewalk along walking is person the the",
        ]
        backend = MockEmbedBackend()
        sets = {}
        for kind in ("cosine", "bleu", "meteor"):
            stream = [
                (embed(backend, text), text, ExemplarSource("v", str(i), 0))
                for i, text in enumerate(corpus)
            ]
            built = select_exemplars(stream, th=0.65, dist=sentence_distance(kind))
            sets[kind] = tuple(e.text for e in built.entries)
        assert sets["bleu"] != sets["cosine"]
        assert sets["meteor"] != sets["cosine"]
        _report("ablation distances give distinct exemplar sets", started, budget=5.0)
