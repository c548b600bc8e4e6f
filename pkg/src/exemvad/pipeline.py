"""Stage orchestration over a workspace tree of per-video directories.

Layout:
    <workspace>/train/<video_id>/  meta.json, detections.jsonl, gt.jsonl,
                                   behaviors.jsonl, frames/, units.jsonl,
                                   crops.jsonl, descriptions.jsonl
    <workspace>/test/<video_id>/   ... plus scores.jsonl, regions.jsonl, frames.csv
    <workspace>/model.evad, fused_model.evad, report.json, fused_report.json

Every stage writes its artifact plus a manifest of input/output content hashes,
the config hash, and tool versions, so identical inputs reproduce identical
outputs (with mock backends).
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .config import PipelineConfig, api_key
from .cropper import (
    annotate_and_crop,
    build_crop_spec,
    crop_spec_from_json_dict,
    crop_spec_to_json_dict,
    load_frame_image,
)
from .describe import (
    DescribeBackend,
    DescriptionCache,
    DescriptionRecord,
    HttpDescribeBackend,
    MockDescribeBackend,
    build_prompt,
    describe_unit,
)
from .errors import StageDependencyError
from .exemplar import (
    ExemplarModel,
    ExemplarSource,
    load_model,
    save_model,
    select_exemplars,
)
from .fuse import (
    FusedModelBundle,
    FusionScales,
    attribute_vector_for_unit,
    build_fused_model,
    load_fused_model,
    save_fused_model,
    score_fused,
)
from .ingest import (
    GroundTruth,
    GTRegion,
    load_meta,
    read_detections,
    read_ground_truth,
    tracks_from_detections,
    write_detections,
    write_ground_truth,
)
from .metrics import EvalConfig, curve_to_json, frame_auc, rbdc, tbdc
from .pairing import PairingConfig, build_units, schedule_anchors, unit_from_json_dict, unit_to_json_dict
from .score import (
    RegionScore,
    ScoreRecord,
    project_scores,
    region_from_json_dict,
    region_to_json_dict,
    score_record_from_json_dict,
    score_record_to_json_dict,
    score_unit,
)
from .synth import load_behaviors, make_benchmark_suite, write_video
from .textdist import (
    EmbedBackend,
    HttpEmbedBackend,
    MockEmbedBackend,
    embed,
    save_embeddings,
    sentence_distance,
)

SPLITS = ("train", "test")


# ---------------------------------------------------------------------------
# Manifests and small I/O helpers
# ---------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fp:
        for chunk in iter(lambda: fp.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    directory: Path,
    stage: str,
    inputs: Iterable[Path],
    outputs: Iterable[Path],
    cfg: PipelineConfig,
) -> Path:
    manifest = {
        "stage": stage,
        "inputs": {p.name: _sha256(p) for p in sorted(inputs)},
        "outputs": {p.name: _sha256(p) for p in sorted(outputs)},
        "config_hash": cfg.config_hash(),
        "versions": {
            "exemvad": __version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
    }
    path = directory / f"{stage}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _require(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise StageDependencyError(f"missing {path}; run the {produced_by!r} stage first")
    return path


def video_dirs(cfg: PipelineConfig, split: str) -> list[Path]:
    split_dir = cfg.workspace_path / split
    if not split_dir.is_dir():
        raise StageDependencyError(
            f"missing {split_dir}; run the 'synth' stage or place ingested videos there"
        )
    return sorted(d for d in split_dir.iterdir() if d.is_dir() and (d / "meta.json").exists())


def _read_jsonl(path: Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fp:
        for line in fp:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _write_jsonl(path: Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        for rec in records:
            fp.write(json.dumps(rec) + "\n")


def pairing_config(cfg: PipelineConfig) -> PairingConfig:
    return PairingConfig(h=cfg.pairing.h, delta=cfg.pairing.delta, stride=cfg.pairing.stride)


def make_embed_backend(cfg: PipelineConfig) -> EmbedBackend:
    spec = cfg.backends.embed
    if spec == "mock":
        return MockEmbedBackend(dim=cfg.backends.embed_dim)
    return HttpEmbedBackend(spec, api_key=api_key())


def make_describe_backend(cfg: PipelineConfig, video_dir: Path) -> DescribeBackend:
    spec = cfg.backends.describe
    if spec == "mock":
        behaviors_path = _require(video_dir / "behaviors.jsonl", "synth")
        return MockDescribeBackend(load_behaviors(behaviors_path))
    return HttpDescribeBackend(spec, api_key=api_key())


def embed_texts(backend: EmbedBackend, texts: list[str]) -> np.ndarray:
    """Batched embedding with the same norm/dim contract as single embed()."""
    if not texts:
        return np.zeros((0, backend.dim or 0), dtype=np.float64)
    return np.stack([embed(backend, t) for t in texts])


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def stage_synth(cfg: PipelineConfig) -> dict:
    """Generate the seeded benchmark suite into workspace/train and workspace/test."""
    train, test = make_benchmark_suite(
        seed=cfg.seed,
        width=cfg.synth.width,
        height=cfg.synth.height,
        duration=cfg.synth.duration,
        fps=cfg.synth.fps,
    )
    pairing = pairing_config(cfg)
    counts = {"train": 0, "test": 0}
    for split, scenarios in (("train", train), ("test", test)):
        for scenario, meta in scenarios:
            out_dir = cfg.workspace_path / split / scenario.video_id
            write_video(scenario, meta, pairing, out_dir, write_frames=cfg.synth.write_frames)
            outputs = [out_dir / "meta.json", out_dir / "detections.jsonl",
                       out_dir / "gt.jsonl", out_dir / "behaviors.jsonl"]
            write_manifest(out_dir, "synth", [], outputs, cfg)
            counts[split] += 1
    return counts


def stage_ingest(cfg: PipelineConfig) -> int:
    """Validate and canonicalize detections/gt for every video in both splits."""
    done = 0
    for split in SPLITS:
        for video_dir in video_dirs(cfg, split):
            meta = load_meta(video_dir / "meta.json")
            det_path = _require(video_dir / "detections.jsonl", "synth")
            dets = read_detections(det_path, meta)
            with open(det_path, "w", encoding="utf-8") as fp:
                write_detections(dets, fp)
            gt_path = video_dir / "gt.jsonl"
            inputs = [video_dir / "meta.json", det_path]
            if gt_path.exists():
                gt = read_ground_truth(gt_path)
                with open(gt_path, "w", encoding="utf-8") as fp:
                    write_ground_truth(gt, fp)
                inputs.append(gt_path)
            write_manifest(video_dir, "ingest", inputs, inputs, cfg)
            done += 1
    return done


def stage_pair(cfg: PipelineConfig) -> int:
    pairing = pairing_config(cfg)
    done = 0
    for split in SPLITS:
        for video_dir in video_dirs(cfg, split):
            meta = load_meta(video_dir / "meta.json")
            det_path = _require(video_dir / "detections.jsonl", "synth")
            dets = read_detections(det_path, meta)
            by_frame: dict[int, list] = {}
            for det in dets:
                by_frame.setdefault(det.frame_idx, []).append(det)
            records = []
            for t in schedule_anchors(meta, pairing):
                for unit in build_units(by_frame.get(t, []), pairing, meta):
                    records.append(unit_to_json_dict(unit))
            out = video_dir / "units.jsonl"
            _write_jsonl(out, records)
            write_manifest(video_dir, "pair", [det_path, video_dir / "meta.json"], [out], cfg)
            done += 1
    return done


def stage_crop(cfg: PipelineConfig) -> int:
    done = 0
    for split in SPLITS:
        for video_dir in video_dirs(cfg, split):
            meta = load_meta(video_dir / "meta.json")
            det_path = _require(video_dir / "detections.jsonl", "synth")
            units_path = _require(video_dir / "units.jsonl", "pair")
            tracks = {t.object_id: t for t in tracks_from_detections(read_detections(det_path, meta))}
            specs = []
            units = [unit_from_json_dict(rec) for rec in _read_jsonl(units_path)]
            for unit in units:
                spec = build_crop_spec(
                    unit, tracks, meta, w_min=cfg.cropper.w_min, h_min=cfg.cropper.h_min
                )
                specs.append(spec)
            out = video_dir / "crops.jsonl"
            _write_jsonl(out, [crop_spec_to_json_dict(s) for s in specs])
            if cfg.cropper.save_images:
                crops_dir = video_dir / "crops"
                crops_dir.mkdir(exist_ok=True)
                frames_dir = video_dir / "frames"
                for unit, spec in zip(units, specs):
                    image_t = load_frame_image(frames_dir, spec.frame_t)
                    image_t2 = load_frame_image(frames_dir, spec.frame_t2)
                    pair = annotate_and_crop(image_t, image_t2, spec)
                    safe = unit.unit_id.replace(":", "_").replace("+", "-")
                    pair.image_t.save(crops_dir / f"{safe}_t.png")
                    pair.image_t2.save(crops_dir / f"{safe}_t2.png")
            write_manifest(video_dir, "crop", [det_path, units_path], [out], cfg)
            done += 1
    return done


def stage_describe(cfg: PipelineConfig) -> int:
    cache = DescriptionCache(cfg.workspace_path / "cache" / "describe")
    done = 0
    for split in SPLITS:
        for video_dir in video_dirs(cfg, split):
            units_path = _require(video_dir / "units.jsonl", "pair")
            crops_path = _require(video_dir / "crops.jsonl", "crop")
            units = [unit_from_json_dict(rec) for rec in _read_jsonl(units_path)]
            specs = {rec["unit"]: crop_spec_from_json_dict(rec) for rec in _read_jsonl(crops_path)}
            backend = make_describe_backend(cfg, video_dir)
            frames_dir = video_dir / "frames"

            namespace = f"{split}/{video_dir.name}"

            def _one(unit) -> DescriptionRecord:
                prompts = build_prompt(unit)
                crops = None
                if backend.needs_images:
                    spec = specs[unit.unit_id]
                    crops = annotate_and_crop(
                        load_frame_image(frames_dir, spec.frame_t),
                        load_frame_image(frames_dir, spec.frame_t2),
                        spec,
                    )
                return describe_unit(backend, unit, crops, prompts, cache=cache,
                                     cache_namespace=namespace)

            with ThreadPoolExecutor(max_workers=cfg.backends.workers) as pool:
                records = list(pool.map(_one, units))
            _write_jsonl(
                video_dir / "descriptions.jsonl",
                [
                    {"unit": r.unit_id, "t": r.anchor_frame, "text": r.text, "backend": r.backend_id}
                    for r in records
                ],
            )
            inputs = [units_path, crops_path]
            if backend.needs_images is False and (video_dir / "behaviors.jsonl").exists():
                inputs.append(video_dir / "behaviors.jsonl")
            write_manifest(video_dir, "describe", inputs, [video_dir / "descriptions.jsonl"], cfg)
            done += 1
    return done


def _load_descriptions(video_dir: Path) -> list[dict]:
    return _read_jsonl(_require(video_dir / "descriptions.jsonl", "describe"))


def stage_build(cfg: PipelineConfig) -> Path:
    """Build E_pair and E_single from the training split, in lexicographic video order."""
    backend = make_embed_backend(cfg)
    dist = sentence_distance(cfg.exemplar.distance_kind)
    streams = {"pair": [], "single": []}
    describe_backends = set()
    for video_dir in video_dirs(cfg, "train"):
        units = {rec["unit"]: rec for rec in _read_jsonl(_require(video_dir / "units.jsonl", "pair"))}
        descriptions = _load_descriptions(video_dir)
        texts = [rec["text"] for rec in descriptions]
        vectors = embed_texts(backend, texts)
        save_embeddings(video_dir / "embeddings.bin", [rec["unit"] for rec in descriptions], vectors)
        for rec, vector in zip(descriptions, vectors):
            kind = units[rec["unit"]]["kind"]
            source = ExemplarSource(
                video_id=video_dir.name, unit_id=rec["unit"], anchor_frame=rec["t"]
            )
            streams[kind].append((vector, rec["text"], source))
            describe_backends.add(rec.get("backend", ""))
    pair_set = select_exemplars(streams["pair"], cfg.exemplar.th, dist, kind="pair")
    single_set = select_exemplars(streams["single"], cfg.exemplar.th, dist, kind="single")
    model = ExemplarModel(
        pair_set=pair_set,
        single_set=single_set,
        th=cfg.exemplar.th,
        distance_kind=cfg.exemplar.distance_kind,
        dim=backend.dim,
        embed_backend_id=backend.backend_id,
        describe_backend_id=",".join(sorted(describe_backends)),
        config_hash=cfg.config_hash(),
    )
    out = cfg.workspace_path / "model.evad"
    save_model(model, out)
    inputs = [d / "descriptions.jsonl" for d in video_dirs(cfg, "train")]
    write_manifest(cfg.workspace_path, "build", inputs, [out], cfg)
    return out


def stage_score(cfg: PipelineConfig) -> int:
    model_path = _require(cfg.workspace_path / "model.evad", "build")
    model = load_model(model_path)
    backend = make_embed_backend(cfg)
    done = 0
    for video_dir in video_dirs(cfg, "test"):
        meta = load_meta(video_dir / "meta.json")
        units = {
            rec["unit"]: unit_from_json_dict(rec)
            for rec in _read_jsonl(_require(video_dir / "units.jsonl", "pair"))
        }
        tracks = {
            t.object_id: t
            for t in tracks_from_detections(
                read_detections(_require(video_dir / "detections.jsonl", "synth"), meta)
            )
        }
        records: list[ScoreRecord] = []
        descriptions = _load_descriptions(video_dir)
        if model.set_for_kind("single").distance().uses_embeddings:
            query_vectors = embed_texts(backend, [rec["text"] for rec in descriptions])
            save_embeddings(
                video_dir / "embeddings.bin", [rec["unit"] for rec in descriptions], query_vectors
            )
        for rec in descriptions:
            unit = units[rec["unit"]]
            description = DescriptionRecord(
                unit_id=rec["unit"],
                text=rec["text"],
                backend_id=rec.get("backend", ""),
                prompt_hash="",
                anchor_frame=rec["t"],
            )
            records.append(score_unit(description, unit.kind, model, backend))
        regions, series = project_scores(records, units, tracks, meta)
        _write_jsonl(video_dir / "scores.jsonl", [score_record_to_json_dict(r) for r in records])
        _write_jsonl(video_dir / "regions.jsonl", [region_to_json_dict(r) for r in regions])
        with open(video_dir / "frames.csv", "w", encoding="utf-8", newline="") as fp:
            writer = csv.writer(fp)
            writer.writerow(["frame_idx", "score"])
            for frame_idx, value in enumerate(series):
                writer.writerow([frame_idx, f"{value:.10g}"])
        outputs = [video_dir / "scores.jsonl", video_dir / "regions.jsonl", video_dir / "frames.csv"]
        if (video_dir / "embeddings.bin").exists():
            outputs.append(video_dir / "embeddings.bin")
        write_manifest(
            video_dir,
            "score",
            [video_dir / "descriptions.jsonl", video_dir / "units.jsonl", model_path],
            outputs,
            cfg,
        )
        done += 1
    return done


def _read_frames_csv(path: Path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fp:
        reader = csv.reader(fp)
        header = next(reader, None)
        values = [float(row[1]) for row in reader if row]
    return np.asarray(values, dtype=np.float64)


def pooled_test_inputs(cfg: PipelineConfig, regions_name: str = "regions.jsonl",
                       frames_name: str = "frames.csv"):
    """Concatenate test videos on one timeline by offsetting frame indices."""
    all_regions: list[RegionScore] = []
    gt_regions = []
    series_parts = []
    offset = 0
    track_ids: dict[tuple[str, int], int] = {}
    for video_dir in video_dirs(cfg, "test"):
        meta = load_meta(video_dir / "meta.json")
        for rec in _read_jsonl(_require(video_dir / regions_name, "score")):
            region = region_from_json_dict(rec)
            all_regions.append(
                RegionScore(frame_idx=region.frame_idx + offset, rect=region.rect, score=region.score)
            )
        gt = read_ground_truth(_require(video_dir / "gt.jsonl", "synth"))
        for region in gt.regions:
            key = (video_dir.name, region.gt_track_id)
            pooled_id = track_ids.setdefault(key, len(track_ids))
            gt_regions.append(
                GTRegion(frame_idx=region.frame_idx + offset, rect=region.rect, gt_track_id=pooled_id)
            )
        series_parts.append(_read_frames_csv(_require(video_dir / frames_name, "score")))
        offset += meta.frames
    series = np.concatenate(series_parts) if series_parts else np.zeros(0)
    pooled_gt = GroundTruth.from_regions(gt_regions)
    labels = np.zeros(offset, dtype=np.int64)
    for region in pooled_gt.regions:
        labels[region.frame_idx] = 1
    return all_regions, pooled_gt, series, labels, offset


def stage_eval(cfg: PipelineConfig, fused: bool = False, curves_csv: bool = False) -> dict:
    regions_name = "fused_regions.jsonl" if fused else "regions.jsonl"
    frames_name = "fused_frames.csv" if fused else "frames.csv"
    regions, gt, series, labels, total_frames = pooled_test_inputs(cfg, regions_name, frames_name)
    eval_cfg = EvalConfig(region_match_iou=cfg.eval.beta, track_detect_fraction=cfg.eval.gamma)
    rbdc_auc, rbdc_curve = rbdc(regions, gt, eval_cfg, frames=total_frames)
    tbdc_auc, tbdc_curve = tbdc(regions, gt, eval_cfg, frames=total_frames)
    auc = frame_auc(series, labels)
    report = {
        "rbdc": rbdc_auc,
        "tbdc": tbdc_auc,
        "frame_auc": auc,
        "config": {
            "beta": cfg.eval.beta,
            "gamma": cfg.eval.gamma,
            "fp_rate_range": [0.0, 1.0],
            "distance_kind": cfg.exemplar.distance_kind,
            "th": cfg.exemplar.th,
            "fused": fused,
        },
        "frames": total_frames,
        "curves": {"rbdc": curve_to_json(rbdc_curve), "tbdc": curve_to_json(tbdc_curve)},
    }
    out = cfg.workspace_path / ("fused_report.json" if fused else "report.json")
    out.write_text(json.dumps(report, indent=2) + "\n")
    outputs = [out]
    if curves_csv:
        for name, curve in (("rbdc", rbdc_curve), ("tbdc", tbdc_curve)):
            curve_path = cfg.workspace_path / f"{'fused_' if fused else ''}{name}_curve.csv"
            with open(curve_path, "w", encoding="utf-8", newline="") as fp:
                writer = csv.writer(fp)
                writer.writerow(["threshold", "tpr", "fp_per_frame"])
                for point in curve:
                    writer.writerow([point.threshold, point.tpr, point.fp_per_frame])
            outputs.append(curve_path)
    inputs = []
    for video_dir in video_dirs(cfg, "test"):
        inputs.extend([video_dir / regions_name, video_dir / frames_name, video_dir / "gt.jsonl"])
    write_manifest(cfg.workspace_path, "fused-eval" if fused else "eval", inputs, outputs, cfg)
    return report


def _attribute_stream(cfg: PipelineConfig, video_dir: Path, backend: EmbedBackend,
                      need_embeddings: bool):
    meta = load_meta(video_dir / "meta.json")
    units = {
        rec["unit"]: unit_from_json_dict(rec)
        for rec in _read_jsonl(_require(video_dir / "units.jsonl", "pair"))
    }
    tracks = {
        t.object_id: t
        for t in tracks_from_detections(
            read_detections(_require(video_dir / "detections.jsonl", "synth"), meta)
        )
    }
    descriptions = _load_descriptions(video_dir)
    texts = [rec["text"] for rec in descriptions]
    vectors = embed_texts(backend, texts) if need_embeddings else [None] * len(texts)
    out = []
    for rec, vector in zip(descriptions, vectors):
        unit = units[rec["unit"]]
        out.append(
            (
                unit,
                attribute_vector_for_unit(
                    unit, tracks, meta, description_embedding=vector, text=rec["text"]
                ),
                meta,
            )
        )
    return out


def stage_fuse_build(cfg: PipelineConfig) -> Path:
    """Build per-kind fused sets (pair/single) from the training split."""
    backend = make_embed_backend(cfg)
    need_embeddings = "description" in cfg.fusion.attributes
    vectors = {"pair": [], "single": []}
    meta = None
    for video_dir in video_dirs(cfg, "train"):
        for unit, vector, video_meta in _attribute_stream(cfg, video_dir, backend, need_embeddings):
            vectors[unit.kind].append(vector)
            meta = video_meta
    if meta is None:
        raise StageDependencyError("no training videos found; run 'synth' or 'ingest' first")
    scales = FusionScales(trajectory_scale=cfg.fusion.trajectory_scale, grid=cfg.fusion.grid)
    bundle = FusedModelBundle(
        pair_set=build_fused_model(vectors["pair"], cfg.exemplar.th, cfg.fusion.attributes, meta, scales),
        single_set=build_fused_model(vectors["single"], cfg.exemplar.th, cfg.fusion.attributes, meta, scales),
    )
    out = cfg.workspace_path / "fused_model.evad"
    save_fused_model(bundle, out)
    inputs = [d / "descriptions.jsonl" for d in video_dirs(cfg, "train")]
    write_manifest(cfg.workspace_path, "fuse-build", inputs, [out], cfg)
    return out


def stage_fuse_score(cfg: PipelineConfig) -> int:
    model_path = _require(cfg.workspace_path / "fused_model.evad", "fuse-build")
    bundle = load_fused_model(model_path)
    backend = make_embed_backend(cfg)
    need_embeddings = "description" in bundle.single_set.attributes
    done = 0
    for video_dir in video_dirs(cfg, "test"):
        meta = load_meta(video_dir / "meta.json")
        units = {
            rec["unit"]: unit_from_json_dict(rec)
            for rec in _read_jsonl(_require(video_dir / "units.jsonl", "pair"))
        }
        tracks = {
            t.object_id: t
            for t in tracks_from_detections(
                read_detections(_require(video_dir / "detections.jsonl", "synth"), meta)
            )
        }
        records: list[ScoreRecord] = []
        for unit, vector, _ in _attribute_stream(cfg, video_dir, backend, need_embeddings):
            model = bundle.set_for_kind(unit.kind)
            distance, nearest_idx = score_fused(vector, model)
            records.append(
                ScoreRecord(
                    unit_id=unit.unit_id,
                    kind=unit.kind,
                    anchor_frame=unit.anchor_frame,
                    score=distance,
                    nearest_index=nearest_idx,
                    nearest_text=model.entries[nearest_idx].text,
                    own_text=vector.text,
                )
            )
        regions, series = project_scores(records, units, tracks, meta)
        _write_jsonl(video_dir / "fused_scores.jsonl", [score_record_to_json_dict(r) for r in records])
        _write_jsonl(video_dir / "fused_regions.jsonl", [region_to_json_dict(r) for r in regions])
        with open(video_dir / "fused_frames.csv", "w", encoding="utf-8", newline="") as fp:
            writer = csv.writer(fp)
            writer.writerow(["frame_idx", "score"])
            for frame_idx, value in enumerate(series):
                writer.writerow([frame_idx, f"{value:.10g}"])
        write_manifest(
            video_dir,
            "fuse-score",
            [video_dir / "descriptions.jsonl", model_path],
            [video_dir / "fused_scores.jsonl", video_dir / "fused_regions.jsonl", video_dir / "fused_frames.csv"],
            cfg,
        )
        done += 1
    return done


def collect_explanations(cfg: PipelineConfig, top: int = 5) -> list[tuple[ScoreRecord, list[str]]]:
    scored = []
    for video_dir in video_dirs(cfg, "test"):
        units = {rec["unit"]: rec for rec in _read_jsonl(_require(video_dir / "units.jsonl", "pair"))}
        for rec in _read_jsonl(_require(video_dir / "scores.jsonl", "score")):
            record = score_record_from_json_dict(rec)
            members = units.get(record.unit_id, {}).get("members", [])
            scored.append((record, [f"{video_dir.name}/{m}" for m in members]))
    scored.sort(key=lambda pair: pair[0].score, reverse=True)
    return scored[:top]


def run_all(cfg: PipelineConfig) -> dict:
    """Chain the stages end to end and return the evaluation report."""
    if cfg.synth.enabled:
        stage_synth(cfg)
    stage_ingest(cfg)
    stage_pair(cfg)
    stage_crop(cfg)
    stage_describe(cfg)
    stage_build(cfg)
    stage_score(cfg)
    return stage_eval(cfg)
