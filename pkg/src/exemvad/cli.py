"""Offline command-line entry point: one subcommand per pipeline stage.

Exit codes: 0 success, 1 unexpected failure, then per error class: 2 config,
3 missing stage dependency, 4 malformed input data, 5 backend/transport,
6 model format, 7 image I/O, 8 undefined evaluation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import __version__, pipeline
from .config import PipelineConfig, load_config
from .errors import ExemvadError
from .score import explain


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exemvad",
        description="Exemplar-based video anomaly detection over activity descriptions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", metavar="PATH", help="YAML pipeline config")
    parser.add_argument("--stage-dir", metavar="PATH", help="workspace directory override")
    parser.add_argument("--workers", type=int, metavar="N", help="bounded in-flight backend requests")
    parser.add_argument("--seed", type=int, metavar="N", help="seed override for all randomness")
    parser.add_argument("--backend-describe", metavar="URL|mock", help="describe backend override")
    parser.add_argument("--backend-embed", metavar="URL|mock", help="embed backend override")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", help="generate the seeded synthetic benchmark suite")
    sub.add_parser("ingest", help="validate and canonicalize detections and ground truth")
    sub.add_parser("pair", help="form pair/single units per anchor frame")
    crop = sub.add_parser("crop", help="compute crop windows (and optionally crop images)")
    crop.add_argument("--save-images", action="store_true", help="write annotated crop PNGs")
    sub.add_parser("describe", help="obtain one sentence per unit from the describe backend")
    sub.add_parser("build", help="build the exemplar model from the training split")
    sub.add_parser("score", help="score the test split against the model")
    sub.add_parser("fuse-build", help="build the combined multi-attribute model")
    sub.add_parser("fuse-score", help="score the test split against the fused model")
    evalp = sub.add_parser("eval", help="compute RBDC/TBDC/frame-AUC and write report.json")
    evalp.add_argument("--fused", action="store_true", help="evaluate the fused pipeline outputs")
    evalp.add_argument("--curves-csv", action="store_true", help="also dump operating-point curves as CSV")
    explain_p = sub.add_parser("explain", help="print the highest-scoring explanation blocks")
    explain_p.add_argument("--top", type=int, default=5, metavar="N")
    sub.add_parser("run", help="chain synth/ingest -> pair -> crop -> describe -> build/score -> eval")
    return parser


def _configure(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(args.config)
    if args.stage_dir:
        cfg = replace(cfg, workspace=args.stage_dir)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    backends = cfg.backends
    if args.workers is not None:
        backends = replace(backends, workers=args.workers)
    if args.backend_describe:
        backends = replace(backends, describe=args.backend_describe)
    if args.backend_embed:
        backends = replace(backends, embed=args.backend_embed)
    cfg = replace(cfg, backends=backends)
    if getattr(args, "save_images", False):
        cfg = replace(cfg, cropper=replace(cfg.cropper, save_images=True))
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _configure(args)
        if args.command == "synth":
            counts = pipeline.stage_synth(cfg)
            print(f"synth: {counts['train']} train videos, {counts['test']} test videos")
        elif args.command == "ingest":
            print(f"ingest: validated {pipeline.stage_ingest(cfg)} videos")
        elif args.command == "pair":
            print(f"pair: {pipeline.stage_pair(cfg)} videos")
        elif args.command == "crop":
            print(f"crop: {pipeline.stage_crop(cfg)} videos")
        elif args.command == "describe":
            print(f"describe: {pipeline.stage_describe(cfg)} videos")
        elif args.command == "build":
            path = pipeline.stage_build(cfg)
            print(f"build: wrote {path}")
        elif args.command == "score":
            print(f"score: {pipeline.stage_score(cfg)} videos")
        elif args.command == "fuse-build":
            path = pipeline.stage_fuse_build(cfg)
            print(f"fuse-build: wrote {path}")
        elif args.command == "fuse-score":
            print(f"fuse-score: {pipeline.stage_fuse_score(cfg)} videos")
        elif args.command == "eval":
            report = pipeline.stage_eval(cfg, fused=args.fused, curves_csv=args.curves_csv)
            print(json.dumps({k: report[k] for k in ("rbdc", "tbdc", "frame_auc")}, indent=2))
        elif args.command == "explain":
            for record, members in pipeline.collect_explanations(cfg, top=args.top):
                print(explain(record, members))
                print()
        elif args.command == "run":
            report = pipeline.run_all(cfg)
            print(json.dumps({k: report[k] for k in ("rbdc", "tbdc", "frame_auc")}, indent=2))
    except ExemvadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
