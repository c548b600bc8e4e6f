"""Exemplar-based video anomaly detection over activity descriptions."""

__version__ = "0.1.0"

from .errors import ExemvadError
from .estimator import ExemplarAnomalyDetector, FusedAnomalyDetector
from .exemplar import ExemplarModel, ExemplarSet, load_model, save_model, select_exemplars
from .geometry import BBox, Rect
from .ingest import Detection, GroundTruth, Track, VideoMeta
from .metrics import EvalConfig, frame_auc, iou, rbdc, tbdc
from .pairing import PairingConfig, Unit, build_units, pseudo_depth_distance, schedule_anchors
from .score import ScoreRecord, project_scores, score_unit
from .textdist import bleu_distance, cosine_distance, embed, meteor_distance

__all__ = [
    "BBox",
    "Detection",
    "EvalConfig",
    "ExemplarAnomalyDetector",
    "ExemplarModel",
    "ExemplarSet",
    "ExemvadError",
    "FusedAnomalyDetector",
    "GroundTruth",
    "PairingConfig",
    "Rect",
    "ScoreRecord",
    "Track",
    "Unit",
    "VideoMeta",
    "bleu_distance",
    "build_units",
    "cosine_distance",
    "embed",
    "frame_auc",
    "iou",
    "load_model",
    "meteor_distance",
    "pseudo_depth_distance",
    "project_scores",
    "rbdc",
    "save_model",
    "schedule_anchors",
    "score_unit",
    "select_exemplars",
    "tbdc",
]
