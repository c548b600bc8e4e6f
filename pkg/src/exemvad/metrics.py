"""Region-based, track-based, and frame-level detection criteria.

The region and track criteria sweep every distinct prediction score as a
threshold. At a threshold, a ground-truth region counts as detected when some
active predicted region in its frame overlaps it with IoU >= beta; active
predictions overlapping no ground truth in their frame each count once as a
false positive. The reported area is under the TPR vs false-positives-per-frame
curve, linearly interpolated, truncated to the configured FP range, and
normalized by the range width.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from math import ceil, inf
from typing import Sequence

import numpy as np

from .errors import ConfigError, EvalError
from .geometry import Rect
from .ingest import GroundTruth
from .score import RegionScore

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class EvalConfig:
    region_match_iou: float = 0.1  # beta
    track_detect_fraction: float = 0.1  # gamma
    fp_rate_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        if not (0.0 < self.region_match_iou <= 1.0):
            raise ConfigError(f"region_match_iou must be in (0, 1], got {self.region_match_iou}")
        if not (0.0 < self.track_detect_fraction <= 1.0):
            raise ConfigError(f"track_detect_fraction must be in (0, 1], got {self.track_detect_fraction}")
        lo, hi = self.fp_rate_range
        if lo != 0.0 or hi <= 0.0:
            raise ConfigError(f"fp_rate_range must be (0.0, hi) with hi > 0, got {self.fp_rate_range}")


@dataclass(frozen=True)
class CurvePoint:
    threshold: float
    tpr: float
    fp_per_frame: float


@dataclass
class EvalReport:
    rbdc_auc: float
    tbdc_auc: float
    frame_auc: float
    config: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "rbdc": self.rbdc_auc,
            "tbdc": self.tbdc_auc,
            "frame_auc": self.frame_auc,
            "config": self.config,
            "curves": self.curves,
        }


def iou(a: Rect, b: Rect) -> float:
    """Intersection area over union area; 0 when disjoint."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def _match(regions: Sequence[RegionScore], gt: GroundTruth, beta: float):
    """Per gt region, the best score among its matching predictions; per
    prediction, whether it matches any gt region in its frame."""
    gt_by_frame: dict[int, list[int]] = {}
    for idx, region in enumerate(gt.regions):
        gt_by_frame.setdefault(region.frame_idx, []).append(idx)
    gt_best = np.full(len(gt.regions), -inf)
    pred_matched = np.zeros(len(regions), dtype=bool)
    pred_scores = np.array([r.score for r in regions], dtype=np.float64)
    for p_idx, pred in enumerate(regions):
        for g_idx in gt_by_frame.get(pred.frame_idx, ()):
            if iou(pred.rect, gt.regions[g_idx].rect) >= beta:
                pred_matched[p_idx] = True
                if pred.score > gt_best[g_idx]:
                    gt_best[g_idx] = pred.score
    return gt_best, pred_matched, pred_scores


def _curve(detect_scores: np.ndarray, fp_scores: np.ndarray, pred_scores: np.ndarray,
           n_total: int, frames: int) -> list[CurvePoint]:
    """Operating points over descending unique thresholds, starting at (inf, 0, 0).

    detect_scores holds, per gt item, the threshold up to which it stays
    detected; fp_scores holds the scores of unmatched predictions.
    """
    points = [CurvePoint(threshold=inf, tpr=0.0, fp_per_frame=0.0)]
    detect_sorted = np.sort(detect_scores).tolist()
    fp_sorted = np.sort(fp_scores).tolist()
    for threshold in sorted(set(pred_scores.tolist()), reverse=True):
        detected = len(detect_sorted) - bisect_left(detect_sorted, threshold)
        fps = len(fp_sorted) - bisect_left(fp_sorted, threshold)
        points.append(
            CurvePoint(threshold=threshold, tpr=detected / n_total, fp_per_frame=fps / frames)
        )
    return points


def _auc(points: Sequence[CurvePoint], fp_range: tuple[float, float]) -> float:
    """Trapezoidal area of tpr vs fp-per-frame over fp_range, normalized by its width.

    The curve is extended horizontally at its final TPR when it ends inside the
    range, and linearly interpolated at the range edge when it crosses it.
    """
    lo, hi = fp_range
    xs = [p.fp_per_frame for p in points]
    ys = [p.tpr for p in points]
    # the sweep starts at (0, 0), so the first point is always inside the range
    cut_xs = [xs[0]]
    cut_ys = [ys[0]]
    for i in range(1, len(xs)):
        if xs[i] > hi:
            x0, y0 = cut_xs[-1], cut_ys[-1]
            frac = (hi - x0) / (xs[i] - x0)
            cut_xs.append(hi)
            cut_ys.append(y0 + frac * (ys[i] - y0))
            break
        cut_xs.append(xs[i])
        cut_ys.append(ys[i])
    if cut_xs[-1] < hi:
        cut_xs.append(hi)
        cut_ys.append(cut_ys[-1])
    return float(_trapezoid(cut_ys, cut_xs)) / (hi - lo)


def rbdc(
    regions: Sequence[RegionScore],
    gt: GroundTruth,
    cfg: EvalConfig = EvalConfig(),
    frames: int = 0,
) -> tuple[float, list[CurvePoint]]:
    """Region-based detection criterion AUC plus its operating-point curve."""
    if not gt.regions:
        raise EvalError("rbdc undefined: no ground-truth regions")
    if frames <= 0:
        raise EvalError(f"rbdc needs a positive frame count, got {frames}")
    gt_best, pred_matched, pred_scores = _match(regions, gt, cfg.region_match_iou)
    points = _curve(gt_best, pred_scores[~pred_matched], pred_scores, len(gt.regions), frames)
    return _auc(points, cfg.fp_rate_range), points


def tbdc(
    regions: Sequence[RegionScore],
    gt: GroundTruth,
    cfg: EvalConfig = EvalConfig(),
    frames: int = 0,
) -> tuple[float, list[CurvePoint]]:
    """Track-based detection criterion: a gt track is detected at a threshold when
    at least a gamma fraction of its regions are detected."""
    if not gt.tracks:
        raise EvalError("tbdc undefined: no ground-truth tracks")
    if frames <= 0:
        raise EvalError(f"tbdc needs a positive frame count, got {frames}")
    gt_best, pred_matched, pred_scores = _match(regions, gt, cfg.region_match_iou)
    # keyed by value: equal regions share matching behavior, so any index works
    index_of = {region: i for i, region in enumerate(gt.regions)}
    track_scores = []
    for track_regions in gt.tracks.values():
        best = sorted((gt_best[index_of[r]] for r in track_regions), reverse=True)
        need = ceil(cfg.track_detect_fraction * len(track_regions))
        need = max(need, 1)
        track_scores.append(best[need - 1] if len(best) >= need else -inf)
    points = _curve(
        np.asarray(track_scores), pred_scores[~pred_matched], pred_scores, len(gt.tracks), frames
    )
    return _auc(points, cfg.fp_rate_range), points


def frame_auc(series: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray) -> float:
    """ROC AUC of per-frame scores against 0/1 frame labels, ties counted 0.5.

    Computed with the rank-statistic form: average tied ranks, then
    (R1 - n1(n1+1)/2) / (n1 * n0).
    """
    scores = np.asarray(series, dtype=np.float64)
    y = np.asarray(labels)
    if scores.shape != y.shape:
        raise EvalError(f"series length {scores.shape} does not match labels {y.shape}")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos + n_neg != len(y):
        raise EvalError("labels must be 0/1")
    if n_pos == 0 or n_neg == 0:
        raise EvalError("frame AUC undefined: both classes must be present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum = float(np.sum(ranks[y == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def curve_to_json(points: Sequence[CurvePoint]) -> list[dict]:
    return [
        {
            "threshold": None if p.threshold == inf else p.threshold,
            "tpr": p.tpr,
            "fp_per_frame": p.fp_per_frame,
        }
        for p in points
    ]
