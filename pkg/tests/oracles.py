"""Independent reference implementations used to freeze expected test values.

Everything here is deliberately written as plain step-by-step arithmetic with
python loops, separate from the package's code paths, so the main
implementations are checked against an independently coded definition rather
than against themselves.
"""

from __future__ import annotations

import math
import re


# ---------------------------------------------------------------------------
# Crop window: literal transcription of the merged-box / pad / clamp recipe
# ---------------------------------------------------------------------------


def crop_window_reference(bbox_t, bbox_t2, frame_w, frame_h, w_min=240.0, h_min=135.0):
    """bbox_* are (x1, y1, x2, y2) tuples; returns the clamped window tuple."""
    x1 = min(bbox_t[0], bbox_t2[0])
    y1 = min(bbox_t[1], bbox_t2[1])
    x2 = max(bbox_t[2], bbox_t2[2])
    y2 = max(bbox_t[3], bbox_t2[3])
    pad_w = abs(x2 - x1) / 2.0
    if pad_w < w_min:
        pad_w = w_min
    pad_h = abs(y2 - y1) / 2.0
    if pad_h < h_min:
        pad_h = h_min
    x_min = x1 - pad_w
    if x_min < 0.0:
        x_min = 0.0
    y_min = y1 - pad_h
    if y_min < 0.0:
        y_min = 0.0
    x_max = x2 + pad_w
    if x_max > frame_w:
        x_max = float(frame_w)
    y_max = y2 + pad_h
    if y_max > frame_h:
        y_max = float(frame_h)
    return (x_min, y_min, x_max, y_max)


# ---------------------------------------------------------------------------
# BLEU-4 with add-one smoothing on orders above 1 (raw unigram precision)
# ---------------------------------------------------------------------------


def _tokens(text):
    return re.findall(r"[a-z0-9]+", text.lower())


def _ngrams(tokens, n):
    grams = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        grams[gram] = grams.get(gram, 0) + 1
    return grams


def bleu_reference(candidate, reference):
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if len(cand) == 0 or len(ref) == 0:
        return 0.0
    log_precisions = []
    for n in (1, 2, 3, 4):
        cand_grams = _ngrams(cand, n)
        ref_grams = _ngrams(ref, n)
        total = 0
        matched = 0
        for gram, count in cand_grams.items():
            total += count
            if gram in ref_grams:
                matched += min(count, ref_grams[gram])
        if n == 1:
            if matched == 0:
                return 0.0
            log_precisions.append(math.log(matched / total))
        else:
            log_precisions.append(math.log((matched + 1) / (total + 1)))
    geo_mean = math.exp(sum(log_precisions) / 4.0)
    if len(cand) > len(ref):
        bp = 1.0
    else:
        bp = math.exp(1.0 - len(ref) / len(cand))
    return bp * geo_mean


def bleu_distance_reference(candidate, reference):
    return 1.0 - bleu_reference(candidate, reference)


# ---------------------------------------------------------------------------
# RBDC / TBDC: exhaustive per-threshold enumeration
# ---------------------------------------------------------------------------


def iou_reference(a, b):
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    if union <= 0:
        return 0.0
    return inter / union


def _trapezoid_area(points, hi=1.0):
    """points: (fp_per_frame, tpr) sorted with non-decreasing x, starting at x=0."""
    clipped = [points[0]]
    for i in range(1, len(points)):
        x0, y0 = clipped[-1]
        x1, y1 = points[i]
        if x1 > hi:
            frac = (hi - x0) / (x1 - x0)
            clipped.append((hi, y0 + frac * (y1 - y0)))
            break
        clipped.append((x1, y1))
    if clipped[-1][0] < hi:
        clipped.append((hi, clipped[-1][1]))
    area = 0.0
    for (x0, y0), (x1, y1) in zip(clipped, clipped[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area / hi


def rbdc_reference(pred_regions, gt_regions, beta, frames):
    """pred_regions: (frame, x1, y1, x2, y2, score); gt_regions: (frame, x1, y1, x2, y2, track_id)."""
    thresholds = sorted({p[5] for p in pred_regions}, reverse=True)
    points = [(0.0, 0.0)]
    for th in thresholds:
        active = [p for p in pred_regions if p[5] >= th]
        detected = 0
        for g in gt_regions:
            hit = False
            for p in active:
                if p[0] == g[0] and iou_reference(p[1:5], g[1:5]) >= beta:
                    hit = True
                    break
            if hit:
                detected += 1
        fps = 0
        for p in active:
            match = False
            for g in gt_regions:
                if p[0] == g[0] and iou_reference(p[1:5], g[1:5]) >= beta:
                    match = True
                    break
            if not match:
                fps += 1
        points.append((fps / frames, detected / len(gt_regions)))
    return _trapezoid_area(points)


def tbdc_reference(pred_regions, gt_regions, beta, gamma, frames):
    tracks = {}
    for g in gt_regions:
        tracks.setdefault(g[5], []).append(g)
    thresholds = sorted({p[5] for p in pred_regions}, reverse=True)
    points = [(0.0, 0.0)]
    for th in thresholds:
        active = [p for p in pred_regions if p[5] >= th]
        detected_tracks = 0
        for track_regions in tracks.values():
            hits = 0
            for g in track_regions:
                for p in active:
                    if p[0] == g[0] and iou_reference(p[1:5], g[1:5]) >= beta:
                        hits += 1
                        break
            if hits / len(track_regions) >= gamma:
                detected_tracks += 1
        fps = 0
        for p in active:
            match = False
            for g in gt_regions:
                if p[0] == g[0] and iou_reference(p[1:5], g[1:5]) >= beta:
                    match = True
                    break
            if not match:
                fps += 1
        points.append((fps / frames, detected_tracks / len(tracks)))
    return _trapezoid_area(points)


# ---------------------------------------------------------------------------
# Frame-level ROC AUC: O(n^2) pair counting with half credit for ties
# ---------------------------------------------------------------------------


def frame_auc_reference(scores, labels):
    positives = [s for s, y in zip(scores, labels) if y == 1]
    negatives = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in positives:
        for n in negatives:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(positives) * len(negatives))
