"""Nearest-exemplar anomaly scoring, spatial projection, and explanations.

A unit's score is its distance to the nearest exemplar of the matching set
(1 - max cosine similarity under the default distance). Scores are projected
onto the member boxes over the unit's window [t, t+delta) so the region- and
track-based criteria can be evaluated, and the per-frame series takes the max
over regions active in each frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .describe import DescriptionRecord
from .exemplar import ExemplarModel, min_distance
from .errors import ContractError
from .geometry import Rect
from .ingest import Track, VideoMeta
from .pairing import Unit
from .textdist import EmbedBackend, QueryItem, embed

NOMINAL_EPS = 1e-9


@dataclass(frozen=True)
class ScoreRecord:
    unit_id: str
    kind: str
    anchor_frame: int
    score: float
    nearest_index: int
    nearest_text: str
    own_text: str


@dataclass(frozen=True)
class RegionScore:
    frame_idx: int
    rect: Rect
    score: float


def score_unit(
    record: DescriptionRecord,
    kind: str,
    model: ExemplarModel,
    embed_backend: EmbedBackend | None,
) -> ScoreRecord:
    """Score one described unit against the exemplar set matching its kind."""
    exemplar_set = model.set_for_kind(kind)
    query_embedding = None
    if exemplar_set.distance().uses_embeddings:
        if embed_backend is None:
            raise ContractError("cosine scoring requires an embedding backend")
        query_embedding = embed(embed_backend, record.text)
        if model.dim and query_embedding.shape[0] != model.dim:
            raise ContractError(
                f"query embedding dim {query_embedding.shape[0]} does not match model dim {model.dim}"
            )
    query = QueryItem(embedding=query_embedding, text=record.text)
    distance, nearest_idx = min_distance(query, exemplar_set)
    # float error on unit-norm dots can stray a hair outside the declared range
    distance = min(max(distance, 0.0), 2.0)
    return ScoreRecord(
        unit_id=record.unit_id,
        kind=kind,
        anchor_frame=record.anchor_frame,
        score=distance,
        nearest_index=nearest_idx,
        nearest_text=exemplar_set.entries[nearest_idx].text,
        own_text=record.text,
    )


def project_scores(
    records: Sequence[ScoreRecord],
    units: Mapping[str, Unit],
    tracks: Mapping[str, Track],
    meta: VideoMeta,
) -> tuple[list[RegionScore], np.ndarray]:
    """Spread unit scores onto member boxes over [t, t+delta), plus the frame series.

    Each member contributes its (interpolated) box at every covered frame with
    the unit's score; the per-frame series is the max over active regions and 0
    where nothing is active. Frames beyond the video end are dropped.
    """
    regions: list[RegionScore] = []
    series = np.zeros(meta.frames, dtype=np.float64)
    for record in records:
        unit = units[record.unit_id]
        stop = min(unit.anchor_frame + unit.delta, meta.frames)
        for frame_idx in range(unit.anchor_frame, stop):
            for object_id in unit.members:
                rect = tracks[object_id].bbox_at(frame_idx).to_rect().clamp(meta.width, meta.height)
                regions.append(RegionScore(frame_idx=frame_idx, rect=rect, score=record.score))
            if record.score > series[frame_idx]:
                series[frame_idx] = record.score
    return regions, series


def frame_series_from_regions(regions: Iterable[RegionScore], frames: int) -> np.ndarray:
    """Per-frame max score over regions; 0 for frames with no region."""
    series = np.zeros(frames, dtype=np.float64)
    for region in regions:
        if 0 <= region.frame_idx < frames and region.score > series[region.frame_idx]:
            series[region.frame_idx] = region.score
    return series


def explain(record: ScoreRecord, members: Sequence[str] = ()) -> str:
    """Readable block contrasting the unit's sentence with its nearest exemplar."""
    label = "nominal" if record.score <= NOMINAL_EPS else "anomalous"
    window = f"{record.anchor_frame}"
    lines = [
        f"unit {record.unit_id} [{record.kind}] anchored at frame {window} -> {label}",
        f"  score:    {record.score:.5f}",
        f"  observed: {record.own_text}",
        f"  nearest:  {record.nearest_text}",
    ]
    if members:
        lines.insert(1, f"  members:  {', '.join(members)}")
    return "\n".join(lines)


def score_record_to_json_dict(record: ScoreRecord) -> dict:
    return {
        "unit": record.unit_id,
        "kind": record.kind,
        "t": record.anchor_frame,
        "score": record.score,
        "nearest_text": record.nearest_text,
        "own_text": record.own_text,
    }


def score_record_from_json_dict(rec: dict) -> ScoreRecord:
    return ScoreRecord(
        unit_id=rec["unit"],
        kind=rec["kind"],
        anchor_frame=rec["t"],
        score=rec["score"],
        nearest_index=rec.get("nearest_index", -1),
        nearest_text=rec["nearest_text"],
        own_text=rec["own_text"],
    )


def region_to_json_dict(region: RegionScore) -> dict:
    r = region.rect
    return {
        "frame": region.frame_idx,
        "x1": r.x_min,
        "y1": r.y_min,
        "x2": r.x_max,
        "y2": r.y_max,
        "score": region.score,
    }


def region_from_json_dict(rec: dict) -> RegionScore:
    return RegionScore(
        frame_idx=rec["frame"],
        rect=Rect(rec["x1"], rec["y1"], rec["x2"], rec["y2"]),
        score=rec["score"],
    )
