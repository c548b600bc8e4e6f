"""Scikit-learn style wrappers so the exemplar model composes with the ecosystem."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .errors import ContractError
from .exemplar import ExemplarSource, min_distance, select_exemplars
from .fuse import AttributeVector, FusionScales, build_fused_model, score_fused
from .ingest import VideoMeta
from .textdist import QueryItem, sentence_distance


def validate_embeddings(X, tol: float = 1e-6) -> np.ndarray:
    """Check a (n, dim) float array; restore unit norms where they deviate.

    Rows already within tol of unit norm pass through unchanged, mirroring the
    single-embedding contract, so validation never perturbs well-formed input.
    """
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise ContractError("embeddings contain a zero vector")
    off = np.abs(norms - 1.0) > tol
    if np.any(off):
        X = X.copy()
        X[off] = X[off] / norms[off, None]
    return X


class ExemplarAnomalyDetector(BaseEstimator):
    """Nearest-exemplar anomaly scorer with the greedy redundancy filter.

    fit() runs the streaming exemplar selection over the training rows in the
    given order; score_samples() returns the distance to the nearest selected
    exemplar (higher means more anomalous). With the default cosine distance,
    X is a (n, dim) array of sentence embeddings; for 'bleu'/'meteor' pass the
    raw sentences via texts.
    """

    def __init__(self, th: float = 0.65, distance_kind: str = "cosine"):
        self.th = th
        self.distance_kind = distance_kind

    def fit(self, X, y=None, texts=None):
        dist = sentence_distance(self.distance_kind)
        if dist.uses_embeddings:
            X = validate_embeddings(X)
            texts = list(texts) if texts is not None else [""] * len(X)
        else:
            if texts is None:
                texts = list(X)
            else:
                texts = list(texts)
            X = [None] * len(texts)
        stream = (
            (vec, text, ExemplarSource(video_id="", unit_id=str(i), anchor_frame=0))
            for i, (vec, text) in enumerate(zip(X, texts))
        )
        self.exemplar_set_ = select_exemplars(stream, self.th, dist)
        self.n_exemplars_ = len(self.exemplar_set_)
        return self

    def score_samples(self, X, texts=None) -> np.ndarray:
        if not hasattr(self, "exemplar_set_"):
            raise ContractError("estimator is not fitted")
        dist = self.exemplar_set_.distance()
        if dist.uses_embeddings:
            X = validate_embeddings(X)
            items = [QueryItem(embedding=row, text="") for row in X]
        else:
            source = texts if texts is not None else X
            items = [QueryItem(embedding=None, text=t) for t in source]
        return np.asarray([min_distance(item, self.exemplar_set_)[0] for item in items])


class FusedAnomalyDetector(BaseEstimator):
    """Max-over-attributes exemplar model over AttributeVector inputs."""

    def __init__(
        self,
        th: float = 0.65,
        attributes: tuple[str, ...] = ("class", "size", "grid", "trajectory", "description"),
        trajectory_scale: float | None = None,
        grid: int = 8,
        frame_width: int = 1280,
        frame_height: int = 720,
    ):
        self.th = th
        self.attributes = attributes
        self.trajectory_scale = trajectory_scale
        self.grid = grid
        self.frame_width = frame_width
        self.frame_height = frame_height

    def fit(self, X, y=None):
        vectors = list(X)
        if vectors and not isinstance(vectors[0], AttributeVector):
            raise ContractError("FusedAnomalyDetector expects AttributeVector inputs")
        meta = VideoMeta(
            video_id="estimator",
            width=self.frame_width,
            height=self.frame_height,
            frames=1,
            fps=1.0,
        )
        self.model_ = build_fused_model(
            vectors,
            self.th,
            self.attributes,
            meta,
            FusionScales(trajectory_scale=self.trajectory_scale, grid=self.grid),
        )
        self.n_exemplars_ = len(self.model_)
        return self

    def score_samples(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise ContractError("estimator is not fitted")
        return np.asarray([score_fused(vector, self.model_)[0] for vector in X])
