"""Scikit-learn wrapper conformance and parity with the core selection/scoring."""

import numpy as np
import pytest
from sklearn.base import clone

from exemvad.errors import ContractError
from exemvad.estimator import ExemplarAnomalyDetector, FusedAnomalyDetector, validate_embeddings
from exemvad.exemplar import ExemplarSource, min_distance, select_exemplars
from exemvad.fuse import AttributeVector
from exemvad.textdist import MockEmbedBackend, QueryItem, embed, sentence_distance


def unit_rows(n, dim, seed):
    rng = np.random.default_rng(seed)
    mat = rng.normal(size=(n, dim))
    return mat / np.linalg.norm(mat, axis=1, keepdims=True)


class TestExemplarAnomalyDetector:
    def test_get_set_params_and_clone(self):
        est = ExemplarAnomalyDetector(th=0.5, distance_kind="bleu")
        assert est.get_params() == {"th": 0.5, "distance_kind": "bleu"}
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()
        est.set_params(th=0.7)
        assert est.th == 0.7

    def test_fit_matches_core_selection(self):
        X = unit_rows(300, 12, seed=42)
        est = ExemplarAnomalyDetector(th=0.65).fit(X)
        stream = [(row, "", ExemplarSource("", str(i), 0)) for i, row in enumerate(X)]
        core = select_exemplars(stream, 0.65, sentence_distance("cosine"))
        assert est.n_exemplars_ == len(core)

    def test_score_samples_matches_core(self):
        X = unit_rows(100, 8, seed=1)
        Q = unit_rows(20, 8, seed=2)
        est = ExemplarAnomalyDetector(th=0.65).fit(X)
        scores = est.score_samples(Q)
        for q, s in zip(Q, scores):
            want, _ = min_distance(QueryItem(embedding=q, text=""), est.exemplar_set_)
            assert s == want

    def test_renormalizes_input_rows(self):
        X = unit_rows(50, 6, seed=3) * 7.0
        est = ExemplarAnomalyDetector().fit(X)
        scores = est.score_samples(X)
        # coverage: every training row is within th of some admitted exemplar
        assert np.all(scores <= est.th + 1e-9)
        # the first row is always admitted, so it matches itself after renorm
        assert est.score_samples(X[:1])[0] <= 1e-9

    def test_text_distance_mode(self):
        texts = [
            "the person is walking along the sidewalk",
            "the person is walking along the sidewalk",
            "a completely different description of a car",
        ]
        est = ExemplarAnomalyDetector(th=0.5, distance_kind="bleu").fit(texts)
        assert est.n_exemplars_ == 2
        scores = est.score_samples(["the person is walking along the sidewalk"])
        assert scores[0] == pytest.approx(0.0, abs=1e-12)

    def test_unfitted_scoring_rejected(self):
        with pytest.raises(ContractError):
            ExemplarAnomalyDetector().score_samples(unit_rows(2, 4, seed=0))

    def test_zero_row_rejected(self):
        X = np.zeros((3, 4))
        with pytest.raises(ContractError):
            ExemplarAnomalyDetector().fit(X)


class TestValidateEmbeddings:
    def test_shape_and_norms(self):
        X = validate_embeddings([[3.0, 4.0], [0.0, 2.0]])
        assert np.allclose(np.linalg.norm(X, axis=1), 1.0)

    def test_rejects_1d(self):
        with pytest.raises(ValueError):
            validate_embeddings([1.0, 2.0])


class TestFusedAnomalyDetector:
    def vectors(self, n, seed):
        rng = np.random.default_rng(seed)
        backend = MockEmbedBackend()
        words = ["walk", "drive", "sit", "cross", "stand", "run"]
        out = []
        for _ in range(n):
            text = " ".join(rng.choice(words, size=4))
            out.append(
                AttributeVector(
                    class_label=str(rng.choice(["person", "car"])),
                    size=(float(rng.uniform(10, 100)), float(rng.uniform(10, 100))),
                    location=(float(rng.uniform(0, 640)), float(rng.uniform(0, 360))),
                    trajectory=rng.uniform(-5, 5, size=(30, 2)),
                    description_embedding=embed(backend, text),
                    text=text,
                )
            )
        return out

    def test_fit_and_score(self):
        train = self.vectors(30, seed=4)
        est = FusedAnomalyDetector(th=0.65, frame_width=640, frame_height=360).fit(train)
        assert est.n_exemplars_ >= 1
        scores = est.score_samples(train[:5])
        assert np.all(scores <= 0.65 + 1e-9)  # training rows are covered by admission

    def test_clone_preserves_params(self):
        est = FusedAnomalyDetector(th=0.4, attributes=("class", "size"), grid=4)
        cloned = clone(est)
        assert cloned.get_params()["attributes"] == ("class", "size")
        assert cloned.get_params()["grid"] == 4

    def test_non_attribute_input_rejected(self):
        with pytest.raises(ContractError):
            FusedAnomalyDetector().fit([1, 2, 3])
