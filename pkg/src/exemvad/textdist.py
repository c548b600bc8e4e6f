"""Sentence embeddings and sentence distances: embedding cosine, BLEU, METEOR.

Cosine over unit-norm embeddings is the default distance for both model building
and scoring; BLEU and METEOR operate on the raw sentences and are selectable for
ablation runs. Text distances are directional: the first argument is the
candidate (test sentence), the second the reference (exemplar sentence).
"""

from __future__ import annotations

import hashlib
import json
import re
import struct
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from math import exp, log
from pathlib import Path
from typing import ClassVar, Protocol, Sequence

import numpy as np

from .errors import ContractError, DegenerateEmbeddingError, ModelFormatError
from .httputil import post_json

UNIT_NORM_TOL = 1e-6

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


# ---------------------------------------------------------------------------
# Embedding backends
# ---------------------------------------------------------------------------


class EmbedBackend(ABC):
    """Deterministic text-to-vector backend with a fixed output dimension."""

    backend_id: str
    dim: int

    @abstractmethod
    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        """Return an array of shape (len(texts), dim)."""


class MockEmbedBackend(EmbedBackend):
    """Bag-of-token-hash embedding: deterministic and overlap-sensitive.

    Each token increments one of `dim` buckets chosen by a stable keyed hash;
    the count vector is L2-normalized. Word order is ignored by construction.
    The default key keeps the built-in behavior lexicon free of bucket
    collisions at 256 dims, so lexicon sentence distances reflect true token
    overlap (pinned by a regression test).
    """

    HASH_KEY = b"exemvad-mock-0"

    def __init__(self, dim: int = 256):
        self.dim = dim
        self.backend_id = f"mock-hash-{dim}"

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=self.HASH_KEY).digest()
        return int.from_bytes(digest, "little") % self.dim

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            for token in tokenize(text):
                out[i, self._bucket(token)] += 1.0
            norm = np.linalg.norm(out[i])
            if norm > 0:
                out[i] /= norm
        return out


class HttpEmbedBackend(EmbedBackend):
    """Client for the POST /embed wire contract."""

    def __init__(
        self,
        url: str,
        api_key: str | None = None,
        batch_size: int = 64,
        timeout: float = 60.0,
        max_retries: int = 4,
    ):
        self.url = url.rstrip("/")
        self.api_key = api_key
        self.batch_size = batch_size
        self.timeout = timeout
        self.max_retries = max_retries
        self.backend_id = f"http:{self.url}"
        self.dim = 0  # learned from the first response, then pinned

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        rows: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            chunk = list(texts[start : start + self.batch_size])
            body = post_json(
                f"{self.url}/embed",
                {"texts": chunk},
                api_key=self.api_key,
                timeout=self.timeout,
                max_retries=self.max_retries,
            )
            if "dim" not in body or "vectors" not in body:
                raise ContractError(f"/embed response missing dim/vectors: {sorted(body)}")
            dim = int(body["dim"])
            if self.dim == 0:
                self.dim = dim
            elif dim != self.dim:
                raise ContractError(f"/embed dim changed from {self.dim} to {dim}")
            vectors = body["vectors"]
            if len(vectors) != len(chunk):
                raise ContractError(f"/embed returned {len(vectors)} vectors for {len(chunk)} texts")
            rows.extend(vectors)
        out = np.asarray(rows, dtype=np.float64)
        if out.ndim != 2 or out.shape[1] != self.dim:
            raise ContractError(f"/embed vectors have shape {out.shape}, expected (*, {self.dim})")
        return out


def embed(backend: EmbedBackend, text: str) -> np.ndarray:
    """Embed one sentence, enforcing the unit-norm and dimension contracts."""
    if not text:
        raise ContractError("cannot embed an empty sentence")
    vec = np.asarray(backend.embed_batch([text])[0], dtype=np.float64)
    if backend.dim and vec.shape != (backend.dim,):
        raise ContractError(f"backend {backend.backend_id} returned dim {vec.shape}, declared {backend.dim}")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise DegenerateEmbeddingError(f"backend {backend.backend_id} returned a zero vector")
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        vec = vec / norm
    return vec


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - <u, v> for unit vectors; 0 iff u == v, up to 2 for opposite vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ContractError(f"embedding dims differ: {u.shape} vs {v.shape}")
    return 1.0 - float(np.dot(u, v))


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_distance(candidate: str, reference: str, max_order: int = 4) -> float:
    """1 - BLEU-4 of candidate against reference.

    Modified n-gram precisions with add-one smoothing for orders above 1
    (unigram precision stays raw, so disjoint sentences score 0), geometric
    mean over orders, and the standard brevity penalty.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 1.0
    log_sum = 0.0
    for n in range(1, max_order + 1):
        cand_counts = _ngram_counts(cand, n)
        total = sum(cand_counts.values())
        if total == 0:
            # candidate shorter than n: treat the missing order as fully smoothed
            matched = 0
        else:
            ref_counts = _ngram_counts(ref, n)
            matched = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        if n == 1:
            if matched == 0:
                return 1.0
            precision = matched / total
        else:
            precision = (matched + 1) / (total + 1)
        log_sum += log(precision) / max_order
    if len(cand) > len(ref):
        brevity = 1.0
    else:
        brevity = exp(1.0 - len(ref) / len(cand))
    return 1.0 - brevity * exp(log_sum)


def _align_exact(cand: list[str], ref: list[str]) -> list[tuple[int, int]]:
    # greedy left-to-right: each candidate token takes the earliest unused
    # identical reference position
    used: set[int] = set()
    positions: dict[str, list[int]] = {}
    for j, token in enumerate(ref):
        positions.setdefault(token, []).append(j)
    pairs = []
    for i, token in enumerate(cand):
        for j in positions.get(token, ()):
            if j not in used:
                used.add(j)
                pairs.append((i, j))
                break
    return pairs


def meteor_distance(candidate: str, reference: str) -> float:
    """1 - METEOR with exact unigram matching only.

    F = 10PR / (R + 9P) over unigram precision/recall, discounted by the
    fragmentation penalty 0.5 * (chunks / matches)^3; zero matches score 0.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 1.0
    pairs = _align_exact(cand, ref)
    matches = len(pairs)
    if matches == 0:
        return 1.0
    precision = matches / len(cand)
    recall = matches / len(ref)
    f_mean = 10.0 * precision * recall / (recall + 9.0 * precision)
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if i1 != i0 + 1 or j1 != j0 + 1:
            chunks += 1
    penalty = 0.5 * (chunks / matches) ** 3
    return 1.0 - f_mean * (1.0 - penalty)


class SentenceItem(Protocol):
    """Anything carrying a sentence and its unit-norm embedding."""

    embedding: np.ndarray | None
    text: str


@dataclass(frozen=True)
class QueryItem:
    """Plain (embedding, text) carrier for distance computations."""

    embedding: np.ndarray | None
    text: str


class SentenceDistance(ABC):
    """Distance between two described units; first argument is the candidate."""

    kind: ClassVar[str]
    uses_embeddings: ClassVar[bool]

    @abstractmethod
    def __call__(self, candidate: SentenceItem, reference: SentenceItem) -> float: ...


class CosineEmbeddingDistance(SentenceDistance):
    kind = "cosine"
    uses_embeddings = True

    def __call__(self, candidate: SentenceItem, reference: SentenceItem) -> float:
        if candidate.embedding is None or reference.embedding is None:
            raise ContractError("cosine distance requires embeddings on both items")
        return cosine_distance(candidate.embedding, reference.embedding)


class BleuSentenceDistance(SentenceDistance):
    kind = "bleu"
    uses_embeddings = False

    def __call__(self, candidate: SentenceItem, reference: SentenceItem) -> float:
        return bleu_distance(candidate.text, reference.text)


class MeteorSentenceDistance(SentenceDistance):
    kind = "meteor"
    uses_embeddings = False

    def __call__(self, candidate: SentenceItem, reference: SentenceItem) -> float:
        return meteor_distance(candidate.text, reference.text)


_DISTANCES = {
    CosineEmbeddingDistance.kind: CosineEmbeddingDistance,
    BleuSentenceDistance.kind: BleuSentenceDistance,
    MeteorSentenceDistance.kind: MeteorSentenceDistance,
}


def sentence_distance(kind: str) -> SentenceDistance:
    try:
        return _DISTANCES[kind]()
    except KeyError:
        raise ContractError(f"unknown distance kind {kind!r}; expected one of {sorted(_DISTANCES)}") from None


# ---------------------------------------------------------------------------
# Embedding store: JSON header + packed little-endian float32 block
# ---------------------------------------------------------------------------


def save_embeddings(path: str | Path, ids: Sequence[str], matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError(f"matrix shape {matrix.shape} does not match {len(ids)} ids")
    header = json.dumps({"dim": matrix.shape[1], "count": matrix.shape[0], "ids": list(ids)}).encode("utf-8")
    with open(path, "wb") as fp:
        fp.write(struct.pack("<Q", len(header)))
        fp.write(header)
        fp.write(matrix.astype("<f4").tobytes())


def load_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, "rb") as fp:
        raw_len = fp.read(8)
        if len(raw_len) != 8:
            raise ModelFormatError(f"embedding store {path} is truncated")
        (header_len,) = struct.unpack("<Q", raw_len)
        try:
            header = json.loads(fp.read(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ModelFormatError(f"embedding store {path} has a corrupt header") from exc
        dim, count = int(header["dim"]), int(header["count"])
        data = np.frombuffer(fp.read(count * dim * 4), dtype="<f4")
        if data.size != count * dim:
            raise ModelFormatError(f"embedding store {path} data block is truncated")
    return list(header["ids"]), data.reshape(count, dim).astype(np.float64)
