"""Nominal model: greedy exemplar selection over description embeddings.

Selection is streaming and order-dependent: the first element is always admitted,
and each later element is admitted iff its distance to the nearest current
exemplar is strictly above the threshold. Pairs and singles get separate sets.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyModelError, ModelFormatError
from .textdist import SentenceDistance, SentenceItem, sentence_distance

MODEL_MAGIC = b"EXVD"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ExemplarSource:
    video_id: str
    unit_id: str
    anchor_frame: int


@dataclass(frozen=True)
class Exemplar:
    """One admitted description: unit-norm embedding, source sentence, provenance."""

    embedding: np.ndarray
    text: str
    source: ExemplarSource


@dataclass(frozen=True)
class Rejection:
    """Evidence that a stream element was redundant at admission time."""

    stream_index: int
    nearest_distance: float
    nearest_index: int


@dataclass
class ExemplarSet:
    """Admission-ordered exemplars; pairwise distance > th under distance_kind."""

    kind: str  # "pair" | "single"
    th: float
    distance_kind: str
    entries: list[Exemplar] = field(default_factory=list)
    rejections: list[Rejection] = field(default_factory=list)  # build log, not persisted

    def __len__(self) -> int:
        return len(self.entries)

    def distance(self) -> SentenceDistance:
        return sentence_distance(self.distance_kind)

    def verify_separation(self) -> bool:
        dist = self.distance()
        for i, a in enumerate(self.entries):
            for b in self.entries[i + 1 :]:
                if dist(b, a) <= self.th:
                    return False
        return True


def select_exemplars(
    stream: Iterable[tuple[np.ndarray, str, ExemplarSource]],
    th: float,
    dist: SentenceDistance,
    kind: str = "single",
) -> ExemplarSet:
    """Run the greedy admission rule over the stream in its given order.

    Rejected elements are logged with the distance and index of the exemplar
    that shadowed them, so redundancy coverage can be audited after the build.
    """
    result = ExemplarSet(kind=kind, th=th, distance_kind=dist.kind)
    for index, (embedding, text, source) in enumerate(stream):
        candidate = Exemplar(embedding=embedding, text=text, source=source)
        if not result.entries:
            result.entries.append(candidate)
            continue
        best, best_idx = min_distance(candidate, result)
        if best > th:
            result.entries.append(candidate)
        else:
            result.rejections.append(
                Rejection(stream_index=index, nearest_distance=best, nearest_index=best_idx)
            )
    return result


def min_distance(query: SentenceItem, exemplar_set: ExemplarSet) -> tuple[float, int]:
    """Exact nearest-exemplar scan; ties break to the lowest index."""
    if not exemplar_set.entries:
        raise EmptyModelError(f"exemplar set {exemplar_set.kind!r} is empty")
    dist = exemplar_set.distance()
    best = float("inf")
    best_idx = 0
    for idx, entry in enumerate(exemplar_set.entries):
        d = dist(query, entry)
        if d < best:
            best = d
            best_idx = idx
    return best, best_idx


def merge_exemplar_sets(sets: Sequence[ExemplarSet], th: float, dist: SentenceDistance) -> ExemplarSet:
    """Re-run admission over the concatenation of already-built sets, in order."""
    if not sets:
        raise EmptyModelError("no exemplar sets to merge")
    stream = (
        (entry.embedding, entry.text, entry.source)
        for one_set in sets
        for entry in one_set.entries
    )
    return select_exemplars(stream, th, dist, kind=sets[0].kind)


@dataclass
class ExemplarModel:
    """The persisted nominal model: E_pair + E_single plus build metadata."""

    pair_set: ExemplarSet
    single_set: ExemplarSet
    th: float
    distance_kind: str
    dim: int
    embed_backend_id: str
    describe_backend_id: str = ""
    config_hash: str = ""

    def set_for_kind(self, kind: str) -> ExemplarSet:
        if kind == "pair":
            return self.pair_set
        if kind == "single":
            return self.single_set
        raise ValueError(f"unknown unit kind {kind!r}")


def _write_block(fp, payload: bytes) -> None:
    fp.write(struct.pack("<Q", len(payload)))
    fp.write(payload)


def _read_block(fp, what: str) -> bytes:
    raw = fp.read(8)
    if len(raw) != 8:
        raise ModelFormatError(f"model file truncated while reading {what}")
    (length,) = struct.unpack("<Q", raw)
    payload = fp.read(length)
    if len(payload) != length:
        raise ModelFormatError(f"model file truncated inside {what}")
    return payload


def save_model(model: ExemplarModel, path: str | Path) -> None:
    """Write header + embeddings block + texts block + sources block."""
    header = {
        "version": MODEL_VERSION,
        "th": model.th,
        "distance_kind": model.distance_kind,
        "dim": model.dim,
        "embed_backend_id": model.embed_backend_id,
        "describe_backend_id": model.describe_backend_id,
        "config_hash": model.config_hash,
        "counts": {"pair": len(model.pair_set), "single": len(model.single_set)},
    }
    entries = list(model.pair_set.entries) + list(model.single_set.entries)
    with open(path, "wb") as fp:
        fp.write(MODEL_MAGIC)
        _write_block(fp, json.dumps(header, sort_keys=True).encode("utf-8"))
        if entries:
            matrix = np.stack([e.embedding for e in entries]).astype("<f4")
        else:
            matrix = np.zeros((0, model.dim), dtype="<f4")
        _write_block(fp, matrix.tobytes())
        texts = bytearray()
        for e in entries:
            raw = e.text.encode("utf-8")
            texts += struct.pack("<I", len(raw)) + raw
        _write_block(fp, bytes(texts))
        sources = bytearray()
        for e in entries:
            raw = json.dumps(
                {"video": e.source.video_id, "unit": e.source.unit_id, "t": e.source.anchor_frame}
            ).encode("utf-8")
            sources += struct.pack("<I", len(raw)) + raw
        _write_block(fp, bytes(sources))


def _split_prefixed(block: bytes, count: int, what: str) -> list[bytes]:
    out = []
    offset = 0
    for _ in range(count):
        if offset + 4 > len(block):
            raise ModelFormatError(f"model {what} block is truncated")
        (length,) = struct.unpack_from("<I", block, offset)
        offset += 4
        if offset + length > len(block):
            raise ModelFormatError(f"model {what} block is truncated")
        out.append(block[offset : offset + length])
        offset += length
    return out


def load_model(path: str | Path) -> ExemplarModel:
    with open(path, "rb") as fp:
        magic = fp.read(4)
        if magic != MODEL_MAGIC:
            raise ModelFormatError(f"{path} is not an exemplar model file")
        try:
            header = json.loads(_read_block(fp, "header").decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ModelFormatError(f"{path} has a corrupt model header") from exc
        if header.get("version") != MODEL_VERSION:
            raise ModelFormatError(
                f"{path} has model version {header.get('version')}, expected {MODEL_VERSION}"
            )
        dim = int(header["dim"])
        counts = header["counts"]
        total = int(counts["pair"]) + int(counts["single"])
        matrix = np.frombuffer(_read_block(fp, "embeddings"), dtype="<f4")
        if matrix.size != total * dim:
            raise ModelFormatError(f"{path} embeddings block has wrong size")
        matrix = matrix.reshape(total, dim).astype(np.float64)
        texts = [b.decode("utf-8") for b in _split_prefixed(_read_block(fp, "texts"), total, "texts")]
        sources = [
            json.loads(b.decode("utf-8"))
            for b in _split_prefixed(_read_block(fp, "sources"), total, "sources")
        ]
    entries = [
        Exemplar(
            embedding=matrix[i],
            text=texts[i],
            source=ExemplarSource(
                video_id=sources[i]["video"], unit_id=sources[i]["unit"], anchor_frame=sources[i]["t"]
            ),
        )
        for i in range(total)
    ]
    n_pair = int(counts["pair"])
    pair_set = ExemplarSet(
        kind="pair", th=float(header["th"]), distance_kind=header["distance_kind"], entries=entries[:n_pair]
    )
    single_set = ExemplarSet(
        kind="single", th=float(header["th"]), distance_kind=header["distance_kind"], entries=entries[n_pair:]
    )
    return ExemplarModel(
        pair_set=pair_set,
        single_set=single_set,
        th=float(header["th"]),
        distance_kind=header["distance_kind"],
        dim=dim,
        embed_backend_id=header.get("embed_backend_id", ""),
        describe_backend_id=header.get("describe_backend_id", ""),
        config_hash=header.get("config_hash", ""),
    )
