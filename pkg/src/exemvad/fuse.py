"""Combined exemplar model: max over normalized per-attribute distances.

Units carry class, size, coarse grid cell, trajectory, and optionally the
description embedding; the inter-unit distance is the maximum of the active
attribute distances, each normalized into [0, 1]. With only the description
attribute active this reduces to the base description pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ContractError, EmptyModelError
from .ingest import Track, VideoMeta
from .pairing import Unit
from .textdist import cosine_distance

ALL_ATTRIBUTES = ("class", "size", "grid", "trajectory", "description")
DEFAULT_ATTRIBUTES = ALL_ATTRIBUTES


@dataclass(frozen=True)
class FusionScales:
    """Normalization constants recorded into fused model metadata.

    trajectory_scale is the per-step offset that maps to distance 1.0; None
    resolves to 0.05 * sqrt(W^2 + H^2). grid is the G of the GxG location grid.
    """

    trajectory_scale: float | None = None
    grid: int = 8

    def resolved_trajectory_scale(self, meta: VideoMeta) -> float:
        if self.trajectory_scale is not None:
            return self.trajectory_scale
        return 0.05 * math.hypot(meta.width, meta.height)


@dataclass(frozen=True)
class AttributeVector:
    """Per-unit attribute bundle; trajectory is (L, 2) center offsets per step."""

    class_label: str
    size: tuple[float, float]
    location: tuple[float, float]
    trajectory: np.ndarray
    description_embedding: np.ndarray | None = None
    text: str = ""


@dataclass
class FusedExemplarSet:
    """Admission-ordered attribute vectors under the fused max-distance."""

    th: float
    attributes: tuple[str, ...]
    grid: int
    trajectory_scale: float
    frame_size: tuple[int, int]
    entries: list[AttributeVector] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)


def _grid_cell(location: tuple[float, float], frame_size: tuple[int, int], grid: int) -> tuple[int, int]:
    w, h = frame_size
    col = min(int(location[0] / w * grid), grid - 1) if w else 0
    row = min(int(location[1] / h * grid), grid - 1) if h else 0
    return (max(col, 0), max(row, 0))


def attribute_distance(
    a: AttributeVector,
    b: AttributeVector,
    attr: str,
    trajectory_scale: float,
    frame_size: tuple[int, int],
    grid: int,
) -> float:
    """Single-attribute distance, normalized to [0, 1]."""
    if attr == "class":
        return 0.0 if a.class_label == b.class_label else 1.0
    if attr == "size":
        dw = abs(a.size[0] - b.size[0]) / max(a.size[0], b.size[0])
        dh = abs(a.size[1] - b.size[1]) / max(a.size[1], b.size[1])
        return min(max((dw + dh) / 2.0, 0.0), 1.0)
    if attr == "grid":
        return 0.0 if _grid_cell(a.location, frame_size, grid) == _grid_cell(b.location, frame_size, grid) else 1.0
    if attr == "trajectory":
        ta = np.asarray(a.trajectory, dtype=np.float64)
        tb = np.asarray(b.trajectory, dtype=np.float64)
        if ta.shape != tb.shape:
            raise ContractError(f"trajectory shapes differ: {ta.shape} vs {tb.shape}")
        step = np.linalg.norm(ta - tb, axis=1).mean() if len(ta) else 0.0
        return min(max(step / trajectory_scale, 0.0), 1.0)
    if attr == "description":
        if a.description_embedding is None or b.description_embedding is None:
            raise ContractError("description attribute requires embeddings on both units")
        return min(max(cosine_distance(a.description_embedding, b.description_embedding), 0.0), 1.0)
    raise ConfigError(f"unknown attribute {attr!r}; expected one of {ALL_ATTRIBUTES}")


def fused_distance(
    a: AttributeVector,
    b: AttributeVector,
    active: Sequence[str],
    trajectory_scale: float,
    frame_size: tuple[int, int],
    grid: int,
) -> float:
    """Max over the active attribute distances."""
    if not active:
        raise ConfigError("fused distance needs at least one active attribute")
    return max(
        attribute_distance(a, b, attr, trajectory_scale, frame_size, grid) for attr in active
    )


def build_fused_model(
    stream: Iterable[AttributeVector],
    th: float,
    active: Sequence[str],
    meta: VideoMeta,
    scales: FusionScales = FusionScales(),
) -> FusedExemplarSet:
    """Greedy admission with the fused distance: same rule as the base selection."""
    if not active:
        raise ConfigError("fused model needs at least one active attribute")
    unknown = set(active) - set(ALL_ATTRIBUTES)
    if unknown:
        raise ConfigError(f"unknown attributes {sorted(unknown)}")
    traj_scale = scales.resolved_trajectory_scale(meta)
    result = FusedExemplarSet(
        th=th,
        attributes=tuple(active),
        grid=scales.grid,
        trajectory_scale=traj_scale,
        frame_size=(meta.width, meta.height),
        entries=[],
    )
    for vector in stream:
        if not result.entries:
            result.entries.append(vector)
            continue
        best, _ = nearest_fused(vector, result)
        if best > th:
            result.entries.append(vector)
    return result


def nearest_fused(query: AttributeVector, model: FusedExemplarSet) -> tuple[float, int]:
    if not model.entries:
        raise EmptyModelError("fused exemplar set is empty")
    best = float("inf")
    best_idx = 0
    for idx, entry in enumerate(model.entries):
        d = fused_distance(
            query, entry, model.attributes, model.trajectory_scale, model.frame_size, model.grid
        )
        if d < best:
            best = d
            best_idx = idx
    return best, best_idx


def score_fused(query: AttributeVector, model: FusedExemplarSet) -> tuple[float, int]:
    """Anomaly score = fused distance to the nearest exemplar."""
    return nearest_fused(query, model)


def attribute_vector_for_unit(
    unit: Unit,
    tracks: Mapping[str, Track],
    meta: VideoMeta,
    description_embedding: np.ndarray | None = None,
    text: str = "",
) -> AttributeVector:
    """Derive the attribute bundle for a unit from its member tracks.

    Pairs use the merged member box for size/location and the member-mean
    trajectory; the class label of a pair is the sorted joined label.
    """
    t = unit.anchor_frame
    boxes = [tracks[m].bbox_at(t) for m in unit.members]
    x1 = min(b.x1 for b in boxes)
    y1 = min(b.y1 for b in boxes)
    x2 = max(b.x2 for b in boxes)
    y2 = max(b.y2 for b in boxes)
    offsets = np.zeros((unit.delta, 2), dtype=np.float64)
    for member in unit.members:
        track = tracks[member]
        centers = [
            (track.bbox_at(f).cx, track.bbox_at(f).cy) for f in range(t, t + unit.delta + 1)
        ]
        arr = np.asarray(centers, dtype=np.float64)
        offsets += arr[1:] - arr[:-1]
    offsets /= len(unit.members)
    return AttributeVector(
        class_label="+".join(sorted(unit.class_labels)),
        size=(x2 - x1, y2 - y1),
        location=((x1 + x2) / 2.0, (y1 + y2) / 2.0),
        trajectory=offsets,
        description_embedding=description_embedding,
        text=text,
    )


# ---------------------------------------------------------------------------
# Fused model persistence: exemplar-style header plus per-attribute blocks,
# one set per unit kind (pair / single)
# ---------------------------------------------------------------------------

FUSED_MAGIC = b"EXVF"
FUSED_VERSION = 2


@dataclass
class FusedModelBundle:
    """Pair and single fused exemplar sets, persisted together."""

    pair_set: FusedExemplarSet
    single_set: FusedExemplarSet

    def set_for_kind(self, kind: str) -> FusedExemplarSet:
        if kind == "pair":
            return self.pair_set
        if kind == "single":
            return self.single_set
        raise ValueError(f"unknown unit kind {kind!r}")


def _packed_strings(strings) -> bytes:
    import struct as _struct

    blob = bytearray()
    for s in strings:
        raw = s.encode("utf-8")
        blob += _struct.pack("<I", len(raw)) + raw
    return bytes(blob)


def _unpack_strings(blob: bytes, count: int, what: str) -> list[str]:
    import struct as _struct

    from .errors import ModelFormatError

    out = []
    offset = 0
    for _ in range(count):
        if offset + 4 > len(blob):
            raise ModelFormatError(f"fused model {what} block truncated")
        (length,) = _struct.unpack_from("<I", blob, offset)
        offset += 4
        if offset + length > len(blob):
            raise ModelFormatError(f"fused model {what} block truncated")
        out.append(blob[offset : offset + length].decode("utf-8"))
        offset += length
    return out


def _set_to_blocks(model: FusedExemplarSet) -> list[bytes]:
    import json as _json

    entries = model.entries
    traj_len = len(entries[0].trajectory) if entries else 0
    has_desc = bool(entries) and entries[0].description_embedding is not None
    dim = len(entries[0].description_embedding) if has_desc else 0
    header = {
        "th": model.th,
        "attributes": list(model.attributes),
        "grid": model.grid,
        "trajectory_scale": model.trajectory_scale,
        "frame_size": list(model.frame_size),
        "count": len(entries),
        "trajectory_len": traj_len,
        "dim": dim,
    }
    return [
        _json.dumps(header, sort_keys=True).encode("utf-8"),
        _packed_strings(e.class_label for e in entries),
        np.asarray([e.size for e in entries], dtype="<f4").tobytes(),
        np.asarray([e.location for e in entries], dtype="<f4").tobytes(),
        np.asarray([np.asarray(e.trajectory) for e in entries], dtype="<f4").tobytes(),
        (
            np.asarray([e.description_embedding for e in entries], dtype="<f4").tobytes()
            if has_desc
            else b""
        ),
        _packed_strings(e.text for e in entries),
    ]


def _set_from_blocks(blocks: list[bytes]) -> FusedExemplarSet:
    import json as _json

    from .errors import ModelFormatError

    try:
        header = _json.loads(blocks[0].decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise ModelFormatError("fused model has a corrupt set header") from exc
    count = int(header["count"])
    traj_len = int(header["trajectory_len"])
    dim = int(header["dim"])
    classes = _unpack_strings(blocks[1], count, "classes")
    sizes = np.frombuffer(blocks[2], dtype="<f4").reshape(count, 2) if count else np.zeros((0, 2))
    locs = np.frombuffer(blocks[3], dtype="<f4").reshape(count, 2) if count else np.zeros((0, 2))
    trajs = np.frombuffer(blocks[4], dtype="<f4")
    trajs = trajs.reshape(count, traj_len, 2) if count else np.zeros((0, 0, 2))
    descs = (
        np.frombuffer(blocks[5], dtype="<f4").reshape(count, dim).astype(np.float64)
        if dim and count
        else None
    )
    texts = _unpack_strings(blocks[6], count, "texts")
    entries = [
        AttributeVector(
            class_label=classes[i],
            size=(float(sizes[i][0]), float(sizes[i][1])),
            location=(float(locs[i][0]), float(locs[i][1])),
            trajectory=trajs[i].astype(np.float64),
            description_embedding=descs[i] if descs is not None else None,
            text=texts[i],
        )
        for i in range(count)
    ]
    return FusedExemplarSet(
        th=float(header["th"]),
        attributes=tuple(header["attributes"]),
        grid=int(header["grid"]),
        trajectory_scale=float(header["trajectory_scale"]),
        frame_size=(int(header["frame_size"][0]), int(header["frame_size"][1])),
        entries=entries,
    )


def save_fused_model(bundle: FusedModelBundle, path) -> None:
    import struct as _struct

    with open(path, "wb") as fp:
        fp.write(FUSED_MAGIC)
        fp.write(_struct.pack("<I", FUSED_VERSION))
        for fused_set in (bundle.pair_set, bundle.single_set):
            blocks = _set_to_blocks(fused_set)
            fp.write(_struct.pack("<I", len(blocks)))
            for blob in blocks:
                fp.write(_struct.pack("<Q", len(blob)))
                fp.write(blob)


def load_fused_model(path) -> FusedModelBundle:
    import struct as _struct

    from .errors import ModelFormatError

    def _read_exact(fp, n, what):
        raw = fp.read(n)
        if len(raw) != n:
            raise ModelFormatError(f"fused model truncated at {what}")
        return raw

    with open(path, "rb") as fp:
        if fp.read(4) != FUSED_MAGIC:
            raise ModelFormatError(f"{path} is not a fused model file")
        (version,) = _struct.unpack("<I", _read_exact(fp, 4, "version"))
        if version != FUSED_VERSION:
            raise ModelFormatError(f"unsupported fused model version {version}")
        sets = []
        for _ in range(2):
            (n_blocks,) = _struct.unpack("<I", _read_exact(fp, 4, "block count"))
            blocks = []
            for _ in range(n_blocks):
                (length,) = _struct.unpack("<Q", _read_exact(fp, 8, "block length"))
                blocks.append(_read_exact(fp, length, "block body"))
            sets.append(_set_from_blocks(blocks))
    return FusedModelBundle(pair_set=sets[0], single_set=sets[1])
