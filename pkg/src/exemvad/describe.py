"""Prompt assembly and pluggable activity-description backends with disk caching.

The user and system prompt strings are fixed verbatim; only the object-name slot
is substituted. The mock backend resolves a scripted behavior tag per unit and
returns that tag's canonical sentence, which makes end-to-end runs deterministic
without any model in the loop.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import os
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from PIL import Image

from .cropper import CropImagePair
from .errors import EmptyDescriptionError, UnknownBehaviorError
from .httputil import post_json
from .pairing import PAIR, Unit

SYSTEM_PROMPT = (
    "You will be provided with two frames from a video and asked to describe what "
    "objects that are indicated by bounding boxes in the video are doing.  Your task "
    "is to answer the query in a simple sentence.  If there is any interaction between "
    "the indicated objects, a description of the interaction should be given."
)

PAIR_USER_TEMPLATE = (
    "Briefly describe what the {names} in the enclosed regions of these images are "
    "doing. The two images were taken one second apart."
)

SINGLE_USER_TEMPLATE = (
    "Briefly describe what the {name} in the enclosed region of these images is "
    "doing. The two images were taken one second apart."
)


@dataclass(frozen=True)
class PromptBundle:
    system_prompt: str
    user_prompt: str

    @property
    def prompt_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.system_prompt.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(self.user_prompt.encode("utf-8"))
        return digest.hexdigest()


@dataclass(frozen=True)
class DescriptionRecord:
    unit_id: str
    text: str
    backend_id: str
    prompt_hash: str
    anchor_frame: int


def build_prompt(unit: Unit) -> PromptBundle:
    """Fill the object-name slot: 'persons' for a same-class pair, 'person and car'
    for a mixed pair, the bare class label for a single."""
    if unit.kind == PAIR:
        a, b = unit.class_labels
        names = f"{a}s" if a == b else f"{a} and {b}"
        user = PAIR_USER_TEMPLATE.format(names=names)
    else:
        user = SINGLE_USER_TEMPLATE.format(name=unit.class_labels[0])
    return PromptBundle(system_prompt=SYSTEM_PROMPT, user_prompt=user)


# ---------------------------------------------------------------------------
# Behavior lexicon shared with the synthetic generator
# ---------------------------------------------------------------------------

# Distinct tags keep enough lexical distance that the default selection
# threshold admits one exemplar per nominal activity under the mock embedder.
NOMINAL_SENTENCES = {
    "walk_sidewalk": "The person is walking along the sidewalk.",
    "cross_crosswalk": "A pedestrian crosses inside a striped crosswalk during a signal.",
    "drive_road": "A silver car is driving slowly down the road lane between intersections.",
    "walk_grass": "The person is walking across the grass.",
    "two_people_walking": "Two persons are walking side by side and chatting together.",
    # co-presence fallbacks for unscripted pairs
    "walk_past_car": "A pedestrian strolls by a parked vehicle near a curb.",
    "cars_passing": "Two cars are passing each other in opposite directions on their lanes.",
    "walk_dog": "A person leads a small dog forward on a short leash.",
}

ANOMALY_SENTENCES = {
    "sit_on_car": "The person is sitting on the car.",
    "leave_object": "The person is leaving an object on the ground and walking away.",
    "dog_alone": "The dog is walking alone without a person.",
    "crouch_ground": "The person is crouching down on the ground.",
    "person_in_box": (
        "The person is holding a phone up and appearing to take a picture or video "
        "while being pushed in a large box by another person."
    ),
}

BEHAVIOR_SENTENCES = {**NOMINAL_SENTENCES, **ANOMALY_SENTENCES}
NOMINAL_TAGS = frozenset(NOMINAL_SENTENCES)
ANOMALY_TAGS = frozenset(ANOMALY_SENTENCES)


def mock_describe(behavior_tag: str) -> str:
    """Canonical sentence for a scripted behavior tag; injective over the lexicon."""
    try:
        return BEHAVIOR_SENTENCES[behavior_tag]
    except KeyError:
        raise UnknownBehaviorError(f"behavior tag {behavior_tag!r} is not in the lexicon") from None


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


class DescribeBackend(ABC):
    """Produces one activity sentence per unit from its two crops."""

    backend_id: str
    needs_images: bool = True
    max_image_px: int = 4096
    deterministic: bool = True

    @abstractmethod
    def describe(self, unit: Unit, crops: CropImagePair | None, prompts: PromptBundle) -> str: ...


class MockDescribeBackend(DescribeBackend):
    """Scripted backend: unit key -> behavior tag -> canonical sentence."""

    needs_images = False
    backend_id = "mock"

    def __init__(self, behaviors: Mapping[str, str]):
        self._behaviors = dict(behaviors)
        self.calls = 0

    def describe(self, unit: Unit, crops: CropImagePair | None, prompts: PromptBundle) -> str:
        self.calls += 1
        tag = self._behaviors.get(unit.unit_id)
        if tag is None:
            raise UnknownBehaviorError(f"no scripted behavior for unit {unit.unit_id!r}")
        return mock_describe(tag)


def _png_bytes(image: Image.Image) -> bytes:
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()


class HttpDescribeBackend(DescribeBackend):
    """Client for the POST /describe wire contract."""

    needs_images = True

    def __init__(
        self,
        url: str,
        api_key: str | None = None,
        deterministic: bool = True,
        timeout: float = 120.0,
        max_retries: int = 4,
    ):
        self.url = url.rstrip("/")
        self.api_key = api_key
        self.deterministic = deterministic
        self.timeout = timeout
        self.max_retries = max_retries
        self.backend_id = f"http:{self.url}"

    def describe(self, unit: Unit, crops: CropImagePair | None, prompts: PromptBundle) -> str:
        if crops is None:
            raise ValueError("http describe backend requires crop images")
        payload = {
            "image_t": base64.b64encode(_png_bytes(crops.image_t)).decode("ascii"),
            "image_t2": base64.b64encode(_png_bytes(crops.image_t2)).decode("ascii"),
            "system": prompts.system_prompt,
            "user": prompts.user_prompt,
            "deterministic": self.deterministic,
        }
        body = post_json(
            f"{self.url}/describe",
            payload,
            api_key=self.api_key,
            timeout=self.timeout,
            max_retries=self.max_retries,
        )
        return str(body.get("text", ""))


# ---------------------------------------------------------------------------
# Disk cache: content-addressed, atomic write-then-rename
# ---------------------------------------------------------------------------


class DescriptionCache:
    """Persistent description cache safe under concurrent writers."""

    def __init__(self, cache_dir: str | Path):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        try:
            return json.loads(path.read_text())
        except (OSError, json.JSONDecodeError):
            return None

    def put(self, key: str, record: dict) -> None:
        path = self._path(key)
        fd, tmp_name = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fp:
                json.dump(record, fp)
            os.replace(tmp_name, path)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise


def cache_key(
    unit: Unit,
    crops: CropImagePair | None,
    prompts: PromptBundle,
    backend_id: str,
    namespace: str = "",
) -> str:
    """Content hash over image bytes (when present), else the namespaced unit
    key (unit ids repeat across videos), plus prompt bytes and backend id."""
    digest = hashlib.sha256()
    if crops is not None:
        digest.update(_png_bytes(crops.image_t))
        digest.update(_png_bytes(crops.image_t2))
    else:
        digest.update(namespace.encode("utf-8"))
        digest.update(b"/")
        digest.update(unit.unit_id.encode("utf-8"))
    digest.update(prompts.prompt_hash.encode("ascii"))
    digest.update(backend_id.encode("utf-8"))
    return digest.hexdigest()


def describe_unit(
    backend: DescribeBackend,
    unit: Unit,
    crops: CropImagePair | None,
    prompts: PromptBundle,
    cache: DescriptionCache | None = None,
    cache_namespace: str = "",
) -> DescriptionRecord:
    """Obtain the unit's sentence, via the cache when possible."""
    key = cache_key(unit, crops, prompts, backend.backend_id, cache_namespace) if cache else ""
    if cache:
        hit = cache.get(key)
        if hit is not None:
            return DescriptionRecord(
                unit_id=unit.unit_id,
                text=hit["text"],
                backend_id=hit["backend"],
                prompt_hash=hit["prompt_hash"],
                anchor_frame=unit.anchor_frame,
            )
    text = backend.describe(unit, crops, prompts).strip()
    if not text:
        raise EmptyDescriptionError(f"backend {backend.backend_id} returned an empty description for {unit.unit_id!r}")
    record = DescriptionRecord(
        unit_id=unit.unit_id,
        text=text,
        backend_id=backend.backend_id,
        prompt_hash=prompts.prompt_hash,
        anchor_frame=unit.anchor_frame,
    )
    if cache:
        cache.put(key, {"text": record.text, "backend": record.backend_id, "prompt_hash": record.prompt_hash})
    return record
