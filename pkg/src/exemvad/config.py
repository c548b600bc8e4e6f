"""Pipeline configuration: one YAML file, environment overrides, stable hashing.

Backend URLs may be overridden via EXEMVAD_DESCRIBE_URL / EXEMVAD_EMBED_URL; the
API key comes only from EXEMVAD_API_KEY and is never read from or written to
config files.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import yaml

from .errors import ConfigError
from .fuse import ALL_ATTRIBUTES

ENV_DESCRIBE_URL = "EXEMVAD_DESCRIBE_URL"
ENV_EMBED_URL = "EXEMVAD_EMBED_URL"
ENV_API_KEY = "EXEMVAD_API_KEY"


@dataclass(frozen=True)
class PairingSection:
    h: float | None = None
    delta: int = 30
    stride: int | None = None


@dataclass(frozen=True)
class BackendSection:
    describe: str = "mock"  # "mock" or a base URL
    embed: str = "mock"
    embed_dim: int = 256
    workers: int = 4


@dataclass(frozen=True)
class ExemplarSection:
    th: float = 0.65
    distance_kind: str = "cosine"


@dataclass(frozen=True)
class FusionSection:
    attributes: tuple[str, ...] = ALL_ATTRIBUTES
    trajectory_scale: float | None = None
    grid: int = 8


@dataclass(frozen=True)
class EvalSection:
    beta: float = 0.1
    gamma: float = 0.1


@dataclass(frozen=True)
class CropperSection:
    w_min: float = 240.0
    h_min: float = 135.0
    save_images: bool = False


@dataclass(frozen=True)
class SynthSection:
    enabled: bool = True
    width: int = 640
    height: int = 360
    duration: int = 240
    fps: float = 30.0
    write_frames: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    workspace: str = "workspace"
    seed: int = 42
    pairing: PairingSection = field(default_factory=PairingSection)
    backends: BackendSection = field(default_factory=BackendSection)
    exemplar: ExemplarSection = field(default_factory=ExemplarSection)
    fusion: FusionSection = field(default_factory=FusionSection)
    eval: EvalSection = field(default_factory=EvalSection)
    cropper: CropperSection = field(default_factory=CropperSection)
    synth: SynthSection = field(default_factory=SynthSection)

    def validate(self) -> None:
        if not (0.0 < self.exemplar.th < 2.0):
            raise ConfigError(f"exemplar th must be in (0, 2), got {self.exemplar.th}")
        if self.exemplar.distance_kind not in ("cosine", "bleu", "meteor"):
            raise ConfigError(f"unknown distance_kind {self.exemplar.distance_kind!r}")
        if self.pairing.delta < 1:
            raise ConfigError(f"pairing delta must be >= 1, got {self.pairing.delta}")
        if self.pairing.stride is not None and self.pairing.stride < 1:
            raise ConfigError(f"pairing stride must be >= 1, got {self.pairing.stride}")
        if self.pairing.h is not None and self.pairing.h <= 0:
            raise ConfigError(f"pairing h must be positive, got {self.pairing.h}")
        if self.backends.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.backends.workers}")
        if self.backends.embed_dim < 1:
            raise ConfigError(f"embed_dim must be >= 1, got {self.backends.embed_dim}")
        if not self.fusion.attributes:
            raise ConfigError("fusion needs at least one active attribute")
        unknown = set(self.fusion.attributes) - set(ALL_ATTRIBUTES)
        if unknown:
            raise ConfigError(f"unknown fusion attributes {sorted(unknown)}")
        if not (0.0 < self.eval.beta <= 1.0):
            raise ConfigError(f"eval beta must be in (0, 1], got {self.eval.beta}")
        if not (0.0 < self.eval.gamma <= 1.0):
            raise ConfigError(f"eval gamma must be in (0, 1], got {self.eval.gamma}")
        if min(self.cropper.w_min, self.cropper.h_min) < 0:
            raise ConfigError("cropper minimum pad must be non-negative")
        if min(self.synth.width, self.synth.height, self.synth.duration) <= 0 or self.synth.fps <= 0:
            raise ConfigError("synth dimensions must be positive")

    @property
    def workspace_path(self) -> Path:
        return Path(self.workspace)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        """Hash of the semantic parameters; the workspace location is excluded
        so identical runs in different directories produce identical artifacts."""
        data = self.to_dict()
        data.pop("workspace", None)
        return hashlib.sha256(
            json.dumps(data, sort_keys=True, default=str).encode("utf-8")
        ).hexdigest()


def _section(cls, data: dict, name: str):
    section = data.get(name, {})
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    known = {f for f in cls.__dataclass_fields__}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown keys in config section {name!r}: {sorted(unknown)}")
    if name == "fusion" and "attributes" in section and section["attributes"] is not None:
        section = dict(section)
        section["attributes"] = tuple(section["attributes"])
    return cls(**section)


def config_from_dict(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    known_top = {"workspace", "seed", "pairing", "backends", "exemplar", "fusion", "eval", "cropper", "synth"}
    unknown = set(data) - known_top
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    cfg = PipelineConfig(
        workspace=str(data.get("workspace", "workspace")),
        seed=int(data.get("seed", 42)),
        pairing=_section(PairingSection, data, "pairing"),
        backends=_section(BackendSection, data, "backends"),
        exemplar=_section(ExemplarSection, data, "exemplar"),
        fusion=_section(FusionSection, data, "fusion"),
        eval=_section(EvalSection, data, "eval"),
        cropper=_section(CropperSection, data, "cropper"),
        synth=_section(SynthSection, data, "synth"),
    )
    return cfg


def apply_env_overrides(cfg: PipelineConfig, env: dict | None = None) -> PipelineConfig:
    env = os.environ if env is None else env
    backends = cfg.backends
    if env.get(ENV_DESCRIBE_URL):
        backends = replace(backends, describe=env[ENV_DESCRIBE_URL])
    if env.get(ENV_EMBED_URL):
        backends = replace(backends, embed=env[ENV_EMBED_URL])
    return replace(cfg, backends=backends)


def load_config(path: str | Path | None, env: dict | None = None) -> PipelineConfig:
    """Load YAML config (defaults when path is None), then apply env overrides."""
    if path is None:
        cfg = PipelineConfig()
    else:
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
        cfg = config_from_dict(data)
    cfg = apply_env_overrides(cfg, env)
    cfg.validate()
    return cfg


def api_key(env: dict | None = None) -> str | None:
    env = os.environ if env is None else env
    return env.get(ENV_API_KEY) or None
