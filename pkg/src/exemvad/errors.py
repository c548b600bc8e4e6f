"""Exception hierarchy and the process exit codes the CLI maps each class to."""


class ExemvadError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 1


class ConfigError(ExemvadError):
    """Invalid configuration value or missing required setting."""

    exit_code = 2


class ScenarioError(ConfigError):
    """Invalid synthetic scenario definition (e.g. waypoint outside the frame)."""


class StageDependencyError(ExemvadError):
    """A required prior-stage artifact is missing; names the stage that produces it."""

    exit_code = 3


class ParseError(ExemvadError):
    """Malformed input record; message carries the 1-based line number."""

    exit_code = 4


class DuplicateIdentityError(ParseError):
    """Two detections share (frame_idx, object_id) within one video."""


class DegenerateRectError(ParseError):
    """Rectangle with x_max < x_min or y_max < y_min."""


class TransportError(ExemvadError):
    """Backend unreachable after retries."""

    exit_code = 5


class EmptyDescriptionError(TransportError):
    """Backend returned an empty description."""


class UnknownBehaviorError(TransportError):
    """Mock backend asked for a behavior tag outside the scripted lexicon."""


class ContractError(TransportError):
    """Backend response violates its wire contract (e.g. embedding dim mismatch)."""


class DegenerateEmbeddingError(ContractError):
    """Backend returned an all-zero embedding that cannot be normalized."""


class EmptyModelError(ExemvadError):
    """Scoring was attempted against an empty exemplar set."""

    exit_code = 6


class ModelFormatError(ExemvadError):
    """Model file is corrupted or has an unsupported format version."""

    exit_code = 6


class ImageIOError(ExemvadError):
    """Frame image missing or unreadable; message identifies the frame index."""

    exit_code = 7


class EvalError(ExemvadError):
    """Evaluation criterion undefined for the given inputs (e.g. no ground truth)."""

    exit_code = 8
