"""Exception hierarchy shared by every GroundGen stage."""
from typing import Iterable, Optional


class GroundGenError(Exception):
    """Base class for all pipeline errors."""


# Feature store

class StoreError(GroundGenError):
    pass


class DimensionMismatchError(StoreError, ValueError):
    def __init__(self, expected: int, actual: int, what: str = "feature dimension"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} mismatch: store expects {expected}, got {actual}")


class StoreConflictError(StoreError):
    def __init__(self, video_id: str):
        self.video_id = video_id
        super().__init__(f"video '{video_id}' already ingested with different content")


class StoreParseError(StoreError):
    def __init__(self, path, reason: str):
        self.path = str(path)
        super().__init__(f"cannot parse {path}: {reason}")


class SchemaMigrationError(StoreError):
    def __init__(self, path, found: int, expected: int):
        self.path = str(path)
        self.found = found
        self.expected = expected
        super().__init__(
            f"{path} has schema_version {found}, this build reads {expected}; migrate the store first"
        )


class UnknownVideoError(StoreError, KeyError):
    def __init__(self, video_id: str):
        self.video_id = video_id
        super().__init__(f"unknown video id '{video_id}'")

    def __str__(self) -> str:
        return self.args[0]


class SpanError(StoreError, ValueError):
    pass


class IngestError(StoreError, ValueError):
    pass


# Grounding

class GroundingError(GroundGenError):
    pass


class EmptyQueryError(GroundingError, ValueError):
    pass


class DegenerateEmbeddingError(GroundingError, ValueError):
    pass


class EmptyStoreError(GroundingError):
    pass


class NoMatchError(GroundingError):
    def __init__(self, query: str):
        self.query = query
        super().__init__(f"corpus lacks a moment for query '{query}'")


# Diffusion

class DiffusionError(GroundGenError):
    pass


class ScheduleError(DiffusionError, ValueError):
    pass


class NonFiniteLatentError(DiffusionError):
    def __init__(self, step: int, phase: str):
        self.step = step
        self.phase = phase
        super().__init__(f"non-finite latent during {phase} at step {step}")


class NonFiniteLossError(DiffusionError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite training loss at step {step}")


class BackendNotTrainableError(DiffusionError):
    pass


# Editing

class EditError(GroundGenError):
    pass


class FrameEditError(EditError):
    def __init__(self, frame_index: int, cause: Exception, partial: Optional[list] = None):
        self.frame_index = frame_index
        self.cause = cause
        self.partial = partial or []  # frames finished before the failure
        super().__init__(f"editing failed at frame {frame_index}: {cause}")


class UnsupportedControlError(EditError, ValueError):
    def __init__(self, kind: str, available: Iterable[str]):
        self.kind = kind
        self.available = sorted(available)
        super().__init__(f"unsupported control kind '{kind}'; available: {', '.join(self.available)}")


class UnknownHookError(EditError, ValueError):
    def __init__(self, name: str, available: Iterable[str]):
        self.name = name
        super().__init__(f"unknown hook '{name}'; available: {', '.join(sorted(available))}")


# Morphing

class MorphError(GroundGenError):
    pass


class LoraRankError(MorphError, ValueError):
    pass


class LoraLayerMismatchError(MorphError, ValueError):
    pass


class ZeroLatentError(MorphError, ValueError):
    pass


class AntipodalLatentError(MorphError):
    pass


class TransitionError(MorphError):
    def __init__(self, k: Optional[int], cause: Exception):
        self.k = k
        self.cause = cause
        where = f"intermediate frame k={k}" if k is not None else "endpoint preparation"
        super().__init__(f"transition failed at {where}: {cause}")


# Personalization

class PersonalizationError(GroundGenError):
    pass


class SubjectSpecError(PersonalizationError, ValueError):
    pass


# Evaluation

class MetricError(GroundGenError, ValueError):
    pass
