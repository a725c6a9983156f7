"""Pydantic models for GroundGen"""
import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

STORE_SCHEMA_VERSION = 1
DEFAULT_PRETRAIN_STEPS = 150


class PipelineStage(str, Enum):
    IDLE = "IDLE"
    PERSONALIZING = "PERSONALIZING"
    GROUNDING = "GROUNDING"
    EDITING = "EDITING"
    MORPHING = "MORPHING"
    WRITING = "WRITING"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"


# Feature store

class VideoRecord(BaseModel):
    """A corpus entry. Clip features live in the store's `<video_id>.features` file."""
    video_id: str = Field(..., min_length=1)
    num_clips: int = Field(..., ge=1)
    feature_dim: int = Field(..., ge=1)
    fps: float = Field(..., gt=0)
    frame_dir: str
    num_frames: int = Field(..., ge=1)
    clip_frame_ranges: List[Tuple[int, int]]
    content_hash: str

    @model_validator(mode="after")
    def _ranges_cover_frames(self):
        if len(self.clip_frame_ranges) != self.num_clips:
            raise ValueError(
                f"{self.video_id}: {len(self.clip_frame_ranges)} clip ranges for {self.num_clips} clips"
            )
        expected_first = 0
        for first, last in self.clip_frame_ranges:
            if first != expected_first or last < first:
                raise ValueError(f"{self.video_id}: clip ranges must be contiguous, ordered and non-empty")
            expected_first = last + 1
        if expected_first != self.num_frames:
            raise ValueError(f"{self.video_id}: clip ranges cover {expected_first} of {self.num_frames} frames")
        return self


class StoreManifest(BaseModel):
    schema_version: int = STORE_SCHEMA_VERSION
    feature_dim: Optional[int] = None
    records: List[VideoRecord] = Field(default_factory=list)

    @model_validator(mode="after")
    def _consistent(self):
        seen = set()
        for record in self.records:
            if record.video_id in seen:
                raise ValueError(f"duplicate video id '{record.video_id}'")
            seen.add(record.video_id)
            if self.feature_dim is not None and record.feature_dim != self.feature_dim:
                raise ValueError(
                    f"record '{record.video_id}' has feature_dim {record.feature_dim}, store has {self.feature_dim}"
                )
        if self.records and self.feature_dim is None:
            raise ValueError("feature_dim must be set when records exist")
        return self

    def get(self, video_id: str) -> Optional[VideoRecord]:
        for record in self.records:
            if record.video_id == video_id:
                return record
        return None


# Grounding

class MomentCandidate(BaseModel):
    video_id: str
    start_clip: int = Field(..., ge=0)
    end_clip: int = Field(..., ge=0)
    score: float = Field(..., ge=-1.0, le=1.0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.start_clip > self.end_clip:
            raise ValueError(f"start_clip {self.start_clip} > end_clip {self.end_clip}")
        return self

    def sort_key(self) -> Tuple[float, str, int, int]:
        """Descending score, then video id, earlier start, shorter span."""
        return (-self.score, self.video_id, self.start_clip, self.end_clip)


class RetrievalResult(BaseModel):
    query: str
    candidates: List[MomentCandidate]
    truncated: bool = False  # top_k exceeded the corpus size


# Editing

class HookConfig(BaseModel):
    name: str = "preframe_injection"
    weight: float = Field(0.5, ge=0.0, le=1.0)
    # Inclusive latent levels (lo, hi); None means the first `active_fraction` of sampling steps.
    step_range: Optional[Tuple[int, int]] = None
    active_fraction: float = Field(0.8, gt=0.0, le=1.0)


class EditConfig(BaseModel):
    steps: int = Field(50, ge=1)
    schedule_kind: Literal["linear", "cosine"] = "linear"
    alpha_min: float = Field(0.01, gt=0.0, lt=1.0)
    hooks: List[HookConfig] = Field(default_factory=lambda: [HookConfig()])
    control: str = "none"
    resolution: int = Field(64, ge=8)
    guidance_scale: float = 1.0

    @model_validator(mode="after")
    def _ranges_inside_schedule(self):
        for hook in self.hooks:
            if hook.step_range is None:
                continue
            lo, hi = hook.step_range
            if not (0 <= lo <= hi <= self.steps):
                raise ValueError(f"hook step_range {hook.step_range} outside [0, {self.steps}]")
        return self


class SegmentRequest(BaseModel):
    """Input of the standalone `edit` command."""
    store: Path
    query: str = Field(..., min_length=1)
    candidate: MomentCandidate


class SegmentAudit(BaseModel):
    video_id: str
    clip_span: Tuple[int, int]
    source_query: str
    edited_query: str
    frame_count: int
    resolution: int
    noise_digests: List[str]


# Morphing

class TransitionConfig(BaseModel):
    enabled: bool = True
    n: int = Field(15, ge=2)
    finetune_steps: int = Field(200, ge=0)
    rank: int = Field(4, ge=1)
    learning_rate: float = Field(0.1, gt=0.0)
    batch_size: int = Field(4, ge=1)


# Personalization

class SubjectSpec(BaseModel):
    identifier_token: str = Field(..., min_length=1)
    class_name: str = Field(..., min_length=1)
    image_paths: List[Path]
    steps: int = Field(300, ge=0)
    learning_rate: float = Field(0.05, gt=0.0)
    batch_size: int = Field(4, ge=1)

    @field_validator("image_paths")
    @classmethod
    def _three_to_five(cls, paths: List[Path]) -> List[Path]:
        if not 3 <= len(paths) <= 5:
            raise ValueError(f"personalization needs 3-5 subject images, got {len(paths)}")
        return paths

    @property
    def prompt(self) -> str:
        return f"A {self.identifier_token} {self.class_name}"


# Pipeline

class BackendConfig(BaseModel):
    kind: Literal["toy", "constant"] = "toy"
    seed: Optional[int] = None
    weights: Optional[Path] = None
    pretrain_steps: int = Field(DEFAULT_PRETRAIN_STEPS, ge=0)  # 0 keeps the random init
    constant_value: float = 0.0


class QueryPair(BaseModel):
    query: str = Field(..., min_length=1)
    edited_query: str = Field(..., min_length=1)


class StoryboardConfig(BaseModel):
    queries: List[QueryPair] = Field(..., min_length=1)
    store: Path
    output_dir: Path
    grounding_weights: Optional[Path] = None
    query_embeddings: Optional[Path] = None  # JSON {text: vector}; default is the hash encoder
    joint_dim: Optional[int] = Field(None, ge=1)
    top_k: int = Field(1, ge=1)
    candidate_rank: int = Field(0, ge=0)
    min_score: float = Field(-1.0, ge=-1.0, le=1.0)  # candidates below this count as no match
    edit: EditConfig = Field(default_factory=EditConfig)
    transition: TransitionConfig = Field(default_factory=TransitionConfig)
    personalization: Optional[SubjectSpec] = None
    personalized_weights: Optional[Path] = None
    backend: BackendConfig = Field(default_factory=BackendConfig)
    seed: int = 0
    jobs: int = Field(1, ge=1)

    def reproducible_payload(self) -> Dict[str, Any]:
        # output location and parallelism never change results
        return self.model_dump(mode="json", exclude={"output_dir", "jobs"})

    def config_hash(self) -> str:
        canonical = json.dumps(self.reproducible_payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class MetricEntry(BaseModel):
    name: str
    status: Literal["ok", "unavailable", "failed"]
    value: Optional[float] = None
    detail: Optional[str] = None


class SegmentRecord(BaseModel):
    index: int
    query: str
    edited_query: str
    candidate: MomentCandidate
    source_frame_count: int
    output_frame_count: int
    first_output_frame: int
    noise_digests: List[str]


class TransitionRecord(BaseModel):
    after_segment: int
    n: int
    frame_count: int
    first_output_frame: int
    alphas: List[float]
    seeds: List[int]
    initial_losses: List[Optional[float]]
    final_losses: List[Optional[float]]


class RunManifest(BaseModel):
    run_id: str
    config_hash: str
    config: Dict[str, Any]  # StoryboardConfig.reproducible_payload()
    seed: int
    schedule_kind: str
    schedule: List[float]
    segments: List[SegmentRecord]
    transitions: List[TransitionRecord] = Field(default_factory=list)
    total_frames: int
    metrics: List[MetricEntry] = Field(default_factory=list)
    personalization: Optional[Dict[str, Any]] = None
    notes: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _frames_conserved(self):
        expected = sum(s.output_frame_count for s in self.segments) + sum(
            t.frame_count for t in self.transitions
        )
        if expected != self.total_frames:
            raise ValueError(f"total_frames {self.total_frames} != segment + transition frames {expected}")
        for t in self.transitions:
            if t.frame_count != t.n - 1:
                raise ValueError(f"transition after segment {t.after_segment} has {t.frame_count} frames, n={t.n}")
        if [s.index for s in self.segments] != list(range(len(self.segments))):
            raise ValueError("segments must be recorded in query order")
        return self

    def replay_config(self, output_dir, jobs: int = 1) -> StoryboardConfig:
        """The config that reproduces this run into `output_dir`."""
        config = StoryboardConfig.model_validate({**self.config, "output_dir": str(output_dir), "jobs": jobs})
        if config.config_hash() != self.config_hash:
            raise ValueError(f"manifest config does not match config_hash {self.config_hash}")
        return config


class RunContext(BaseModel):
    """Mutable state threaded through the stage agents of one run."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    run_id: str
    config: StoryboardConfig
    current_stage: PipelineStage = PipelineStage.IDLE
    stage_history: List[str] = Field(default_factory=list)
    store: Any = None
    grounding_weights: Any = None
    text_encoder: Any = None
    backend: Any = None
    schedule: Any = None
    retrievals: List[RetrievalResult] = Field(default_factory=list)
    chosen: List[MomentCandidate] = Field(default_factory=list)
    edited_segments: List[Any] = Field(default_factory=list)
    transitions: List[Any] = Field(default_factory=list)
    personalization: Optional[Dict[str, Any]] = None
