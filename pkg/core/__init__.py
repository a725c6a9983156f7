"""GroundGen Core Package

This package contains the core components of the grounding-based video generator:
- Models: Pydantic data models for store records, stage configs and run manifests
- Feature Store: file-backed corpus of clip features and frames
- Orchestrator: runs the stage agents for a storyboard
- State Machine: FSM for pipeline stage transitions
- Artifact Store: frames and manifests of a run
"""

from .models import (
    PipelineStage,
    StoryboardConfig,
    RunManifest,
    VideoRecord,
    StoreManifest,
)

__version__ = "0.1.0"
__all__ = [
    "PipelineStage",
    "StoryboardConfig",
    "RunManifest",
    "VideoRecord",
    "StoreManifest",
]
