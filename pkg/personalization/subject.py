"""Bind a rare identifier token to a subject by few-shot fine-tuning of the backend."""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch

from core.errors import BackendNotTrainableError, SubjectSpecError
from core.feature_store import read_frame
from core.models import SubjectSpec
from diffusion.backend import DiffusionBackend
from diffusion.schedule import NoiseSchedule
from diffusion.training import TrainingReport
from editing.segment import prepare_frame
from grounding.text_encoder import tokenize

logger = logging.getLogger(__name__)


@dataclass
class PersonalizationResult:
    backend: DiffusionBackend
    report: TrainingReport
    prompt: str

    def summary(self) -> dict:
        return {
            "prompt": self.prompt,
            "steps": len(self.report.losses),
            "initial_loss": self.report.initial_loss,
            "final_loss": self.report.final_loss,
        }


def validate_subject(spec: SubjectSpec, backend: DiffusionBackend, images: Sequence[np.ndarray]) -> None:
    if not 3 <= len(images) <= 5:
        raise SubjectSpecError(f"personalization needs 3-5 subject images, got {len(images)}")
    if not tokenize(spec.identifier_token):
        raise SubjectSpecError(f"identifier token {spec.identifier_token!r} has no tokens")
    if backend.knows_token(spec.identifier_token):
        raise SubjectSpecError(
            f"identifier token {spec.identifier_token!r} occurs in the backend's common vocabulary; pick a rare token"
        )


def load_subject_images(spec: SubjectSpec, resolution: int) -> List[np.ndarray]:
    return [prepare_frame(read_frame(path), resolution) for path in spec.image_paths]


def personalize(
    backend: DiffusionBackend,
    spec: SubjectSpec,
    schedule: NoiseSchedule,
    images: Optional[Sequence[np.ndarray]] = None,
    resolution: int = 64,
    seed: int = 0,
) -> PersonalizationResult:
    """Fine-tune a copy of `backend` on (image, "A <token> <class>") pairs; `backend` is left unchanged."""
    images = list(images) if images is not None else load_subject_images(spec, resolution)
    validate_subject(spec, backend, images)
    if not backend.trainable:
        if spec.steps:
            raise BackendNotTrainableError(f"{backend.__class__.__name__} cannot be personalized")
        return PersonalizationResult(backend, TrainingReport(), spec.prompt)

    prompt = spec.prompt
    latents = torch.stack([backend.encode(prepare_frame(image, resolution)) for image in images])
    condition = backend.encode_text(prompt)
    conditions = condition.expand(len(images), -1).contiguous()
    tuned, report = backend.fine_tuned(
        latents, conditions, schedule, spec.steps, spec.learning_rate, spec.batch_size, seed,
    )
    logger.info(f"Personalized {prompt!r} on {len(images)} images over {len(report.losses)} steps")
    return PersonalizationResult(tuned, report, prompt)
