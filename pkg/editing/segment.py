"""Text-guided editing of one retrieved segment: invert under q, re-sample under q'."""
import hashlib
import logging
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
from PIL import Image

from core.errors import EditError, FrameEditError, GroundGenError
from core.models import EditConfig, SegmentAudit
from diffusion.backend import DiffusionBackend
from diffusion.ddim import ddim_invert, ddim_sample
from diffusion.schedule import NoiseSchedule, make_schedule
from editing.control import make_control
from editing.hooks import build_hooks

logger = logging.getLogger(__name__)


def prepare_frame(frame: np.ndarray, resolution: int) -> np.ndarray:
    """Center-crop to a square and resize to resolution x resolution."""
    height, width = frame.shape[:2]
    if height == width == resolution:
        return np.ascontiguousarray(frame, dtype=np.uint8)
    side = min(height, width)
    top, left = (height - side) // 2, (width - side) // 2
    cropped = Image.fromarray(np.ascontiguousarray(frame[top:top + side, left:left + side], dtype=np.uint8))
    return np.asarray(cropped.resize((resolution, resolution), Image.Resampling.BICUBIC), dtype=np.uint8)


def latent_digest(z: torch.Tensor) -> str:
    return hashlib.sha256(z.detach().contiguous().numpy().tobytes()).hexdigest()


@dataclass
class EditedSegment:
    frames: List[np.ndarray]
    source_latents: List[torch.Tensor]
    latents: List[torch.Tensor]
    # sha256 of each frame's inverted noise z_T; DDIM draws no random noise
    noise_digests: List[str]
    source_query: str
    edited_query: str
    resolution: int
    video_id: Optional[str] = None
    clip_span: Optional[Tuple[int, int]] = None

    def audit(self) -> SegmentAudit:
        return SegmentAudit(
            video_id=self.video_id or "",
            clip_span=self.clip_span or (0, 0),
            source_query=self.source_query,
            edited_query=self.edited_query,
            frame_count=len(self.frames),
            resolution=self.resolution,
            noise_digests=self.noise_digests,
        )


def edit_segment(
    frames: Sequence[np.ndarray],
    query: str,
    edited_query: str,
    config: EditConfig,
    backend: DiffusionBackend,
    schedule: Optional[NoiseSchedule] = None,
    video_id: Optional[str] = None,
    clip_span: Optional[Tuple[int, int]] = None,
) -> EditedSegment:
    """Frames are processed in temporal order; hooks may read earlier frames' cached latents."""
    if not frames:
        raise EditError("cannot edit an empty segment")
    start = time.perf_counter()
    schedule = schedule or make_schedule(config.steps, config.schedule_kind, config.alpha_min)
    prepared = [prepare_frame(frame, config.resolution) for frame in frames]
    _, latent_side, _ = backend.latent_shape(config.resolution)
    controls = make_control(prepared, config.control, latent_side)
    hooks = build_hooks(config.hooks, schedule.steps)
    c_source = backend.encode_text(query)
    c_edit = backend.encode_text(edited_query)

    outputs, source_latents, latents, digests = [], [], [], []
    for i, (frame, control) in enumerate(zip(prepared, controls)):
        try:
            for hook in hooks:
                hook.start_frame(i)
            z0 = backend.encode(frame)
            zT = ddim_invert(z0, c_source, schedule, backend, control, config.guidance_scale)
            edited = ddim_sample(zT, c_edit, schedule, backend, hooks, control, config.guidance_scale)
            for hook in hooks:
                hook.end_frame()
            image = backend.decode(edited)
        except (GroundGenError, RuntimeError, ValueError) as e:
            raise FrameEditError(i, e, partial=outputs) from e
        source_latents.append(z0)
        latents.append(edited)
        digests.append(latent_digest(zT))
        outputs.append(image)

    elapsed = time.perf_counter() - start
    logger.debug(f"Edited {len(outputs)} frames {query!r} -> {edited_query!r} in {elapsed:.2f}s")
    return EditedSegment(
        frames=outputs,
        source_latents=source_latents,
        latents=latents,
        noise_digests=digests,
        source_query=query,
        edited_query=edited_query,
        resolution=config.resolution,
        video_id=video_id,
        clip_span=clip_span,
    )
