"""Transition frames between two edited segments."""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import torch

from core.errors import GroundGenError, TransitionError
from core.models import TransitionConfig
from core.seeds import derive_seed
from diffusion.backend import DiffusionBackend
from diffusion.ddim import ddim_invert, ddim_sample
from diffusion.schedule import NoiseSchedule
from diffusion.training import TrainingReport
from morphing.lora import LoraDelta, lora_finetune, lora_interpolate
from morphing.slerp import lerp, slerp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransitionSpec:
    frame_i: np.ndarray  # last frame of the earlier segment
    frame_j: np.ndarray  # first frame of the later segment
    query_i: str
    query_j: str
    n: int = 15

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")


@dataclass
class TransitionResult:
    frames: List[np.ndarray]
    alphas: List[float]
    latents: List[torch.Tensor]
    seeds: List[int]
    report_i: TrainingReport = field(default_factory=TrainingReport)
    report_j: TrainingReport = field(default_factory=TrainingReport)
    delta_i: Optional[LoraDelta] = None
    delta_j: Optional[LoraDelta] = None
    finetune_ms: float = 0.0  # both endpoint LoRA fits


def generate_transition(
    spec: TransitionSpec,
    backend: DiffusionBackend,
    schedule: NoiseSchedule,
    config: Optional[TransitionConfig] = None,
    seed: int = 0,
    jobs: int = 1,
) -> TransitionResult:
    """n - 1 frames at alpha = k/n, k = 1..n-1, endpoints excluded."""
    config = config or TransitionConfig(n=spec.n)
    start = time.perf_counter()
    seeds = [derive_seed(seed, "lora", 0), derive_seed(seed, "lora", 1)]

    try:
        z0_i = backend.encode(spec.frame_i)
        z0_j = backend.encode(spec.frame_j)
        c_i = backend.encode_text(spec.query_i)
        c_j = backend.encode_text(spec.query_j)
        train = dict(schedule=schedule, steps=config.finetune_steps, rank=config.rank,
                     learning_rate=config.learning_rate, batch_size=config.batch_size)
        finetune_start = time.perf_counter()
        delta_i, report_i = lora_finetune(backend, z0_i, c_i, seed=seeds[0], **train)
        delta_j, report_j = lora_finetune(backend, z0_j, c_j, seed=seeds[1], **train)
        finetune_ms = (time.perf_counter() - finetune_start) * 1000
        zT_i = ddim_invert(z0_i, c_i, schedule, backend.with_delta(delta_i))
        zT_j = ddim_invert(z0_j, c_j, schedule, backend.with_delta(delta_j))
    except GroundGenError as e:
        raise TransitionError(None, e) from e

    alphas = [k / spec.n for k in range(1, spec.n)]

    def intermediate(k: int) -> torch.Tensor:
        alpha = alphas[k - 1]
        try:
            zT = slerp(zT_i, zT_j, alpha)
            c = lerp(c_i, c_j, alpha)
            fused = backend.with_delta(lora_interpolate(delta_i, delta_j, alpha))
            return ddim_sample(zT, c, schedule, fused)
        except GroundGenError as e:
            raise TransitionError(k, e) from e

    ks = range(1, spec.n)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            latents = list(pool.map(intermediate, ks))
    else:
        latents = [intermediate(k) for k in ks]

    frames = [backend.decode(z) for z in latents]
    logger.info(
        f"Transition {spec.query_i!r} -> {spec.query_j!r}: {len(frames)} frames in {time.perf_counter() - start:.2f}s"
    )
    return TransitionResult(
        frames=frames,
        alphas=alphas,
        latents=latents,
        seeds=seeds,
        report_i=report_i,
        report_j=report_j,
        delta_i=delta_i,
        delta_j=delta_j,
        finetune_ms=finetune_ms,
    )
