"""Denoising objective || eps - eps_theta(sqrt(a_t) z_0 + sqrt(1 - a_t) eps, t, c) ||^2 and its SGD loop."""
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import torch
import torch.nn.functional as F

from core.errors import NonFiniteLossError
from diffusion.schedule import NoiseSchedule

logger = logging.getLogger(__name__)

# forward(z_t, t, c, control) on batches: (B, C, h, w), (B,), (B, cond), (B, 1, h, w) | None
BatchForward = Callable[[torch.Tensor, torch.Tensor, torch.Tensor, Optional[torch.Tensor]], torch.Tensor]

RUNNING_WINDOW = 20
GRAD_CLIP_NORM = 1.0


@dataclass
class TrainingReport:
    losses: List[float] = field(default_factory=list)
    duration_s: float = 0.0

    @property
    def window(self) -> int:
        return max(1, min(RUNNING_WINDOW, len(self.losses) // 2))

    @property
    def initial_loss(self) -> Optional[float]:
        if not self.losses:
            return None
        return sum(self.losses[: self.window]) / self.window

    @property
    def final_loss(self) -> Optional[float]:
        if not self.losses:
            return None
        return sum(self.losses[-self.window:]) / self.window


def train_denoiser(
    forward: BatchForward,
    parameters: Dict[str, torch.Tensor],
    latents: torch.Tensor,
    conditions: torch.Tensor,
    schedule: NoiseSchedule,
    steps: int,
    learning_rate: float,
    batch_size: int,
    seed: int,
    controls: Optional[torch.Tensor] = None,
) -> TrainingReport:
    """Plain SGD on sampled (example, t, eps) triples; updates `parameters` in place."""
    report = TrainingReport()
    if steps == 0:
        return report
    start = time.perf_counter()
    gen = torch.Generator().manual_seed(seed)
    alphas = schedule.tensor()
    optimizer = torch.optim.SGD(list(parameters.values()), lr=learning_rate)

    for step in range(steps):
        idx = torch.randint(0, latents.shape[0], (batch_size,), generator=gen)
        t_idx = torch.randint(1, schedule.steps + 1, (batch_size,), generator=gen)
        z0 = latents[idx]
        eps = torch.randn(z0.shape, generator=gen, dtype=z0.dtype)
        a = alphas[t_idx].view(-1, 1, 1, 1)
        z_t = a.sqrt() * z0 + (1.0 - a).sqrt() * eps
        control = controls[idx] if controls is not None else None

        prediction = forward(z_t, t_idx.to(z0.dtype) / schedule.steps, conditions[idx], control)
        loss = F.mse_loss(prediction, eps)
        if not torch.isfinite(loss):
            raise NonFiniteLossError(step)

        optimizer.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(list(parameters.values()), GRAD_CLIP_NORM)
        optimizer.step()
        report.losses.append(loss.item())

    report.duration_s = time.perf_counter() - start
    logger.debug(
        f"Denoiser training: {steps} steps, running loss {report.initial_loss:.4f} -> {report.final_loss:.4f}"
    )
    return report
