"""Deterministic DDIM inversion (z_0 -> z_T) and sampling (z_T -> z_0)."""
import logging
from typing import Callable, List, Optional, Sequence, Tuple, Union

import torch

from core.errors import NonFiniteLatentError
from diffusion.backend import DiffusionBackend
from diffusion.schedule import NoiseSchedule

logger = logging.getLogger(__name__)

# hook(t, z) -> z, applied after each sampling step that lands on level t
LatentTransform = Callable[[int, torch.Tensor], torch.Tensor]


def ddim_step(z: torch.Tensor, eps: torch.Tensor, alpha_from: float, alpha_to: float) -> torch.Tensor:
    """sqrt(a_to) * (z - sqrt(1 - a_from) eps) / sqrt(a_from) + sqrt(1 - a_to) eps"""
    predicted_z0 = (z - (1.0 - alpha_from) ** 0.5 * eps) / alpha_from ** 0.5
    return alpha_to ** 0.5 * predicted_z0 + (1.0 - alpha_to) ** 0.5 * eps


def guided_noise(backend: DiffusionBackend, z: torch.Tensor, t: int, schedule: NoiseSchedule,
                 c: torch.Tensor, control: Optional[torch.Tensor], guidance_scale: float) -> torch.Tensor:
    t_norm = t / schedule.steps
    eps = backend.predict_noise(z, t_norm, c, control)
    if guidance_scale == 1.0:
        return eps
    eps_uncond = backend.predict_noise(z, t_norm, backend.null_condition(), control)
    return eps_uncond + guidance_scale * (eps - eps_uncond)


def _check_finite(z: torch.Tensor, step: int, phase: str) -> None:
    if not torch.isfinite(z).all():
        raise NonFiniteLatentError(step, phase)


def ddim_invert(
    z0: torch.Tensor,
    c: torch.Tensor,
    schedule: NoiseSchedule,
    backend: DiffusionBackend,
    control: Optional[torch.Tensor] = None,
    guidance_scale: float = 1.0,
    return_trajectory: bool = False,
) -> Union[torch.Tensor, Tuple[torch.Tensor, List[torch.Tensor]]]:
    """z_{t+1} from z_t with eps_hat = eps_theta(z_t, t, c), for t = 0..T-1."""
    _check_finite(z0, 0, "inversion")
    z = z0
    trajectory = [z0]
    for t in range(schedule.steps):
        eps = guided_noise(backend, z, t, schedule, c, control, guidance_scale)
        z = ddim_step(z, eps, schedule[t], schedule[t + 1])
        _check_finite(z, t + 1, "inversion")
        if return_trajectory:
            trajectory.append(z)
    return (z, trajectory) if return_trajectory else z


def ddim_sample(
    zT: torch.Tensor,
    c: torch.Tensor,
    schedule: NoiseSchedule,
    backend: DiffusionBackend,
    hooks: Sequence[LatentTransform] = (),
    control: Optional[torch.Tensor] = None,
    guidance_scale: float = 1.0,
    return_trajectory: bool = False,
) -> Union[torch.Tensor, Tuple[torch.Tensor, List[torch.Tensor]]]:
    """z_{t-1} from z_t with eps_hat = eps_theta(z_t, t, c), for t = T..1; hooks see each new level."""
    _check_finite(zT, schedule.steps, "sampling")
    z = zT
    trajectory = [zT]
    for t in range(schedule.steps, 0, -1):
        eps = guided_noise(backend, z, t, schedule, c, control, guidance_scale)
        z = ddim_step(z, eps, schedule[t], schedule[t - 1])
        for hook in hooks:
            z = hook(t - 1, z)
        _check_finite(z, t - 1, "sampling")
        if return_trajectory:
            trajectory.append(z)
    return (z, trajectory) if return_trajectory else z
