"""Spherical interpolation of noise latents and linear interpolation of conditions."""
import math

import torch

from core.errors import AntipodalLatentError, DimensionMismatchError, ZeroLatentError

PARALLEL_THRESHOLD = 1e-4
ANTIPODAL_THRESHOLD = 1e-4


def latent_angle(z_i: torch.Tensor, z_j: torch.Tensor) -> float:
    a = z_i.to(torch.float64).flatten()
    b = z_j.to(torch.float64).flatten()
    norm_a = torch.linalg.vector_norm(a).item()
    norm_b = torch.linalg.vector_norm(b).item()
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroLatentError("cannot interpolate a zero-norm latent")
    cos = torch.dot(a, b).item() / (norm_a * norm_b)
    return math.acos(max(-1.0, min(1.0, cos)))


def lerp(a: torch.Tensor, b: torch.Tensor, alpha: float) -> torch.Tensor:
    return (1.0 - alpha) * a + alpha * b


def slerp(z_i: torch.Tensor, z_j: torch.Tensor, alpha: float) -> torch.Tensor:
    """sin((1 - alpha) phi) / sin(phi) z_i + sin(alpha phi) / sin(phi) z_j.

    Falls back to lerp when the latents are nearly parallel; nearly antipodal
    latents have no unique great circle and are rejected.
    """
    if z_i.shape != z_j.shape:
        raise DimensionMismatchError(z_i.numel(), z_j.numel(), "latent size")
    phi = latent_angle(z_i, z_j)
    if phi < PARALLEL_THRESHOLD:
        return lerp(z_i, z_j, alpha)
    if math.pi - phi < ANTIPODAL_THRESHOLD:
        raise AntipodalLatentError(f"latents are antipodal (angle {phi:.6f} rad); re-seed one endpoint")
    sin_phi = math.sin(phi)
    return (math.sin((1.0 - alpha) * phi) / sin_phi) * z_i + (math.sin(alpha * phi) / sin_phi) * z_j
