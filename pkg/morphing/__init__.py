"""LoRA interpolation and latent slerp for transitions between segments."""

from .lora import LoraDelta, lora_finetune, lora_interpolate
from .slerp import latent_angle, lerp, slerp
from .transition import TransitionResult, TransitionSpec, generate_transition

__all__ = [
    "LoraDelta",
    "lora_finetune",
    "lora_interpolate",
    "latent_angle",
    "lerp",
    "slerp",
    "TransitionResult",
    "TransitionSpec",
    "generate_transition",
]
