"""Low-rank weight deltas and their fine-tuning on a single (latent, condition) pair."""
import logging
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import torch

from core.errors import BackendNotTrainableError, LoraLayerMismatchError, LoraRankError, StoreParseError
from diffusion.backend import LATENT_DTYPE, DiffusionBackend
from diffusion.schedule import NoiseSchedule
from diffusion.training import TrainingReport, train_denoiser

logger = logging.getLogger(__name__)

ARCHIVE_FORMAT = "groundgen-lora"


def _flat_dims(shape) -> Tuple[int, int]:
    out_dim = shape[0]
    in_dim = 1
    for s in shape[1:]:
        in_dim *= s
    return out_dim, in_dim


@dataclass(frozen=True, eq=False)
class LoraDelta:
    """Per layer: down A (r x in*k*k), up B (out x r); effective delta = (B @ A) reshaped to the weight.

    Scaling acts on B and addition concatenates factors, so both are exact on effective deltas.
    """
    factors: Dict[str, Tuple[torch.Tensor, torch.Tensor]] = field(default_factory=dict)
    shapes: Dict[str, Tuple[int, ...]] = field(default_factory=dict)

    @property
    def layer_names(self) -> List[str]:
        return sorted(self.factors)

    @property
    def rank(self) -> int:
        return max((down.shape[0] for down, _ in self.factors.values()), default=0)

    def is_empty(self) -> bool:
        return not self.factors

    def effective(self, name: str) -> torch.Tensor:
        down, up = self.factors[name]
        return (up @ down).reshape(self.shapes[name])

    def scaled(self, s: float) -> "LoraDelta":
        return LoraDelta({n: (down, up * s) for n, (down, up) in self.factors.items()}, dict(self.shapes))

    def __add__(self, other: "LoraDelta") -> "LoraDelta":
        if self.shapes != other.shapes:
            raise LoraLayerMismatchError(
                f"cannot combine deltas over {sorted(self.shapes)} and {sorted(other.shapes)} (or shapes differ)"
            )
        factors = {}
        for name in self.factors:
            down_a, up_a = self.factors[name]
            down_b, up_b = other.factors[name]
            factors[name] = (torch.cat([down_a, down_b], dim=0), torch.cat([up_a, up_b], dim=1))
        return LoraDelta(factors, dict(self.shapes))

    @classmethod
    def initial(cls, shapes: Dict[str, torch.Size], rank: int, seed: int = 0) -> "LoraDelta":
        """A ~ N(0, 1/fan_in), B = 0: a zero effective delta that still trains."""
        gen = torch.Generator().manual_seed(seed)
        factors = {}
        for name in sorted(shapes):
            out_dim, in_dim = _flat_dims(shapes[name])
            if rank > min(out_dim, in_dim):
                raise LoraRankError(f"rank {rank} exceeds min({out_dim}, {in_dim}) of layer '{name}'")
            down = torch.randn(rank, in_dim, generator=gen, dtype=LATENT_DTYPE) / in_dim ** 0.5
            factors[name] = (down, torch.zeros(out_dim, rank, dtype=LATENT_DTYPE))
        return cls(factors, {n: tuple(s) for n, s in shapes.items()})

    @classmethod
    def zeros(cls, shapes: Dict[str, torch.Size], rank: int) -> "LoraDelta":
        factors = {}
        for name in sorted(shapes):
            out_dim, in_dim = _flat_dims(shapes[name])
            if rank > min(out_dim, in_dim):
                raise LoraRankError(f"rank {rank} exceeds min({out_dim}, {in_dim}) of layer '{name}'")
            factors[name] = (torch.zeros(rank, in_dim, dtype=LATENT_DTYPE), torch.zeros(out_dim, rank, dtype=LATENT_DTYPE))
        return cls(factors, {n: tuple(s) for n, s in shapes.items()})

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(
            {
                "format": ARCHIVE_FORMAT,
                "shapes": {n: list(s) for n, s in self.shapes.items()},
                "down": {n: f[0] for n, f in self.factors.items()},
                "up": {n: f[1] for n, f in self.factors.items()},
            },
            path,
        )
        return path

    @classmethod
    def load(cls, path) -> "LoraDelta":
        path = Path(path)
        try:
            archive = torch.load(path, map_location="cpu", weights_only=True)
        except (OSError, RuntimeError, EOFError, pickle.UnpicklingError) as e:
            raise StoreParseError(path, str(e)) from e
        if archive.get("format") != ARCHIVE_FORMAT:
            raise StoreParseError(path, "not a LoRA archive")
        factors = {n: (archive["down"][n], archive["up"][n]) for n in archive["shapes"]}
        return cls(factors, {n: tuple(s) for n, s in archive["shapes"].items()})


def lora_interpolate(delta_i: LoraDelta, delta_j: LoraDelta, alpha: float) -> LoraDelta:
    """(1 - alpha) delta_i + alpha delta_j on effective deltas."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return delta_i.scaled(1.0 - alpha) + delta_j.scaled(alpha)


def lora_finetune(
    backend: DiffusionBackend,
    z0: torch.Tensor,
    c: torch.Tensor,
    schedule: NoiseSchedule,
    steps: int,
    rank: int = 4,
    learning_rate: float = 0.1,
    batch_size: int = 4,
    seed: int = 0,
    control: Optional[torch.Tensor] = None,
) -> Tuple[LoraDelta, TrainingReport]:
    """Fit a LoRA on one latent under one condition; the backend's own weights are untouched."""
    layers = backend.adaptable_layers()
    if not layers:
        if steps:
            raise BackendNotTrainableError(f"{backend.__class__.__name__} has no adaptable layers")
        return LoraDelta(), TrainingReport()

    delta = LoraDelta.initial(layers, rank, seed)
    trainable = {}
    for name, (down, up) in delta.factors.items():
        trainable[f"{name}.lora_down"] = down.clone().requires_grad_(True)
        trainable[f"{name}.lora_up"] = up.clone().requires_grad_(True)
    base = backend.named_parameters()

    def forward(z_t, t, cond, ctrl):
        merged = dict(base)
        for name, shape in layers.items():
            merged[name] = base[name] + (trainable[f"{name}.lora_up"] @ trainable[f"{name}.lora_down"]).reshape(shape)
        return backend.forward(z_t, t, cond, ctrl, parameters=merged)

    controls = control.unsqueeze(0) if control is not None else None
    report = train_denoiser(forward, trainable, z0.unsqueeze(0), c.unsqueeze(0), schedule, steps,
                            learning_rate, batch_size, seed, controls)
    tuned = LoraDelta(
        {name: (trainable[f"{name}.lora_down"].detach(), trainable[f"{name}.lora_up"].detach()) for name in layers},
        dict(delta.shapes),
    )
    if report.losses:
        logger.debug(f"LoRA rank {rank}: loss {report.initial_loss:.4f} -> {report.final_loss:.4f} over {steps} steps")
    return tuned, report
