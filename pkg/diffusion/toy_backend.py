"""Two-layer convolutional noise predictor small enough to train on a CPU."""
import logging
import math
import pickle
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from core.errors import LoraLayerMismatchError, StoreParseError
from diffusion.autoencoder import LinearAutoencoder
from diffusion.backend import LATENT_DTYPE, DiffusionBackend
from diffusion.schedule import NoiseSchedule
from diffusion.training import TrainingReport, train_denoiser
from grounding.text_encoder import HashTextEncoder, tokenize

logger = logging.getLogger(__name__)

ARCHIVE_FORMAT = "groundgen-toy-backend"
ARCHIVE_VERSION = 1
ADAPTABLE_LAYERS = ("conv_in.weight", "conv_out.weight")
# Small output layer keeps the untrained predictor near state-independent.
OUT_INIT_SCALE = 0.01


def _denoise(x: torch.Tensor, p: Dict[str, torch.Tensor]) -> torch.Tensor:
    """conv3x3 -> silu -> conv3x3 over an explicit weight dict; touches no shared module state."""
    h = F.silu(F.conv2d(x, p["conv_in.weight"], p["conv_in.bias"], padding=1))
    return F.conv2d(h, p["conv_out.weight"], p["conv_out.bias"], padding=1)


def _init_parameters(in_channels: int, hidden: int, out_channels: int, seed: int) -> Dict[str, torch.Tensor]:
    gen = torch.Generator().manual_seed(seed)

    def kaiming(shape):
        fan_in = shape[1] * shape[2] * shape[3]
        return torch.randn(shape, generator=gen, dtype=LATENT_DTYPE) * math.sqrt(2.0 / fan_in)

    return {
        "conv_in.weight": kaiming((hidden, in_channels, 3, 3)),
        "conv_in.bias": torch.zeros(hidden, dtype=LATENT_DTYPE),
        "conv_out.weight": kaiming((out_channels, hidden, 3, 3)) * OUT_INIT_SCALE,
        "conv_out.bias": torch.zeros(out_channels, dtype=LATENT_DTYPE),
    }


class ToyConvBackend(DiffusionBackend):
    """Input channels: latent, one control channel, broadcast condition, broadcast timestep."""

    def __init__(
        self,
        parameters: Dict[str, torch.Tensor],
        autoencoder: LinearAutoencoder,
        text_encoder: HashTextEncoder,
        hidden: int = 16,
        vocabulary: Iterable[str] = (),
    ):
        super().__init__(autoencoder, text_encoder, frozenset(vocabulary))
        self.hidden = hidden
        self.in_channels = self.latent_channels + 1 + self.cond_dim + 1
        self._parameters = {name: p.detach().clone() for name, p in parameters.items()}
        self.logger = logging.getLogger(self.__class__.__name__)

    @classmethod
    def create(cls, seed: int = 0, channels: int = 4, patch: int = 4, cond_dim: int = 8,
               hidden: int = 16) -> "ToyConvBackend":
        autoencoder = LinearAutoencoder(seed=seed, patch=patch, channels=channels)
        text_encoder = HashTextEncoder(dim=cond_dim, seed=seed)
        in_channels = channels + 1 + cond_dim + 1
        return cls(_init_parameters(in_channels, hidden, channels, seed), autoencoder, text_encoder, hidden)

    # Forward pass

    def forward(self, z: torch.Tensor, t: torch.Tensor, c: torch.Tensor, control: Optional[torch.Tensor] = None,
                parameters: Optional[Dict[str, torch.Tensor]] = None) -> torch.Tensor:
        """Batched, differentiable epsilon_theta; `parameters` overrides the stored weights."""
        batch, _, h, w = z.shape
        if control is None:
            control = torch.zeros(batch, 1, h, w, dtype=z.dtype)
        cond = c.view(batch, -1, 1, 1).expand(batch, self.cond_dim, h, w)
        time = t.view(batch, 1, 1, 1).expand(batch, 1, h, w)
        x = torch.cat([z, control, cond, time], dim=1)
        return _denoise(x, parameters if parameters is not None else self._parameters)

    def predict_noise(self, z, t, c, control=None):
        self.check_latent(z)
        with torch.no_grad():
            t_batch = torch.full((1,), float(t), dtype=z.dtype)
            ctrl = control.unsqueeze(0) if control is not None else None
            return self.forward(z.unsqueeze(0), t_batch, c.unsqueeze(0), ctrl)[0]

    # Parameters

    @property
    def trainable(self) -> bool:
        return True

    def named_parameters(self) -> Dict[str, torch.Tensor]:
        return {name: p.clone() for name, p in self._parameters.items()}

    def adaptable_layers(self) -> Dict[str, torch.Size]:
        return {name: self._parameters[name].shape for name in ADAPTABLE_LAYERS}

    def replace_parameters(self, parameters: Dict[str, torch.Tensor],
                           vocabulary: Optional[Iterable[str]] = None) -> "ToyConvBackend":
        missing = set(self._parameters) ^ set(parameters)
        if missing:
            raise LoraLayerMismatchError(f"parameter set differs from backend layers: {sorted(missing)}")
        return ToyConvBackend(
            parameters,
            self.autoencoder,
            self.text_encoder,
            self.hidden,
            self.common_vocabulary if vocabulary is None else vocabulary,
        )

    def with_delta(self, delta) -> "ToyConvBackend":
        """New backend with base weights + effective LoRA delta; this backend is untouched."""
        unknown = set(delta.layer_names) - set(ADAPTABLE_LAYERS)
        if unknown:
            raise LoraLayerMismatchError(f"delta targets non-adaptable layers {sorted(unknown)}")
        merged = dict(self._parameters)
        for name in delta.layer_names:
            effective = delta.effective(name)
            if effective.shape != merged[name].shape:
                raise LoraLayerMismatchError(f"{name}: delta shape {tuple(effective.shape)} != {tuple(merged[name].shape)}")
            merged[name] = merged[name] + effective
        return self.replace_parameters(merged)

    def fine_tuned(self, latents: torch.Tensor, conditions: torch.Tensor, schedule: NoiseSchedule, steps: int,
                   learning_rate: float, batch_size: int, seed: int, vocabulary: Iterable[str] = (),
                   controls: Optional[torch.Tensor] = None) -> Tuple["ToyConvBackend", TrainingReport]:
        """Full fine-tune of a copy of every weight."""
        parameters = {name: p.clone().requires_grad_(True) for name, p in self._parameters.items()}

        def forward(z_t, t, c, control):
            return self.forward(z_t, t, c, control, parameters=parameters)

        report = train_denoiser(forward, parameters, latents, conditions, schedule, steps,
                                learning_rate, batch_size, seed, controls)
        tuned = {name: p.detach() for name, p in parameters.items()}
        return self.replace_parameters(tuned, self.common_vocabulary | frozenset(vocabulary)), report

    def pretrain(self, images: Sequence[np.ndarray], captions: Sequence[str], schedule: NoiseSchedule,
                 steps: int, learning_rate: float = 0.05, batch_size: int = 4,
                 seed: int = 0) -> Tuple["ToyConvBackend", TrainingReport]:
        latents = torch.stack([self.encode(image) for image in images])
        conditions = torch.stack([self.encode_text(caption) for caption in captions])
        words: List[str] = [word for caption in captions for word in tokenize(caption)]
        backend, report = self.fine_tuned(latents, conditions, schedule, steps, learning_rate, batch_size, seed, words)
        self.logger.info(f"Pretrained on {len(images)} images for {steps} steps")
        return backend, report

    # Archive

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(
            {
                "format": ARCHIVE_FORMAT,
                "version": ARCHIVE_VERSION,
                "config": {
                    "channels": self.latent_channels,
                    "patch": self.autoencoder.patch,
                    "autoencoder_seed": self.autoencoder.seed,
                    "cond_dim": self.cond_dim,
                    "text_seed": self.text_encoder.seed,
                    "hidden": self.hidden,
                },
                "parameters": self.named_parameters(),
                "vocabulary": sorted(self.common_vocabulary),
            },
            path,
        )
        return path

    @classmethod
    def load(cls, path) -> "ToyConvBackend":
        path = Path(path)
        try:
            archive = torch.load(path, map_location="cpu", weights_only=True)
        except (OSError, RuntimeError, EOFError, pickle.UnpicklingError) as e:
            raise StoreParseError(path, str(e)) from e
        if archive.get("format") != ARCHIVE_FORMAT or archive.get("version") != ARCHIVE_VERSION:
            raise StoreParseError(path, f"not a {ARCHIVE_FORMAT} v{ARCHIVE_VERSION} archive")
        config = archive["config"]
        autoencoder = LinearAutoencoder(seed=config["autoencoder_seed"], patch=config["patch"],
                                        channels=config["channels"])
        text_encoder = HashTextEncoder(dim=config["cond_dim"], seed=config["text_seed"])
        return cls(archive["parameters"], autoencoder, text_encoder, config["hidden"], archive["vocabulary"])
