"""Noise-prediction backend interface shared by editing, morphing and personalization."""
from abc import ABC, abstractmethod
from typing import Dict, FrozenSet, Optional

import numpy as np
import torch

from core.errors import BackendNotTrainableError, DimensionMismatchError
from diffusion.autoencoder import LinearAutoencoder
from grounding.text_encoder import HashTextEncoder, TextEncoder, tokenize

LATENT_DTYPE = torch.float64


class DiffusionBackend(ABC):
    """epsilon_theta plus the frame codec (E, D) and the text condition encoder.

    Instances are immutable after construction: adapted or fine-tuned variants
    are new backends, so one backend can serve several threads.
    """

    def __init__(self, autoencoder: LinearAutoencoder, text_encoder: TextEncoder,
                 vocabulary: FrozenSet[str] = frozenset()):
        self.autoencoder = autoencoder
        self.text_encoder = text_encoder
        self.common_vocabulary = frozenset(vocabulary)

    @property
    def latent_channels(self) -> int:
        return self.autoencoder.channels

    @property
    def cond_dim(self) -> int:
        return self.text_encoder.dim

    def latent_shape(self, resolution: int):
        return self.autoencoder.latent_shape(resolution)

    def encode(self, image: np.ndarray) -> torch.Tensor:
        return self.autoencoder.encode(image)

    def decode(self, latent: torch.Tensor) -> np.ndarray:
        return self.autoencoder.decode(latent)

    def encode_text(self, text: str) -> torch.Tensor:
        return torch.from_numpy(self.text_encoder.encode(text).vector).to(LATENT_DTYPE)

    def null_condition(self) -> torch.Tensor:
        return torch.zeros(self.cond_dim, dtype=LATENT_DTYPE)

    def knows_token(self, token: str) -> bool:
        return any(t in self.common_vocabulary for t in tokenize(token))

    @abstractmethod
    def predict_noise(self, z: torch.Tensor, t: float, c: torch.Tensor,
                      control: Optional[torch.Tensor] = None) -> torch.Tensor:
        """epsilon_hat for latent z (C, h, w) at normalized timestep t in [0, 1]."""
        raise NotImplementedError

    def adaptable_layers(self) -> Dict[str, torch.Size]:
        """Weight shapes LoRA may attach to, keyed by layer name."""
        return {}

    @property
    def trainable(self) -> bool:
        return False

    def with_delta(self, delta) -> "DiffusionBackend":
        if delta.is_empty():
            return self
        raise BackendNotTrainableError(f"{self.__class__.__name__} has no adaptable layers")

    def check_latent(self, z: torch.Tensor) -> None:
        if z.dim() != 3 or z.shape[0] != self.latent_channels:
            raise DimensionMismatchError(self.latent_channels, z.shape[0] if z.dim() else 0, "latent channels")


class ConstantNoiseBackend(DiffusionBackend):
    """Analytic predictor returning the same epsilon for every input."""

    def __init__(self, value: float = 0.0, autoencoder: Optional[LinearAutoencoder] = None,
                 text_encoder: Optional[TextEncoder] = None):
        super().__init__(autoencoder or LinearAutoencoder(), text_encoder or HashTextEncoder(dim=8))
        self.value = float(value)

    def predict_noise(self, z, t, c, control=None):
        self.check_latent(z)
        return torch.full_like(z, self.value)
