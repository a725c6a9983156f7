"""Fixed seeded linear image autoencoder (E, D) over square patches."""
import numpy as np
import torch

from core.errors import DimensionMismatchError

IMAGE_CHANNELS = 3


class LinearAutoencoder:
    """E projects each p x p RGB patch onto `channels` orthonormal directions; D is the transpose.

    E(D(z)) = z, and D(E(x)) is the orthogonal projection of x onto the basis span.
    """

    def __init__(self, seed: int = 0, patch: int = 4, channels: int = 4):
        patch_dim = IMAGE_CHANNELS * patch * patch
        if channels > patch_dim:
            raise DimensionMismatchError(patch_dim, channels, "latent channels (must not exceed patch dim)")
        self.seed = seed
        self.patch = patch
        self.channels = channels
        gen = torch.Generator().manual_seed(seed)
        q, _ = torch.linalg.qr(torch.randn(patch_dim, channels, generator=gen, dtype=torch.float64))
        self.basis = q.T.contiguous()  # channels x patch_dim

    def latent_shape(self, resolution: int):
        if resolution % self.patch:
            raise DimensionMismatchError(self.patch, resolution, "resolution (must be a multiple of the patch size)")
        side = resolution // self.patch
        return (self.channels, side, side)

    def encode(self, image: np.ndarray) -> torch.Tensor:
        """uint8 H x W x 3 image -> latent (channels, H/p, W/p)."""
        height, width, _ = image.shape
        p = self.patch
        if height % p or width % p:
            raise DimensionMismatchError(p, height if height % p else width, "image side (must be a multiple of the patch size)")
        x = torch.from_numpy(np.ascontiguousarray(image)).to(torch.float64) / 127.5 - 1.0
        patches = (
            x.permute(2, 0, 1)
            .reshape(IMAGE_CHANNELS, height // p, p, width // p, p)
            .permute(1, 3, 0, 2, 4)
            .reshape(height // p, width // p, -1)
        )
        return (patches @ self.basis.T).permute(2, 0, 1).contiguous()

    def decode(self, latent: torch.Tensor) -> np.ndarray:
        """Latent (channels, h, w) -> uint8 (h*p) x (w*p) x 3 image."""
        _, h, w = latent.shape
        p = self.patch
        patches = latent.permute(1, 2, 0) @ self.basis
        x = patches.reshape(h, w, IMAGE_CHANNELS, p, p).permute(0, 3, 1, 4, 2).reshape(h * p, w * p, IMAGE_CHANNELS)
        pixels = ((x + 1.0) * 127.5).round().clamp(0, 255)
        return pixels.to(torch.uint8).numpy()
