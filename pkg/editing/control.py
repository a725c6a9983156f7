"""Conditional control inputs (edge maps) fed to the predictor as an extra channel."""
from typing import List, Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from core.errors import UnsupportedControlError
from diffusion.backend import LATENT_DTYPE

CONTROL_KINDS = ("none", "edge")


def edge_map(frame: np.ndarray) -> np.ndarray:
    """Gradient magnitude of the grayscale frame scaled to [0, 1]; all zeros for a flat frame."""
    gray = np.asarray(frame, dtype=np.float64).mean(axis=2)
    gy, gx = np.gradient(gray)
    magnitude = np.hypot(gx, gy)
    peak = magnitude.max()
    return magnitude / peak if peak > 0 else np.zeros_like(magnitude)


def make_control(frames: Sequence[np.ndarray], kind: str, latent_side: int) -> List[Optional[torch.Tensor]]:
    """Per-frame control tensors (1, h, w) at latent resolution, or None when control is off."""
    if kind not in CONTROL_KINDS:
        raise UnsupportedControlError(kind, CONTROL_KINDS)
    if kind == "none":
        return [None] * len(frames)
    controls = []
    for frame in frames:
        edges = torch.from_numpy(edge_map(frame)).to(LATENT_DTYPE)[None, None]
        controls.append(F.interpolate(edges, size=(latent_side, latent_side), mode="area")[0])
    return controls
