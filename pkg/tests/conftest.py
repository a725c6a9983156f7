"""Shared fixtures: synthetic stores, frames and backends."""
import numpy as np
import pytest

from core.feature_store import FeatureStore
from diffusion.backend import ConstantNoiseBackend
from diffusion.toy_backend import ToyConvBackend


def synthetic_frames(count: int, size: int = 32, seed: int = 0):
    """A colored square drifting across a smooth gradient."""
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 256, size=3)
    square = rng.integers(0, 256, size=3)
    ramp = np.linspace(0, 60, size)
    frames = []
    for k in range(count):
        image = np.empty((size, size, 3), dtype=np.float64)
        image[:] = base
        image += ramp[None, :, None]
        left = (2 * k) % (size - size // 4)
        image[size // 4: size // 2, left: left + size // 4] = square
        frames.append(np.clip(image, 0, 255).astype(np.uint8))
    return frames


@pytest.fixture
def frames_factory():
    return synthetic_frames


@pytest.fixture
def store_builder(tmp_path):
    def build(num_videos=3, num_clips=4, frames_per_clip=2, feature_dim=16, seed=0, frame_size=32, name="store"):
        store = FeatureStore(tmp_path / name)
        rng = np.random.default_rng(seed)
        for v in range(num_videos):
            features = rng.standard_normal((num_clips, feature_dim)).astype(np.float32)
            frames = synthetic_frames(num_clips * frames_per_clip, frame_size, seed * 1000 + v)
            store.ingest_arrays(f"video_{v:02d}", frames, features, fps=10.0)
        return store
    return build


@pytest.fixture
def toy_backend():
    return ToyConvBackend.create(seed=0)


@pytest.fixture
def constant_backend():
    return ConstantNoiseBackend(0.3)
