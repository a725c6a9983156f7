"""Seeded synthetic captioned images for pretraining the toy backend."""
from typing import List, Tuple

import numpy as np

COLORS = {
    "red": (220, 40, 40),
    "green": (40, 180, 60),
    "blue": (40, 70, 210),
    "yellow": (230, 210, 40),
    "white": (240, 240, 240),
    "black": (20, 20, 20),
}
SHAPES = ("square", "stripe", "disk")


def render(shape: str, color: str, background: str, resolution: int, rng: np.random.Generator) -> np.ndarray:
    image = np.empty((resolution, resolution, 3), dtype=np.uint8)
    image[:] = COLORS[background]
    size = int(rng.integers(resolution // 4, resolution // 2 + 1))
    top, left = (int(v) for v in rng.integers(0, resolution - size + 1, size=2))
    if shape == "square":
        image[top:top + size, left:left + size] = COLORS[color]
    elif shape == "stripe":
        image[:, left:left + max(2, size // 3)] = COLORS[color]
    else:
        yy, xx = np.mgrid[:resolution, :resolution]
        cy, cx = top + size / 2, left + size / 2
        image[(yy - cy) ** 2 + (xx - cx) ** 2 <= (size / 2) ** 2] = COLORS[color]
    return image


def synthetic_training_set(count: int, resolution: int = 32, seed: int = 0) -> Tuple[List[np.ndarray], List[str]]:
    """Images of one colored shape on a plain background, captioned "a <color> <shape> on <background>"."""
    rng = np.random.default_rng(seed)
    names = sorted(COLORS)
    images, captions = [], []
    for _ in range(count):
        shape = SHAPES[int(rng.integers(len(SHAPES)))]
        color, background = (names[int(i)] for i in rng.choice(len(names), size=2, replace=False))
        images.append(render(shape, color, background, resolution, rng))
        captions.append(f"a {color} {shape} on {background}")
    return images, captions
