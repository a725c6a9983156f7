"""Inter-frame consistency hooks applied inside the DDIM sampling loop."""
import logging
import math
from abc import ABC, abstractmethod
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import torch

from core.errors import UnknownHookError
from core.models import HookConfig

logger = logging.getLogger(__name__)


class LatentHook(ABC):
    """Called with (t, z_t) after each sampling step of a frame; returns the latent to continue from.

    A hook instance belongs to one segment. Cross-window attention and global
    token merging would attach through this same interface.
    """

    name: str = ""

    def start_frame(self, index: int) -> None:
        pass

    @abstractmethod
    def __call__(self, t: int, z: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def end_frame(self) -> None:
        pass


class PreframeInjectionHook(LatentHook):
    """z_t^i <- (1 - w) z_t^i + w z_t^{i-1} for t in step_range; no-op on frame 0."""

    name = "preframe_injection"

    def __init__(self, weight: float, step_range: Tuple[int, int]):
        if not 0.0 <= weight <= 1.0:
            raise ValueError(f"injection weight must lie in [0, 1], got {weight}")
        self.weight = weight
        self.step_range = step_range
        self._frame = 0
        self._previous: Dict[int, torch.Tensor] = {}
        self._current: Dict[int, torch.Tensor] = {}

    def start_frame(self, index: int) -> None:
        self._frame = index
        self._current = {}

    def __call__(self, t: int, z: torch.Tensor) -> torch.Tensor:
        lo, hi = self.step_range
        previous = self._previous.get(t)
        if self.weight > 0.0 and self._frame > 0 and previous is not None and lo <= t <= hi:
            z = (1.0 - self.weight) * z + self.weight * previous
        self._current[t] = z
        return z

    def end_frame(self) -> None:
        self._previous = self._current
        self._current = {}


def default_step_range(steps: int, active_fraction: float = 0.8) -> Tuple[int, int]:
    """Levels reached by the first `active_fraction` of sampling steps: T-1 down to T-ceil(fT)."""
    active = max(1, math.ceil(active_fraction * steps))
    return (steps - active, steps - 1)


def _preframe_injection(config: HookConfig, steps: int) -> LatentHook:
    step_range = config.step_range or default_step_range(steps, config.active_fraction)
    return PreframeInjectionHook(config.weight, tuple(step_range))


HOOK_REGISTRY: Dict[str, Callable[[HookConfig, int], LatentHook]] = {
    "preframe_injection": _preframe_injection,
}


def build_hooks(configs: Sequence[HookConfig], steps: int) -> List[LatentHook]:
    """Fresh hook instances for one segment."""
    hooks = []
    for config in configs:
        factory = HOOK_REGISTRY.get(config.name)
        if factory is None:
            raise UnknownHookError(config.name, HOOK_REGISTRY)
        hooks.append(factory(config, steps))
    return hooks
