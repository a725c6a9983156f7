"""Noise schedules: cumulative signal rates alpha_0 = 1 > ... > alpha_T = alpha_min."""
import math
from dataclasses import dataclass
from typing import List, Tuple

import torch

from core.errors import ScheduleError

SCHEDULE_KINDS = ("linear", "cosine")


@dataclass(frozen=True)
class NoiseSchedule:
    alphas: Tuple[float, ...]
    kind: str = "linear"

    def __post_init__(self):
        if len(self.alphas) < 2:
            raise ScheduleError("a schedule needs at least alpha_0 and alpha_1")
        if any(not (0.0 < a <= 1.0) for a in self.alphas):
            raise ScheduleError("every alpha must lie in (0, 1]")
        if any(b >= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise ScheduleError("alphas must be strictly decreasing")

    @property
    def steps(self) -> int:
        return len(self.alphas) - 1

    def __getitem__(self, t: int) -> float:
        return self.alphas[t]

    def tensor(self) -> torch.Tensor:
        return torch.tensor(self.alphas, dtype=torch.float64)

    def to_list(self) -> List[float]:
        return list(self.alphas)


def make_schedule(steps: int, kind: str = "linear", alpha_min: float = 0.01) -> NoiseSchedule:
    """Build alpha_0..alpha_T with alpha_0 = 1 and alpha_T = alpha_min.

    linear: alpha_t = 1 - (1 - alpha_min) * t / T
    cosine: alpha_t = alpha_min + (1 - alpha_min) * cos^2(pi t / 2T)
    """
    if steps < 1:
        raise ScheduleError(f"T must be >= 1, got {steps}")
    if not 0.0 < alpha_min < 1.0:
        raise ScheduleError(f"alpha_min must lie in (0, 1), got {alpha_min}")
    if kind == "linear":
        alphas = [1.0 - (1.0 - alpha_min) * t / steps for t in range(steps + 1)]
    elif kind == "cosine":
        alphas = [alpha_min + (1.0 - alpha_min) * math.cos(math.pi * t / (2 * steps)) ** 2 for t in range(steps + 1)]
    else:
        raise ScheduleError(f"unknown schedule kind '{kind}'; available: {', '.join(SCHEDULE_KINDS)}")
    alphas[0] = 1.0
    alphas[-1] = alpha_min
    return NoiseSchedule(alphas=tuple(alphas), kind=kind)
