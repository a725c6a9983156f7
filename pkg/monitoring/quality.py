"""Video quality metrics: built-in temporal flickering plus external plugin executables."""
import logging
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from core.errors import MetricError
from core.feature_store import read_frame
from core.metrics import plugin_failure_total
from core.models import MetricEntry

logger = logging.getLogger(__name__)

FLICKERING = "temporal_flickering"
PLUGIN_TIMEOUT_S = 600


def temporal_flickering(frames: Sequence[np.ndarray]) -> float:
    """(1 - mean |frame_{k+1} - frame_k| / 255) * 100 over adjacent pairs and pixels."""
    if len(frames) < 2:
        raise MetricError(f"temporal flickering needs at least 2 frames, got {len(frames)}")
    shape = frames[0].shape
    total = 0.0
    for previous, current in zip(frames, frames[1:]):
        if current.shape != shape:
            raise MetricError(f"frame shapes differ: {shape} vs {current.shape}")
        total += np.abs(current.astype(np.int16) - previous.astype(np.int16)).mean()
    score = (1.0 - total / (len(frames) - 1) / 255.0) * 100.0
    return float(min(100.0, max(0.0, score)))


def load_frames(frames_dir) -> List[np.ndarray]:
    paths = sorted(Path(frames_dir).glob("*.png"))
    if not paths:
        raise MetricError(f"no PNG frames in {frames_dir}")
    return [read_frame(p) for p in paths]


@dataclass(frozen=True)
class MetricPlugin:
    """External scorer: invoked as `<executable> <frames_dir>`, prints the score on its last stdout line."""
    executable: str

    @property
    def name(self) -> str:
        return Path(self.executable).stem

    def resolve(self) -> Optional[str]:
        path = Path(self.executable)
        if path.is_file():
            return str(path)
        return shutil.which(self.executable)

    def run(self, frames_dir) -> MetricEntry:
        executable = self.resolve()
        if executable is None:
            return MetricEntry(name=self.name, status="unavailable", detail=f"{self.executable} not found")
        try:
            completed = subprocess.run(
                [executable, str(frames_dir)], capture_output=True, text=True, timeout=PLUGIN_TIMEOUT_S
            )
        except (OSError, subprocess.TimeoutExpired) as e:
            plugin_failure_total.labels(plugin=self.name).inc()
            logger.error(f"Metric plugin {self.name} could not run: {e}")
            return MetricEntry(name=self.name, status="failed", detail=str(e))
        if completed.returncode != 0:
            plugin_failure_total.labels(plugin=self.name).inc()
            logger.error(f"Metric plugin {self.name} exited with code {completed.returncode}")
            return MetricEntry(name=self.name, status="failed", detail=f"exit code {completed.returncode}")
        lines = completed.stdout.strip().splitlines()
        try:
            value = float(lines[-1])
        except (IndexError, ValueError):
            plugin_failure_total.labels(plugin=self.name).inc()
            logger.error(f"Metric plugin {self.name} printed no numeric score")
            return MetricEntry(name=self.name, status="failed", detail="no numeric score on last stdout line")
        return MetricEntry(name=self.name, status="ok", value=value)


def metrics_report(frames_dir, plugins: Sequence[str] = ()) -> List[MetricEntry]:
    """Built-in temporal flickering first, then one entry per plugin in the given order."""
    frames = load_frames(frames_dir)
    table = [MetricEntry(name=FLICKERING, status="ok", value=temporal_flickering(frames))]
    for executable in plugins:
        entry = MetricPlugin(executable).run(frames_dir)
        logger.info(f"Metric {entry.name}: {entry.status} {entry.value if entry.value is not None else ''}")
        table.append(entry)
    return table
