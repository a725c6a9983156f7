"""File-based run outputs.

Layout under a run directory:
    frames/%06d.png                 concatenated output frames
    frames.txt                      frame list for external encoders
    manifest.json                   RunManifest
    segments/<k>/segment.json       per-segment audit record
"""
import json
import logging
import os
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from PIL import Image

from core.models import RunManifest, SegmentAudit

FRAME_PATTERN = "{:06d}.png"


class ArtifactStore:
    """Writes frames and records for one run; reads back manifests of earlier runs."""

    def __init__(self, base_dir):
        self.base = Path(base_dir)
        self.frames_dir = self.base / "frames"
        self.logger = logging.getLogger(self.__class__.__name__)
        self._next_frame = 0

    def reset(self) -> None:
        """Drop frames of a previous run in the same directory."""
        if self.frames_dir.exists():
            for stale in self.frames_dir.glob("*.png"):
                stale.unlink()
        self._next_frame = 0

    @property
    def frame_count(self) -> int:
        return self._next_frame

    def write_frames(self, frames: Iterable[np.ndarray]) -> int:
        """Append frames with sequential numbering; returns the index of the first one written."""
        self.frames_dir.mkdir(parents=True, exist_ok=True)
        first = self._next_frame
        for frame in frames:
            Image.fromarray(frame).save(self.frames_dir / FRAME_PATTERN.format(self._next_frame))
            self._next_frame += 1
        return first

    def write_frame_list(self) -> Path:
        path = self.base / "frames.txt"
        names = [f"frames/{FRAME_PATTERN.format(i)}" for i in range(self._next_frame)]
        path.write_text("\n".join(names) + ("\n" if names else ""), encoding="utf-8")
        return path

    def write_segment(self, index: int, audit: SegmentAudit) -> Path:
        path = self.base / "segments" / str(index) / "segment.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(audit.model_dump_json(indent=2), encoding="utf-8")
        return path

    def write_manifest(self, manifest: RunManifest) -> Path:
        self.base.mkdir(parents=True, exist_ok=True)
        path = self.base / "manifest.json"
        tmp = self.base / "manifest.json.tmp"
        tmp.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
        os.replace(tmp, path)
        self.logger.info(f"Wrote manifest {path} ({manifest.total_frames} frames)")
        return path

    def read_manifest(self) -> Optional[RunManifest]:
        path = self.base / "manifest.json"
        if not path.exists():
            return None
        return RunManifest.model_validate(json.loads(path.read_text(encoding="utf-8")))
