"""File-backed retrieval corpus.

Layout under the store root:
    store.json                    manifest (StoreManifest)
    <video_id>.features           float32 little-endian matrix, rows = clips
    <video_id>.features.json      sidecar {num_clips, feature_dim, fps, dtype}
    <video_id>/%06d.png           frames
"""
import hashlib
import json
import logging
import os
import re
import threading
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from PIL import Image
from pydantic import ValidationError

from core.errors import (
    DimensionMismatchError,
    IngestError,
    SchemaMigrationError,
    SpanError,
    StoreConflictError,
    StoreParseError,
    UnknownVideoError,
)
from core.models import STORE_SCHEMA_VERSION, StoreManifest, VideoRecord

logger = logging.getLogger(__name__)

MANIFEST_NAME = "store.json"
FRAME_PATTERN = "{:06d}.png"
FEATURE_DTYPE = "<f4"
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
TEXT_SUFFIXES = (".txt", ".csv", ".tsv")


def load_store(path) -> StoreManifest:
    """Read `store.json` under `path`; a missing or empty directory is an empty store."""
    manifest_path = Path(path) / MANIFEST_NAME
    if not manifest_path.exists():
        return StoreManifest()
    try:
        raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise StoreParseError(manifest_path, str(e)) from e
    if not isinstance(raw, dict):
        raise StoreParseError(manifest_path, "manifest is not a JSON object")
    version = raw.get("schema_version")
    if version != STORE_SCHEMA_VERSION:
        raise SchemaMigrationError(manifest_path, version, STORE_SCHEMA_VERSION)
    try:
        return StoreManifest.model_validate(raw)
    except ValidationError as e:
        raise StoreParseError(manifest_path, str(e)) from e


def save_store(manifest: StoreManifest, path) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    target = root / MANIFEST_NAME
    tmp = root / (MANIFEST_NAME + ".tmp")
    tmp.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    os.replace(tmp, target)


def partition_clips(num_frames: int, num_clips: int) -> List[Tuple[int, int]]:
    """Split frames into near-uniform contiguous clips (equal when num_clips divides num_frames)."""
    if num_frames < num_clips:
        raise IngestError(f"{num_frames} frames cannot be split into {num_clips} clips")
    bounds = [(i * num_frames) // num_clips for i in range(num_clips + 1)]
    return [(bounds[i], bounds[i + 1] - 1) for i in range(num_clips)]


def _read_flat_matrix(path: Path, sidecar: dict) -> np.ndarray:
    try:
        num_clips = int(sidecar["num_clips"])
        feature_dim = int(sidecar["feature_dim"])
    except (KeyError, TypeError, ValueError) as e:
        raise IngestError(f"{path}: binary features need num_clips and feature_dim in the sidecar") from e
    dtype = np.dtype(sidecar.get("dtype", FEATURE_DTYPE))
    expected = num_clips * feature_dim * dtype.itemsize
    actual = path.stat().st_size
    if actual != expected:
        raise IngestError(
            f"{path}: {actual} bytes but sidecar declares {num_clips}x{feature_dim} {dtype.str} ({expected} bytes)"
        )
    return np.fromfile(path, dtype=dtype).reshape(num_clips, feature_dim)


def frame_sort_key(path: Path) -> Tuple:
    """Natural order on the file stem, so `2.png` precedes `10.png`."""
    parts = re.split(r"(\d+)", path.stem)
    return tuple((0, int(p), "") if p.isdigit() else (1, 0, p) for p in parts if p), path.name


def read_sidecar(features_path) -> Optional[dict]:
    sidecar_path = Path(str(features_path) + ".json")
    if not sidecar_path.exists():
        return None
    try:
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise StoreParseError(sidecar_path, str(e)) from e
    if not isinstance(sidecar, dict):
        raise StoreParseError(sidecar_path, "sidecar is not a JSON object")
    return sidecar


def read_feature_matrix(path, sidecar: Optional[dict] = None) -> np.ndarray:
    """Load `.npy`, text, or (with a sidecar) a flat binary matrix of `dtype` rows x cols."""
    path = Path(path)
    try:
        if path.suffix == ".npy":
            matrix = np.load(path)
        elif path.suffix in TEXT_SUFFIXES or sidecar is None:
            matrix = np.loadtxt(path, ndmin=2)
        else:
            matrix = _read_flat_matrix(path, sidecar)
    except IngestError:
        raise
    except (OSError, ValueError, TypeError) as e:
        raise StoreParseError(path, str(e)) from e
    if matrix.ndim != 2:
        raise IngestError(f"{path}: feature matrix must be 2-D, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise IngestError(f"{path}: feature matrix has non-finite entries")
    return matrix.astype(FEATURE_DTYPE)


def read_frame(path) -> np.ndarray:
    try:
        with Image.open(path) as image:
            return np.asarray(image.convert("RGB"), dtype=np.uint8).copy()
    except OSError as e:
        raise IngestError(f"cannot read frame {path}: {e}") from e


class FeatureStore:
    """Persistent corpus of videos with precomputed clip features and frames.

    Immutable after open for readers; ingestion is single-writer.
    """

    def __init__(self, root, manifest: Optional[StoreManifest] = None):
        self.root = Path(root)
        self.manifest = manifest if manifest is not None else StoreManifest()
        self.logger = logging.getLogger(self.__class__.__name__)
        self._features: Dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    @classmethod
    def open(cls, root) -> "FeatureStore":
        return cls(root, load_store(root))

    def save(self) -> None:
        save_store(self.manifest, self.root)

    @property
    def feature_dim(self) -> Optional[int]:
        return self.manifest.feature_dim

    def video_ids(self) -> List[str]:
        return sorted(r.video_id for r in self.manifest.records)

    def record(self, video_id: str) -> VideoRecord:
        record = self.manifest.get(video_id)
        if record is None:
            raise UnknownVideoError(video_id)
        return record

    def ingest(self, video_id: str, frames_dir, features_path, fps: Optional[float] = None) -> VideoRecord:
        """Add a video; re-ingesting identical content returns the existing record."""
        sidecar = read_sidecar(features_path)
        features = read_feature_matrix(features_path, sidecar)
        num_clips, feature_dim = features.shape
        if sidecar is not None:
            if sidecar.get("num_clips", num_clips) != num_clips:
                raise IngestError(
                    f"{features_path}: {num_clips} feature rows but sidecar declares {sidecar['num_clips']} clips"
                )
            if sidecar.get("feature_dim", feature_dim) != feature_dim:
                raise DimensionMismatchError(sidecar["feature_dim"], feature_dim, "sidecar feature_dim")
            if fps is None:
                fps = sidecar.get("fps")
        if fps is None or fps <= 0:
            raise IngestError(f"video '{video_id}' needs a positive fps")

        frame_paths = sorted(
            (p for p in Path(frames_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES), key=frame_sort_key
        )
        if not frame_paths:
            raise IngestError(f"no frames found in {frames_dir}")
        frames = [read_frame(p) for p in frame_paths]
        return self.ingest_arrays(video_id, frames, features, float(fps))

    def ingest_arrays(self, video_id: str, frames: List[np.ndarray], features: np.ndarray, fps: float) -> VideoRecord:
        features = np.ascontiguousarray(features, dtype=FEATURE_DTYPE)
        num_clips, feature_dim = features.shape
        if self.manifest.feature_dim is not None and feature_dim != self.manifest.feature_dim:
            raise DimensionMismatchError(self.manifest.feature_dim, feature_dim)

        content_hash = self._content_hash(features, frames, fps)
        existing = self.manifest.get(video_id)
        if existing is not None:
            if existing.content_hash == content_hash:
                self.logger.info(f"Video {video_id} already ingested with identical content")
                return existing
            raise StoreConflictError(video_id)

        record = VideoRecord(
            video_id=video_id,
            num_clips=num_clips,
            feature_dim=feature_dim,
            fps=fps,
            frame_dir=video_id,
            num_frames=len(frames),
            clip_frame_ranges=partition_clips(len(frames), num_clips),
            content_hash=content_hash,
        )

        self.root.mkdir(parents=True, exist_ok=True)
        features.tofile(self.root / f"{video_id}.features")
        (self.root / f"{video_id}.features.json").write_text(
            json.dumps({"num_clips": num_clips, "feature_dim": feature_dim, "fps": fps, "dtype": FEATURE_DTYPE}),
            encoding="utf-8",
        )
        frame_dir = self.root / record.frame_dir
        frame_dir.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(frames):
            Image.fromarray(frame).save(frame_dir / FRAME_PATTERN.format(i))

        self.manifest = StoreManifest(
            schema_version=self.manifest.schema_version,
            feature_dim=feature_dim,
            records=[*self.manifest.records, record],
        )
        self.save()
        self.logger.info(f"Ingested {video_id}: {num_clips} clips x {feature_dim} dims, {len(frames)} frames")
        return record

    def get_features(self, video_id: str) -> np.ndarray:
        record = self.record(video_id)
        with self._lock:
            cached = self._features.get(video_id)
            if cached is None:
                raw = np.fromfile(self.root / f"{video_id}.features", dtype=FEATURE_DTYPE)
                cached = raw.reshape(record.num_clips, record.feature_dim)
                cached.setflags(write=False)
                self._features[video_id] = cached
        return cached

    def feature_corpus(self) -> Dict[str, np.ndarray]:
        """video_id -> clip feature matrix, in video id order."""
        return {video_id: self.get_features(video_id) for video_id in self.video_ids()}

    def get_frames(self, video_id: str, clip_span: Tuple[int, int]) -> List[np.ndarray]:
        record = self.record(video_id)
        start, end = clip_span
        if not (0 <= start <= end < record.num_clips):
            raise SpanError(f"clip span ({start}, {end}) invalid for '{video_id}' with {record.num_clips} clips")
        first = record.clip_frame_ranges[start][0]
        last = record.clip_frame_ranges[end][1]
        frame_dir = self.root / record.frame_dir
        return [read_frame(frame_dir / FRAME_PATTERN.format(i)) for i in range(first, last + 1)]

    @staticmethod
    def _content_hash(features: np.ndarray, frames: List[np.ndarray], fps: float) -> str:
        h = hashlib.sha256()
        h.update(repr(features.shape).encode())
        h.update(features.tobytes())
        h.update(repr(float(fps)).encode())
        for frame in frames:
            h.update(repr(frame.shape).encode())
            h.update(np.ascontiguousarray(frame, dtype=np.uint8).tobytes())
        return h.hexdigest()
