import json

import numpy as np
import pytest
from PIL import Image

from core.errors import (
    DimensionMismatchError,
    IngestError,
    SchemaMigrationError,
    SpanError,
    StoreConflictError,
    StoreParseError,
    UnknownVideoError,
)
from core.feature_store import FeatureStore, load_store, partition_clips, save_store
from core.models import StoreManifest


def _write_video(directory, frames, features, sidecar=None):
    frames_dir = directory / "frames"
    frames_dir.mkdir(parents=True)
    for i, frame in enumerate(frames):
        Image.fromarray(frame).save(frames_dir / f"{i:04d}.png")
    features_path = directory / "clips.npy"
    np.save(features_path, features)
    if sidecar is not None:
        (directory / "clips.npy.json").write_text(json.dumps(sidecar))
    return frames_dir, features_path


class TestIngest:
    def test_ingest_sixteen_clips_of_ten_frames(self, tmp_path, frames_factory):
        frames_dir, features_path = _write_video(
            tmp_path / "src", frames_factory(160, size=16), np.ones((16, 512), dtype=np.float32)
        )
        store = FeatureStore.open(tmp_path / "store")
        record = store.ingest("v1", frames_dir, features_path, fps=25.0)

        assert record.num_clips == 16
        assert record.feature_dim == 512
        assert all(last - first + 1 == 10 for first, last in record.clip_frame_ranges)
        assert store.feature_dim == 512

    def test_reingest_identical_content_is_idempotent(self, tmp_path, frames_factory):
        frames_dir, features_path = _write_video(
            tmp_path / "src", frames_factory(8, size=16), np.arange(32, dtype=np.float32).reshape(4, 8)
        )
        store = FeatureStore.open(tmp_path / "store")
        first = store.ingest("v1", frames_dir, features_path, fps=10.0)
        second = store.ingest("v1", frames_dir, features_path, fps=10.0)

        assert first == second
        assert len(store.manifest.records) == 1

    def test_same_id_different_content_conflicts(self, store_builder, frames_factory):
        store = store_builder(num_videos=1, feature_dim=8)
        with pytest.raises(StoreConflictError):
            store.ingest_arrays("video_00", frames_factory(8, size=16), np.zeros((4, 8)), fps=10.0)

    def test_dimension_mismatch_names_both_dims(self, store_builder, frames_factory):
        store = store_builder(num_videos=1, feature_dim=512)
        with pytest.raises(DimensionMismatchError) as exc:
            store.ingest_arrays("other", frames_factory(16, size=16), np.zeros((16, 500)), fps=10.0)
        assert "512" in str(exc.value) and "500" in str(exc.value)

    def test_sidecar_clip_count_must_match(self, tmp_path, frames_factory):
        frames_dir, features_path = _write_video(
            tmp_path / "src", frames_factory(8, size=16), np.zeros((4, 8), dtype=np.float32),
            sidecar={"num_clips": 5, "feature_dim": 8, "fps": 10.0},
        )
        with pytest.raises(IngestError):
            FeatureStore.open(tmp_path / "store").ingest("v1", frames_dir, features_path)

    def test_fps_falls_back_to_sidecar(self, tmp_path, frames_factory):
        frames_dir, features_path = _write_video(
            tmp_path / "src", frames_factory(8, size=16), np.zeros((4, 8), dtype=np.float32),
            sidecar={"num_clips": 4, "feature_dim": 8, "fps": 12.5},
        )
        record = FeatureStore.open(tmp_path / "store").ingest("v1", frames_dir, features_path)
        assert record.fps == 12.5

    def test_flat_binary_features_with_sidecar(self, tmp_path, frames_factory):
        src = tmp_path / "src"
        frames_dir, _ = _write_video(src, frames_factory(8, size=16), np.zeros((1, 1)))
        features = np.arange(32, dtype="<f4").reshape(4, 8)
        features_path = src / "v1.features"
        features.tofile(features_path)
        (src / "v1.features.json").write_text(json.dumps({"num_clips": 4, "feature_dim": 8, "fps": 10}))

        store = FeatureStore.open(tmp_path / "store")
        record = store.ingest("v1", frames_dir, features_path)

        assert (record.num_clips, record.feature_dim, record.fps) == (4, 8, 10.0)
        np.testing.assert_array_equal(store.get_features("v1"), features)

    def test_flat_binary_byte_count_must_match_sidecar(self, tmp_path, frames_factory):
        src = tmp_path / "src"
        frames_dir, _ = _write_video(src, frames_factory(8, size=16), np.zeros((1, 1)))
        features_path = src / "v1.features"
        np.zeros((4, 7), dtype="<f4").tofile(features_path)
        (src / "v1.features.json").write_text(json.dumps({"num_clips": 4, "feature_dim": 8, "fps": 10}))

        with pytest.raises(IngestError, match="bytes"):
            FeatureStore.open(tmp_path / "store").ingest("v1", frames_dir, features_path)

    def test_unpadded_frame_names_keep_numeric_order(self, tmp_path, frames_factory):
        frames = frames_factory(12, size=16)
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        for i, frame in enumerate(frames):
            Image.fromarray(frame).save(frames_dir / f"{i}.png")
        features_path = tmp_path / "clips.npy"
        np.save(features_path, np.ones((4, 8), dtype=np.float32))

        store = FeatureStore.open(tmp_path / "store")
        store.ingest("v1", frames_dir, features_path, fps=10.0)

        stored = store.get_frames("v1", (0, 3))
        assert all(np.array_equal(a, b) for a, b in zip(stored, frames))

    def test_fewer_frames_than_clips_rejected(self, store_builder, frames_factory):
        store = store_builder(num_videos=0)
        with pytest.raises(IngestError):
            store.ingest_arrays("tiny", frames_factory(3, size=16), np.zeros((4, 16)), fps=10.0)


def test_partition_last_clip_absorbs_remainder():
    assert partition_clips(10, 3) == [(0, 2), (3, 5), (6, 9)]
    assert partition_clips(12, 3) == [(0, 3), (4, 7), (8, 11)]


class TestGetFrames:
    def test_single_clip_span(self, store_builder):
        store = store_builder(num_videos=1, num_clips=4, frames_per_clip=10)
        assert len(store.get_frames("video_00", (0, 0))) == 10

    def test_full_span_returns_all_frames_in_order(self, store_builder, frames_factory):
        store = store_builder(num_videos=1, num_clips=4, frames_per_clip=2)
        frames = store.get_frames("video_00", (0, 3))
        expected = frames_factory(8, 32, 0)
        assert len(frames) == 8
        assert all(np.array_equal(a, b) for a, b in zip(frames, expected))

    def test_reversed_span_rejected(self, store_builder):
        store = store_builder(num_videos=1)
        with pytest.raises(SpanError):
            store.get_frames("video_00", (3, 2))

    def test_unknown_video(self, store_builder):
        store = store_builder(num_videos=1)
        with pytest.raises(UnknownVideoError):
            store.get_frames("missing", (0, 0))

    def test_features_are_read_only_and_shared(self, store_builder):
        store = store_builder(num_videos=2, feature_dim=8)
        reopened = FeatureStore.open(store.root)
        a = reopened.get_features("video_01")
        assert a is reopened.get_features("video_01")
        assert not a.flags.writeable
        np.testing.assert_array_equal(a, store.get_features("video_01"))


class TestManifestPersistence:
    def test_save_then_load_is_identity(self, store_builder, tmp_path):
        store = store_builder(num_videos=3)
        save_store(store.manifest, tmp_path / "copy")
        assert load_store(tmp_path / "copy") == store.manifest

    def test_empty_directory_is_empty_store(self, tmp_path):
        manifest = load_store(tmp_path)
        assert manifest == StoreManifest()
        assert manifest.feature_dim is None

    def test_corrupted_manifest_names_path(self, tmp_path):
        (tmp_path / "store.json").write_text("{not json")
        with pytest.raises(StoreParseError) as exc:
            load_store(tmp_path)
        assert "store.json" in str(exc.value)

    def test_schema_version_mismatch(self, tmp_path):
        (tmp_path / "store.json").write_text(json.dumps({"schema_version": 99, "records": []}))
        with pytest.raises(SchemaMigrationError):
            load_store(tmp_path)
