import numpy as np
import pytest
from PIL import Image

from core.errors import MetricError
from monitoring.quality import FLICKERING, MetricPlugin, metrics_report, temporal_flickering


def _write_frames(directory, frames):
    directory.mkdir(parents=True, exist_ok=True)
    for k, frame in enumerate(frames):
        Image.fromarray(frame).save(directory / f"{k:06d}.png")
    return directory


def _script(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(f"#!/bin/sh\n{body}\n")
    path.chmod(0o755)
    return path


class TestTemporalFlickering:
    def test_static_video_scores_full(self):
        frame = np.full((8, 8, 3), 120, dtype=np.uint8)
        assert temporal_flickering([frame] * 5) == 100.0

    def test_black_white_alternation_scores_zero(self):
        black = np.zeros((8, 8, 3), dtype=np.uint8)
        white = np.full((8, 8, 3), 255, dtype=np.uint8)
        assert temporal_flickering([black, white, black, white]) == 0.0

    def test_checkerboard_phase_flip_scores_zero(self):
        board = (np.indices((8, 8)).sum(axis=0) % 2 * 255).astype(np.uint8)
        frame = np.repeat(board[:, :, None], 3, axis=2)
        assert temporal_flickering([frame, 255 - frame]) == 0.0

    def test_global_brightness_shift_does_not_change_score(self, frames_factory):
        frames = [np.clip(f, 20, 200) for f in frames_factory(6, 16, 0)]
        brighter = [f + np.uint8(40) for f in frames]
        assert temporal_flickering(brighter) == pytest.approx(temporal_flickering(frames))

    def test_needs_two_frames(self):
        with pytest.raises(MetricError):
            temporal_flickering([np.zeros((4, 4, 3), dtype=np.uint8)])

    def test_shape_mismatch(self):
        with pytest.raises(MetricError):
            temporal_flickering([np.zeros((4, 4, 3), dtype=np.uint8), np.zeros((8, 8, 3), dtype=np.uint8)])


class TestMetricPlugins:
    def test_numeric_score(self, tmp_path):
        plugin = _script(tmp_path, "motion_smoothness.sh", "echo warming up\necho 73.07")
        entry = MetricPlugin(str(plugin)).run(tmp_path)
        assert (entry.name, entry.status, entry.value) == ("motion_smoothness", "ok", 73.07)

    def test_nonzero_exit_is_failed(self, tmp_path):
        plugin = _script(tmp_path, "aesthetic.sh", "exit 3")
        entry = MetricPlugin(str(plugin)).run(tmp_path)
        assert entry.status == "failed"
        assert "3" in entry.detail

    def test_non_numeric_output_is_failed(self, tmp_path):
        plugin = _script(tmp_path, "chatty.sh", "echo done")
        assert MetricPlugin(str(plugin)).run(tmp_path).status == "failed"

    def test_missing_executable_is_unavailable(self, tmp_path):
        entry = MetricPlugin(str(tmp_path / "does_not_exist")).run(tmp_path)
        assert entry.status == "unavailable"
        assert entry.value is None

    def test_report_orders_builtin_first(self, tmp_path, frames_factory):
        frames_dir = _write_frames(tmp_path / "frames", frames_factory(4, 16, 1))
        good = _script(tmp_path, "good.sh", "echo 50")
        report = metrics_report(frames_dir, [str(good), str(tmp_path / "missing")])
        assert [entry.name for entry in report] == [FLICKERING, "good", "missing"]
        assert [entry.status for entry in report] == ["ok", "ok", "unavailable"]
        assert 0.0 <= report[0].value <= 100.0

    def test_report_without_frames(self, tmp_path):
        with pytest.raises(MetricError):
            metrics_report(tmp_path)
