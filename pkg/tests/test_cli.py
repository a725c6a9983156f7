import json

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from cli import main
from core.feature_store import FeatureStore


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, *args):
    result = runner.invoke(main, [str(a) for a in args], catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def _edit_config(tmp_path):
    path = tmp_path / "edit.json"
    path.write_text(json.dumps({"steps": 5, "resolution": 32}))
    return path


class TestIngestAndGround:
    def test_ingest_then_ground(self, runner, tmp_path, frames_factory):
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        for k, frame in enumerate(frames_factory(6, 32, 0)):
            Image.fromarray(frame).save(frames_dir / f"{k:06d}.png")
        features = tmp_path / "clips.npy"
        np.save(features, np.random.default_rng(0).standard_normal((3, 8)).astype(np.float32))

        _invoke(runner, "ingest", "--store", tmp_path / "store", "--video-id", "walk",
                         "--frames", frames_dir, "--features", features, "--fps", 25)
        store = FeatureStore.open(tmp_path / "store")
        assert store.video_ids() == ["walk"]
        assert store.get_features("walk").shape == (3, 8)

        queries = tmp_path / "queries.txt"
        queries.write_text("a man walks\n\na man sits\n")
        out = tmp_path / "grounding.json"
        _invoke(runner, "ground", "--queries", queries, "--store", tmp_path / "store", "--top-k", 2, "--out", out)
        results = json.loads(out.read_text())
        assert [r["query"] for r in results] == ["a man walks", "a man sits"]
        assert all(r["truncated"] for r in results)

    def test_store_errors_become_usage_errors(self, runner, tmp_path):
        store = tmp_path / "store"
        store.mkdir()
        (store / "store.json").write_text("{broken")
        queries = tmp_path / "queries.txt"
        queries.write_text("q\n")
        result = runner.invoke(main, ["ground", "--queries", str(queries), "--store", str(store),
                                      "--out", str(tmp_path / "out.json")])
        assert result.exit_code == 1
        assert "store.json" in result.output


class TestEditAndMorph:
    def test_edit_then_morph(self, runner, tmp_path, store_builder):
        store = store_builder(num_videos=2, num_clips=2, frames_per_clip=2)
        config = _edit_config(tmp_path)
        for index, video_id in enumerate(store.video_ids()):
            request = tmp_path / f"segment_{index}.json"
            request.write_text(json.dumps({
                "store": str(store.root),
                "query": "a square slides",
                "candidate": {"video_id": video_id, "start_clip": 0, "end_clip": 1, "score": 0.5},
            }))
            _invoke(runner, "edit", "--segment", request, "--query-edit", f"a circle slides {index}",
                    "--config", config, "--out", tmp_path / f"edited_{index}")
            assert len(list((tmp_path / f"edited_{index}" / "frames").glob("*.png"))) == 4

        _invoke(runner, "morph", "--prev", tmp_path / "edited_0", "--next", tmp_path / "edited_1", "--n", 3,
                "--steps", 5, "--finetune-steps", 0, "--out", tmp_path / "morph", "--save-lora")
        assert len(list((tmp_path / "morph" / "frames").glob("*.png"))) == 2
        assert (tmp_path / "morph" / "lora_prev.pt").exists()


class TestGenerateAndMetrics:
    def test_generate_writes_manifest(self, runner, tmp_path, store_builder):
        store = store_builder(num_videos=2, num_clips=2, frames_per_clip=2)
        config = tmp_path / "storyboard.json"
        config.write_text(json.dumps({
            "queries": [
                {"query": "a boat sails", "edited_query": "a boat sails at night"},
                {"query": "a bird lands", "edited_query": "an owl lands"},
            ],
            "store": str(store.root),
            "output_dir": str(tmp_path / "ignored"),
            "edit": {"steps": 5, "resolution": 32},
            "transition": {"n": 3, "finetune_steps": 0},
        }))
        result = _invoke(runner, "generate", "--config", config, "--out", tmp_path / "run")
        assert result.output.strip().endswith("manifest.json")
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert len(manifest["transitions"]) == 1
        assert not (tmp_path / "ignored").exists()

        scores = tmp_path / "scores.json"
        result = _invoke(runner, "metrics", "--frames", tmp_path / "run" / "frames", "--out", scores)
        assert "temporal_flickering" in result.output
        assert json.loads(scores.read_text())[0]["status"] == "ok"

    def test_invalid_config_is_reported(self, runner, tmp_path):
        config = tmp_path / "storyboard.json"
        config.write_text(json.dumps({"queries": [], "store": "s", "output_dir": "o"}))
        result = runner.invoke(main, ["generate", "--config", str(config)])
        assert result.exit_code == 1
        assert "queries" in result.output
