"""Integration tests for the full storyboard pipeline."""

import pytest
from PIL import Image

from core.errors import NoMatchError
from core.models import PipelineStage, StoryboardConfig
from core.orchestrator import PipelineOrchestrator


def _config(store, output_dir, queries=None, **overrides):
    raw = {
        "queries": queries or [
            {"query": "a person walks a dog", "edited_query": "a person walks a robot dog"},
            {"query": "a dog catches a ball", "edited_query": "a robot dog catches a ball"},
        ],
        "store": str(store),
        "output_dir": str(output_dir),
        "edit": {"steps": 20, "resolution": 32},
        "transition": {"n": 5, "finetune_steps": 10},
        "seed": 3,
    }
    raw.update(overrides)
    return StoryboardConfig.model_validate(raw)


class TestPipelineGenerate:
    """Grounding, editing and morphing end to end on a synthetic store."""

    @pytest.fixture
    def store(self, store_builder):
        return store_builder(num_videos=3, num_clips=4, frames_per_clip=2)

    @pytest.mark.asyncio
    async def test_frames_are_conserved(self, store, tmp_path):
        orchestrator = PipelineOrchestrator()
        manifest = await orchestrator.generate(_config(store.root, tmp_path / "run"))

        assert len(manifest.segments) == 2
        assert len(manifest.transitions) == 1
        assert manifest.transitions[0].frame_count == 4
        assert manifest.transitions[0].alphas == pytest.approx([0.2, 0.4, 0.6, 0.8])
        segment_frames = sum(s.output_frame_count for s in manifest.segments)
        assert manifest.total_frames == segment_frames + 4
        for segment in manifest.segments:
            span = segment.candidate.end_clip - segment.candidate.start_clip + 1
            assert segment.output_frame_count == segment.source_frame_count == 2 * span

        frame_files = sorted((tmp_path / "run" / "frames").glob("*.png"))
        assert len(frame_files) == manifest.total_frames
        assert (tmp_path / "run" / "frames.txt").read_text().count("\n") == manifest.total_frames
        assert PipelineOrchestrator.load_manifest(tmp_path / "run") == manifest

        context = orchestrator.get_run(manifest.run_id)
        assert context.current_stage == PipelineStage.COMPLETED
        assert context.stage_history == ["GROUNDING", "EDITING", "MORPHING", "WRITING", "COMPLETED"]

    @pytest.mark.asyncio
    async def test_reruns_are_identical(self, store, tmp_path):
        first = await PipelineOrchestrator().generate(_config(store.root, tmp_path / "a"))
        second = await PipelineOrchestrator().generate(_config(store.root, tmp_path / "b", jobs=2))

        assert first.run_id == second.run_id
        assert first.model_dump() == second.model_dump()
        frames_a = sorted((tmp_path / "a" / "frames").glob("*.png"))
        frames_b = sorted((tmp_path / "b" / "frames").glob("*.png"))
        assert [p.read_bytes() for p in frames_a] == [p.read_bytes() for p in frames_b]

    @pytest.mark.asyncio
    async def test_manifest_alone_reproduces_the_run(self, store, tmp_path):
        config = _config(store.root, tmp_path / "a", top_k=2, edit={"steps": 12, "resolution": 32, "control": "edge",
                         "hooks": [{"weight": 0.7, "step_range": [0, 6]}]},
                         transition={"n": 4, "finetune_steps": 6, "rank": 2, "learning_rate": 0.05},
                         backend={"pretrain_steps": 20})
        original = await PipelineOrchestrator().generate(config)

        stored = PipelineOrchestrator.load_manifest(tmp_path / "a")
        assert stored.config["edit"]["hooks"][0]["weight"] == 0.7
        assert stored.config["transition"]["rank"] == 2
        assert stored.config["backend"]["pretrain_steps"] == 20
        replayed = await PipelineOrchestrator().generate(stored.replay_config(tmp_path / "b"))

        assert replayed.model_dump() == original.model_dump()
        frames_a = sorted((tmp_path / "a" / "frames").glob("*.png"))
        frames_b = sorted((tmp_path / "b" / "frames").glob("*.png"))
        assert [p.read_bytes() for p in frames_a] == [p.read_bytes() for p in frames_b]

    @pytest.mark.asyncio
    async def test_morphing_disabled(self, store, tmp_path):
        config = _config(store.root, tmp_path / "run", transition={"enabled": False})
        manifest = await PipelineOrchestrator().generate(config)
        assert manifest.transitions == []
        assert manifest.total_frames == sum(s.output_frame_count for s in manifest.segments)
        assert "morphing disabled" in manifest.notes

    @pytest.mark.asyncio
    async def test_single_query(self, store, tmp_path):
        config = _config(store.root, tmp_path / "run",
                         queries=[{"query": "a cyclist climbs", "edited_query": "a cyclist climbs in snow"}])
        manifest = await PipelineOrchestrator().generate(config)
        assert len(manifest.segments) == 1
        assert manifest.transitions == []

    @pytest.mark.asyncio
    async def test_no_match_fails_the_run(self, store, tmp_path):
        orchestrator = PipelineOrchestrator()
        config = _config(store.root, tmp_path / "run", min_score=1.0)
        with pytest.raises(NoMatchError):
            await orchestrator.generate(config)
        context = orchestrator.get_run(config.config_hash()[:16])
        assert context.current_stage == PipelineStage.FAILED
        assert not (tmp_path / "run" / "manifest.json").exists()

    @pytest.mark.asyncio
    async def test_personalized_run(self, store, frames_factory, tmp_path):
        subject_dir = tmp_path / "subject"
        subject_dir.mkdir()
        paths = []
        for k, frame in enumerate(frames_factory(3, 32, 42)):
            path = subject_dir / f"{k}.png"
            Image.fromarray(frame).save(path)
            paths.append(str(path))
        config = _config(
            store.root,
            tmp_path / "run",
            personalization={"identifier_token": "[V]", "class_name": "dog", "image_paths": paths, "steps": 5},
        )
        orchestrator = PipelineOrchestrator()
        manifest = await orchestrator.generate(config)
        assert manifest.personalization["prompt"] == "A [V] dog"
        assert manifest.personalization["steps"] == 5
        assert orchestrator.get_run(manifest.run_id).stage_history[0] == "PERSONALIZING"
