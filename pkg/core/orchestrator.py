import logging
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from core.artifact_store import ArtifactStore
from core.errors import EmptyStoreError
from core.feature_store import FeatureStore
from core.metrics import frames_written_total, runs_total, stage_duration_ms
from core.models import (
    MetricEntry,
    PipelineStage,
    RunContext,
    RunManifest,
    SegmentRecord,
    StoryboardConfig,
    TransitionRecord,
)
from core.seeds import derive_seed
from core.state_machine import PipelineStateMachine
from agents.base_stage_agent import BaseStageAgent
from agents.editing_agent import EditingAgent
from agents.grounding_agent import GroundingAgent
from agents.morphing_agent import MorphingAgent
from agents.personalization_agent import PersonalizationAgent
from diffusion.factory import build_backend
from diffusion.schedule import make_schedule
from grounding.text_encoder import FileTextEncoder, HashTextEncoder
from grounding.weights import GroundingWeights
from monitoring.quality import FLICKERING, temporal_flickering

RUN_ID_LENGTH = 16


class PipelineOrchestrator:
    """Runs a storyboard: personalize? -> ground -> edit -> morph? -> write."""

    def __init__(self):
        self.runs: Dict[str, RunContext] = {}
        self.manifests: Dict[str, RunManifest] = {}
        self.logger = logging.getLogger(self.__class__.__name__)

    def _plan(self, config: StoryboardConfig) -> List[Tuple[PipelineStage, BaseStageAgent]]:
        plan = []
        if config.personalization is not None or config.personalized_weights is not None:
            plan.append((PipelineStage.PERSONALIZING, PersonalizationAgent()))
        plan.append((PipelineStage.GROUNDING, GroundingAgent(config.jobs)))
        plan.append((PipelineStage.EDITING, EditingAgent(config.jobs)))
        if config.transition.enabled and len(config.queries) > 1:
            plan.append((PipelineStage.MORPHING, MorphingAgent(config.jobs)))
        return plan

    def _prepare(self, context: RunContext) -> None:
        config = context.config
        store = FeatureStore.open(config.store)
        if not store.video_ids():
            raise EmptyStoreError(f"feature store {config.store} has no videos")
        if config.grounding_weights is not None:
            weights = GroundingWeights.load(config.grounding_weights)
        else:
            weights = GroundingWeights.default(store.feature_dim, config.joint_dim, derive_seed(config.seed, "grounding"))
        if config.query_embeddings is not None:
            encoder = FileTextEncoder(config.query_embeddings)
        else:
            encoder = HashTextEncoder(dim=weights.joint_dim, seed=derive_seed(config.seed, "query"))

        context.store = store
        context.grounding_weights = weights
        context.text_encoder = encoder
        context.schedule = make_schedule(config.edit.steps, config.edit.schedule_kind, config.edit.alpha_min)
        context.backend = build_backend(config.backend, config.seed, context.schedule)

    async def generate(self, config: StoryboardConfig) -> RunManifest:
        """Run every stage for `config` and write frames plus manifest under `config.output_dir`."""
        config_hash = config.config_hash()
        run_id = config_hash[:RUN_ID_LENGTH]
        context = RunContext(run_id=run_id, config=config)
        self.runs[run_id] = context
        fsm = PipelineStateMachine(context)
        self.logger.info(f"Starting run {run_id} with {len(config.queries)} query pairs")

        try:
            self._prepare(context)
            for stage, agent in self._plan(config):
                fsm.transition_to(stage, reason=f"{agent.agent_id}_started")
                start = time.perf_counter()
                await agent.execute(context)
                stage_duration_ms.labels(stage=stage.value).observe((time.perf_counter() - start) * 1000)

            fsm.transition_to(PipelineStage.WRITING, reason="stages_completed")
            manifest = self._write(context, config_hash)
            fsm.transition_to(PipelineStage.COMPLETED, reason="manifest_written")
        except Exception as e:
            self.logger.error(f"Run {run_id} failed during {context.current_stage.value}: {e}")
            fsm.transition_to(PipelineStage.FAILED, reason=f"{context.current_stage.value}_failed: {e}")
            runs_total.labels(outcome="failed").inc()
            raise

        runs_total.labels(outcome="completed").inc()
        self.manifests[run_id] = manifest
        return manifest

    def _write(self, context: RunContext, config_hash: str) -> RunManifest:
        config = context.config
        artifacts = ArtifactStore(config.output_dir)
        artifacts.reset()

        segment_records, transition_records, all_frames = [], [], []
        for k, segment in enumerate(context.edited_segments):
            first = artifacts.write_frames(segment.frames)
            frames_written_total.labels(source="segment").inc(len(segment.frames))
            all_frames.extend(segment.frames)
            source = context.chosen[k]
            artifacts.write_segment(k, segment.audit())
            segment_records.append(SegmentRecord(
                index=k,
                query=config.queries[k].query,
                edited_query=config.queries[k].edited_query,
                candidate=source,
                source_frame_count=len(segment.source_latents),
                output_frame_count=len(segment.frames),
                first_output_frame=first,
                noise_digests=segment.noise_digests,
            ))
            if k < len(context.transitions):
                transition = context.transitions[k]
                first = artifacts.write_frames(transition.frames)
                frames_written_total.labels(source="transition").inc(len(transition.frames))
                all_frames.extend(transition.frames)
                transition_records.append(TransitionRecord(
                    after_segment=k,
                    n=config.transition.n,
                    frame_count=len(transition.frames),
                    first_output_frame=first,
                    alphas=transition.alphas,
                    seeds=transition.seeds,
                    initial_losses=[transition.report_i.initial_loss, transition.report_j.initial_loss],
                    final_losses=[transition.report_i.final_loss, transition.report_j.final_loss],
                ))
        artifacts.write_frame_list()

        metrics = []
        if len(all_frames) >= 2:
            metrics.append(MetricEntry(name=FLICKERING, status="ok", value=temporal_flickering(all_frames)))

        notes = ["frames carry no timing; source fps per video is recorded in the store manifest"]
        if not config.transition.enabled:
            notes.append("morphing disabled")

        manifest = RunManifest(
            run_id=context.run_id,
            config_hash=config_hash,
            config=config.reproducible_payload(),
            seed=config.seed,
            schedule_kind=context.schedule.kind,
            schedule=context.schedule.to_list(),
            segments=segment_records,
            transitions=transition_records,
            total_frames=artifacts.frame_count,
            metrics=metrics,
            personalization=context.personalization,
            notes=notes,
        )
        artifacts.write_manifest(manifest)
        return manifest

    def get_run(self, run_id: str) -> Optional[RunContext]:
        return self.runs.get(run_id)

    def get_manifest(self, run_id: str) -> Optional[RunManifest]:
        return self.manifests.get(run_id)

    @staticmethod
    def load_manifest(output_dir) -> Optional[RunManifest]:
        return ArtifactStore(Path(output_dir)).read_manifest()
