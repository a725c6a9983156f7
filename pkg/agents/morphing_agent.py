import asyncio
from typing import Dict

from agents.base_stage_agent import BaseStageAgent
from core.metrics import finetune_duration_ms
from core.models import RunContext
from core.seeds import derive_seed
from morphing.transition import TransitionResult, TransitionSpec, generate_transition


class MorphingAgent(BaseStageAgent):
    """Generates the transition between every pair of consecutive edited segments."""

    def __init__(self, jobs: int = 1):
        super().__init__("morphing")
        self.jobs = jobs

    async def execute(self, context: RunContext) -> Dict:
        config = context.config
        segments = context.edited_segments
        limit = asyncio.Semaphore(self.jobs)

        async def morph(k: int) -> TransitionResult:
            spec = TransitionSpec(
                frame_i=segments[k].frames[-1],
                frame_j=segments[k + 1].frames[0],
                query_i=config.queries[k].edited_query,
                query_j=config.queries[k + 1].edited_query,
                n=config.transition.n,
            )
            async with limit:
                result = await asyncio.to_thread(
                    generate_transition,
                    spec,
                    context.backend,
                    context.schedule,
                    config.transition,
                    derive_seed(config.seed, "transition", k),
                    self.jobs,
                )
            finetune_duration_ms.labels(kind="transition").observe(result.finetune_ms)
            self.logger.info(f"Transition {k}->{k + 1}: {len(result.frames)} frames")
            return result

        context.transitions = list(await asyncio.gather(*(morph(k) for k in range(len(segments) - 1))))
        return {"transitions": [len(t.frames) for t in context.transitions]}
