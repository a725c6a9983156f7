import asyncio
import time
from typing import Dict

from agents.base_stage_agent import BaseStageAgent
from core.errors import NoMatchError
from core.metrics import retrieval_latency_ms
from core.models import RunContext
from grounding.retrieval import retrieve


class GroundingAgent(BaseStageAgent):
    """Retrieves one source moment per query pair."""

    def __init__(self, jobs: int = 1):
        super().__init__("grounding")
        self.jobs = jobs

    async def execute(self, context: RunContext) -> Dict:
        config = context.config
        queries = [pair.query for pair in config.queries]
        top_k = max(config.top_k, config.candidate_rank + 1)

        start = time.perf_counter()
        results = await asyncio.to_thread(
            retrieve,
            queries,
            context.store.feature_corpus(),
            context.grounding_weights,
            context.text_encoder,
            top_k,
            self.jobs,
        )
        retrieval_latency_ms.observe((time.perf_counter() - start) * 1000)

        chosen = []
        for result in results:
            usable = [c for c in result.candidates if c.score >= config.min_score]
            if len(usable) <= config.candidate_rank:
                raise NoMatchError(result.query)
            chosen.append(usable[config.candidate_rank])
            self.logger.info(f"{result.query!r} -> {chosen[-1].video_id} {chosen[-1].start_clip}-{chosen[-1].end_clip}"
                             f" (score {chosen[-1].score:.4f})")

        context.retrievals = results
        context.chosen = chosen
        return {"chosen": [c.model_dump() for c in chosen]}
