import asyncio
import time
from typing import Dict

from agents.base_stage_agent import BaseStageAgent
from core.metrics import finetune_duration_ms
from core.models import RunContext
from core.seeds import derive_seed
from diffusion.toy_backend import ToyConvBackend
from personalization.subject import personalize


class PersonalizationAgent(BaseStageAgent):
    """Swaps the run backend for a subject-personalized one, used by editing and morphing alike."""

    def __init__(self):
        super().__init__("personalization")

    async def execute(self, context: RunContext) -> Dict:
        config = context.config
        if config.personalized_weights is not None:
            context.backend = await asyncio.to_thread(ToyConvBackend.load, config.personalized_weights)
            context.personalization = {"weights": str(config.personalized_weights)}
            self.logger.info(f"Using personalized weights {config.personalized_weights}")
            return context.personalization

        start = time.perf_counter()
        result = await asyncio.to_thread(
            personalize,
            context.backend,
            config.personalization,
            context.schedule,
            None,
            config.edit.resolution,
            derive_seed(config.seed, "personalization"),
        )
        finetune_duration_ms.labels(kind="personalization").observe((time.perf_counter() - start) * 1000)
        context.backend = result.backend
        context.personalization = result.summary()
        return context.personalization
