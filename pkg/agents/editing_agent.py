import asyncio
from typing import Dict

from agents.base_stage_agent import BaseStageAgent
from core.models import RunContext
from editing.segment import EditedSegment, edit_segment


class EditingAgent(BaseStageAgent):
    """Edits every grounded segment; segments share no state and run concurrently."""

    def __init__(self, jobs: int = 1):
        super().__init__("editing")
        self.jobs = jobs

    async def execute(self, context: RunContext) -> Dict:
        config = context.config
        limit = asyncio.Semaphore(self.jobs)

        async def edit(index: int) -> EditedSegment:
            pair = config.queries[index]
            candidate = context.chosen[index]
            span = (candidate.start_clip, candidate.end_clip)
            async with limit:
                frames = await asyncio.to_thread(context.store.get_frames, candidate.video_id, span)
                segment = await asyncio.to_thread(
                    edit_segment,
                    frames,
                    pair.query,
                    pair.edited_query,
                    config.edit,
                    context.backend,
                    context.schedule,
                    candidate.video_id,
                    span,
                )
            self.logger.info(f"Segment {index}: {len(segment.frames)} frames edited to {pair.edited_query!r}")
            return segment

        # gather keeps query order regardless of completion order
        context.edited_segments = list(await asyncio.gather(*(edit(k) for k in range(len(config.queries)))))
        return {"frames": [len(s.frames) for s in context.edited_segments]}
